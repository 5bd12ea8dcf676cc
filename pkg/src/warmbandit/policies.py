"""MIN-UCB and the three baselines: index computation, selection, updates.

The vector formulas in :func:`index_vectors` are shared by the state-based
API below, the numpy simulation kernel and the combinatorial policy. The
numba kernel in :mod:`warmbandit.kernels` repeats them with the same
floating-point operation order, so all paths choose identical arms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation, RejectedInputError
from .model import BiasBound, MabInstance, OfflineDataset


class PolicyKind(enum.IntEnum):
    MinUcb = 0
    PureUcb = 1
    UcbSOnly = 2
    MonUcbPooled = 3

    @property
    def cli_name(self):
        return _CLI_NAMES[self]

    @classmethod
    def from_name(cls, name):
        for kind, cli in _CLI_NAMES.items():
            if name == cli:
                return kind
        raise ConfigurationError(f"unknown policy {name!r}; expected one of {sorted(_CLI_NAMES.values())}")


_CLI_NAMES = {
    PolicyKind.MinUcb: "min-ucb",
    PolicyKind.PureUcb: "pure-ucb",
    PolicyKind.UcbSOnly: "ucbs",
    PolicyKind.MonUcbPooled: "monucb",
}

SCHEDULE_DEP = "dep"
SCHEDULE_INDEP = "indep"


def delta_t(schedule, t, k, global_delta=None):
    """Confidence level at round ``t``: 1/(2Kt^2) or delta/(2Kt^2)."""
    if t < 1:
        raise RejectedInputError("round index t must be >= 1")
    return schedule_scale(schedule, global_delta) / (2.0 * k * t * t)


def schedule_scale(schedule, global_delta=None):
    if schedule == SCHEDULE_DEP:
        return 1.0
    if schedule == SCHEDULE_INDEP:
        if global_delta is None:
            raise ConfigurationError("the instance-independent schedule needs a global delta")
        if not 0.0 < global_delta < 1.0:
            raise ConfigurationError("global delta must lie in (0, 1)")
        return float(global_delta)
    raise ConfigurationError(f"unknown delta schedule {schedule!r}")


def log_term(t, dt):
    return math.log(2.0 * t / dt)


def compute_radii(t, dt, n_a, t_s_a, v_a):
    """Return ``(rad, rad_s)`` for one arm; ``0 * inf`` is taken as 0."""
    if n_a < 1:
        raise ContractViolation("radius needs at least one online pull")
    two_l = 2.0 * log_term(t, dt)
    rad = math.sqrt(two_l / n_a)
    tot = n_a + t_s_a
    rad_s = math.sqrt(two_l / tot)
    if t_s_a > 0:
        rad_s = rad_s + (t_s_a / tot) * v_a
    return rad, rad_s


def index_vectors(L, n, r_hat, t_s, x_hat, v):
    """Vanilla and warm-start UCB vectors at log term ``L = log(2t/dt)``.

    Returns ``(ucb, ucb_s, rad, rad_s)``. Arms without offline data get
    ``ucb_s == ucb`` exactly.
    """
    two_l = 2.0 * L
    rad = np.sqrt(two_l / n)
    ucb = r_hat + rad
    tot = n + t_s
    has = t_s > 0
    with np.errstate(invalid="ignore"):
        rad_s = np.sqrt(two_l / tot) + np.where(has, (t_s / tot) * v, 0.0)
        pooled = np.where(has, (n * r_hat + t_s * x_hat) / tot, r_hat)
    ucb_s = pooled + rad_s
    return ucb, ucb_s, rad, rad_s


@dataclass(frozen=True)
class IndexPair:
    ucb: np.ndarray
    ucb_s: np.ndarray
    rad: np.ndarray
    rad_s: np.ndarray

    @property
    def effective(self):
        return np.minimum(self.ucb, self.ucb_s)


@dataclass
class PolicyState:
    kind: PolicyKind
    n: np.ndarray          # counts entering the radius (pooled for MonUcbPooled)
    r_hat: np.ndarray      # running mean (pooled for MonUcbPooled)
    t: int
    k: int
    schedule: str
    delta: Optional[float]
    v: BiasBound
    offline_means: tuple
    t_s: np.ndarray
    n_online: np.ndarray

    @property
    def x_hat(self):
        return np.array([np.nan if m is None else m for m in self.offline_means])

    @property
    def initialized(self):
        return bool(np.all(self.n >= 1))

    def dt(self, t=None):
        return delta_t(self.schedule, self.t if t is None else t, self.k, self.delta)


def init_policy(kind, dataset: OfflineDataset, v: BiasBound, k=None,
                schedule=SCHEDULE_DEP, delta=None) -> PolicyState:
    kind = PolicyKind(kind)
    t_s = dataset.counts
    k = t_s.size if k is None else int(k)
    if t_s.size != k or len(v) != k:
        raise RejectedInputError(
            f"shape mismatch: dataset has {t_s.size} arms, bias bound {len(v)}, expected {k}")
    schedule_scale(schedule, delta)
    if kind is PolicyKind.MonUcbPooled:
        n = t_s.copy()
        r_hat = np.array([0.0 if m is None else m for m in dataset.mean_cache])
    else:
        n = np.zeros(k, dtype=np.int64)
        r_hat = np.zeros(k)
    return PolicyState(kind, n, r_hat, 1, k, schedule, delta, v,
                       tuple(dataset.mean_cache), t_s, np.zeros(k, dtype=np.int64))


def compute_indices(state: PolicyState, t=None) -> IndexPair:
    if not state.initialized:
        raise ContractViolation("compute_indices called before every arm has a sample")
    t = state.t if t is None else t
    L = log_term(t, state.dt(t))
    inf = np.full(state.k, np.inf)
    if state.kind is PolicyKind.MonUcbPooled:
        rad = np.sqrt(2.0 * L / state.n)
        return IndexPair(state.r_hat + rad, inf, rad, inf)
    ucb, ucb_s, rad, rad_s = index_vectors(L, state.n, state.r_hat, state.t_s, state.x_hat, state.v.v)
    if state.kind is PolicyKind.PureUcb:
        ucb_s = inf
    elif state.kind is PolicyKind.UcbSOnly:
        ucb = inf
    return IndexPair(ucb, ucb_s, rad, rad_s)


def select_arm(state: PolicyState, indices: Optional[IndexPair] = None) -> int:
    """Round-robin over unsampled arms, then argmax of min(ucb, ucb_s).

    Ties go to the lowest arm index.
    """
    empty = np.flatnonzero(state.n == 0)
    if empty.size:
        return int(empty[0])
    if indices is None:
        indices = compute_indices(state)
    return int(np.argmax(indices.effective))


def incremental_mean(n, mean, reward):
    if n == 0:
        return reward
    return n * mean / (n + 1) + reward / (n + 1)


def policy_update(state: PolicyState, arm, reward) -> PolicyState:
    if not 0 <= arm < state.k:
        raise RejectedInputError(f"arm {arm} out of range")
    state.r_hat[arm] = incremental_mean(int(state.n[arm]), float(state.r_hat[arm]), float(reward))
    state.n[arm] += 1
    state.n_online[arm] += 1
    state.t += 1
    return state


def xi_event(mu_on, mu_off, n, t_s, v, r_hat, x_hat, L):
    """Accurate-estimation event for every arm, broadcast over leading axes.

    Returns a boolean array shaped like ``r_hat`` holding xi_t(a) & xi^S_t(a).
    """
    ucb, ucb_s, rad, rad_s = index_vectors(L, n, r_hat, t_s, x_hat, v)
    tot = n + t_s
    ok = (mu_on <= ucb) & (ucb <= mu_on + 2.0 * rad)
    upper_s = mu_on + rad_s + np.sqrt(2.0 * L / tot) + t_s * (mu_off - mu_on) / tot
    ok_s = (mu_on <= ucb_s) & (ucb_s <= upper_s)
    return ok & ok_s


def xi_holds(instance: MabInstance, state: PolicyState, t=None, dt=None) -> bool:
    """Whether the accurate-estimation event holds for every arm at round t.

    Test-harness helper: it reads the true means from ``instance``.
    """
    if state.kind is PolicyKind.MonUcbPooled:
        raise ContractViolation("xi is defined for online-only running means")
    if not state.initialized:
        raise ContractViolation("xi needs every arm sampled at least once")
    t = state.t if t is None else t
    dt = state.dt(t) if dt is None else dt
    ev = xi_event(instance.mu_on, instance.mu_off, state.n, state.t_s, state.v.v,
                  state.r_hat, state.x_hat, log_term(t, dt))
    return bool(np.all(ev))

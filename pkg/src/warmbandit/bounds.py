"""Closed-form regret quantities: discrepancy, savings, tau*, bound profiles.

Order-level bounds are reported with every hidden constant set to 1 and both
branches of each minimum exposed. Only :func:`dep_upper_explicit` carries the
full constants and can be compared numerically against simulated regret.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .comb import CombInstance, Linear, default_model
from .errors import RejectedInputError
from .model import BiasBound, MabInstance, gap_profile


@dataclass(frozen=True)
class BoundQuery:
    epsilon: float = 0.5
    consistency_c: float = 1.0
    consistency_p: float = 0.5
    delta: float = 0.1

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise RejectedInputError("epsilon must lie in (0, 1]")
        if not self.consistency_c > 0:
            raise RejectedInputError("consistency constant C must be > 0")
        if not 0 < self.consistency_p < 1:
            raise RejectedInputError("consistency exponent p must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise RejectedInputError("delta must lie in (0, 1)")


def omega(v_a, mu_off_a, mu_on_a):
    """Discrepancy V(a) + (mu_off(a) - mu_on(a))."""
    return v_a + (mu_off_a - mu_on_a)


def _shortfall_sq(omega_a, scale):
    return max(1.0 - omega_a / scale, 0.0) ** 2


def sav0(t_s_a, delta_a, omega_a):
    if not delta_a > 0:
        raise RejectedInputError("saving is defined for sub-optimal arms only (gap > 0)")
    return t_s_a * delta_a * _shortfall_sq(omega_a, delta_a)


def sav_eps_and_kappa(query: BoundQuery, t_s_a, delta_a, omega_a):
    if not delta_a > 0:
        raise RejectedInputError("saving is defined for sub-optimal arms only (gap > 0)")
    eps = query.epsilon
    s = t_s_a * delta_a * _shortfall_sq(omega_a, (1.0 + eps) * delta_a)
    kappa = math.log(eps * delta_a / (8.0 * query.consistency_c)) / (2.0 * (1.0 + eps) ** 2 * delta_a)
    return s, kappa


def dep_upper_explicit(instance: MabInstance, v: BiasBound):
    """Fully explicit instance-dependent bound for the 1/(2Kt^2) schedule."""
    gaps = gap_profile(instance).delta
    om = omega(v.v, instance.mu_off, instance.mu_on)
    k, horizon = instance.k, instance.horizon
    log_term = math.log(4.0 * k * float(horizon) ** 4)
    total = math.pi ** 2 / 6.0 * float(gaps.max())
    for a in range(k):
        d = float(gaps[a])
        if d > 0:
            saving = sav0(instance.offline_counts[a], d, float(om[a]))
            total += max(32.0 * log_term / d - saving, d)
    return total


def dep_upper_profile_terms(instance: MabInstance, v: BiasBound):
    """Per-arm order-level terms log(T)/gap - Sav0 (None for optimal arms)."""
    gaps = gap_profile(instance).delta
    om = omega(v.v, instance.mu_off, instance.mu_on)
    log_t = math.log(instance.horizon)
    out = []
    for a in range(instance.k):
        d = float(gaps[a])
        out.append(log_t / d - sav0(instance.offline_counts[a], d, float(om[a])) if d > 0 else None)
    return out


@dataclass(frozen=True)
class WaterFill:
    tau_star: float
    n_star: np.ndarray
    tau_exact: Fraction
    n_exact: tuple


def tau_star_waterfill(t_s, t, mass=None) -> WaterFill:
    """Solve sum_a max(tau - T_S(a), 0) = mass (mass defaults to the horizon).

    This is the optimum of max tau s.t. tau <= T_S(a) + n(a), sum n = mass,
    n >= 0. Breakpoints are scanned in sorted order and the final linear
    piece is solved in exact rational arithmetic.
    """
    t_s = [int(x) for x in np.asarray(t_s).reshape(-1)]
    if not t_s:
        raise RejectedInputError("water-filling needs at least one arm")
    if any(x < 0 for x in t_s):
        raise RejectedInputError("offline counts must be non-negative")
    mass = Fraction(t if mass is None else mass)
    if not mass > 0:
        raise RejectedInputError("mass must be > 0")
    levels = sorted(t_s)
    k = len(levels)
    prefix = 0
    tau = None
    for j in range(1, k + 1):
        prefix += levels[j - 1]
        cand = (mass + prefix) / j
        if j == k or cand <= levels[j]:
            tau = cand
            break
    n_exact = tuple(max(tau - x, Fraction(0)) for x in t_s)
    return WaterFill(float(tau), np.array([float(x) for x in n_exact]), tau, n_exact)


@dataclass(frozen=True)
class IndepProfile:
    branch_ucb: float
    branch_warm: float
    label: str = "order-level profile"

    @property
    def min(self):
        return min(self.branch_ucb, self.branch_warm)


def indep_upper_profile(instance: MabInstance, v: BiasBound, delta) -> IndepProfile:
    k, horizon = instance.k, instance.horizon
    if not 2 <= k <= horizon:
        raise RejectedInputError(f"requires 2 <= K <= T, got K={k}, T={horizon}")
    if not 0 < delta < 1:
        raise RejectedInputError("delta must lie in (0, 1)")
    lg = math.log(horizon / delta)
    tau = tau_star_waterfill(instance.offline_counts, horizon).tau_star
    branch_ucb = math.sqrt(k * horizon * lg)
    branch_warm = (math.sqrt(lg / tau) + v.v_max) * horizon
    return IndepProfile(branch_ucb, branch_warm)


@dataclass(frozen=True)
class CombIndepProfile:
    tau_star: float
    branch_1: float
    branch_2: float
    scale: float
    label: str = "order-level profile"

    @property
    def min(self):
        return self.scale * min(self.branch_1, self.branch_2)


def comb_indep_upper_profile(t_s, horizon, v_max, delta, gamma=1.0, rho=1.0, m=1, linear=False):
    """Instance-independent combinatorial profile.

    General smooth rewards: gamma * min(T1, T2) with tau* from mass T.
    Linear rewards: min(sqrt(mKT log), (sqrt(log/tau*_C) + V_max) m T) with
    tau*_C from mass mT.
    """
    k = len(t_s)
    if not 2 <= k <= horizon:
        raise RejectedInputError(f"requires 2 <= K <= T, got K={k}, T={horizon}")
    if not 0 < rho <= 1:
        raise RejectedInputError("rho must lie in (0, 1]")
    if not gamma > 0:
        raise RejectedInputError("gamma must be > 0")
    lg = math.log(horizon / delta)
    if linear:
        tau = tau_star_waterfill(t_s, horizon, mass=m * horizon).tau_star
        b1 = math.sqrt(m * k * horizon * lg)
        b2 = (math.sqrt(lg / tau) + v_max) * m * horizon
        return CombIndepProfile(tau, b1, b2, 1.0)
    tau = tau_star_waterfill(t_s, horizon).tau_star
    b1 = (k * lg) ** (rho / 2) * horizon ** (1 - rho / 2)
    b2 = (v_max ** rho + lg ** (rho / 2) * tau ** (-rho / 2)) * horizon
    return CombIndepProfile(tau, b1, b2, gamma)


@dataclass(frozen=True)
class GapSummary:
    delta_min: tuple      # None where undefined
    delta_max: float
    action_gaps: dict
    optimal_actions: tuple


def delta_min_profile(instance: CombInstance, model=None) -> GapSummary:
    model = default_model(instance) if model is None else model
    if not isinstance(model, Linear):
        raise RejectedInputError("gap profile requires linear rewards")
    actions = instance.enumerate_actions()
    mu = instance.mu_on
    values = {act: model.value(mu, act) for act in actions}
    r_star = max(values.values())
    tol = 1e-12 * max(1.0, abs(r_star))
    gaps = {act: (r_star - val if r_star - val > tol else 0.0) for act, val in values.items()}
    dmin = [None] * instance.k
    for act, g in gaps.items():
        if g > 0:
            for a in act:
                if dmin[a] is None or g < dmin[a]:
                    dmin[a] = g
    optimal = tuple(act for act, g in gaps.items() if g == 0)
    return GapSummary(tuple(dmin), max(gaps.values()), gaps, optimal)


def comb_dep_terms(instance: CombInstance, v, model=None):
    """Per-arm ``(m log T / dmin - Sav_com, Sav_com)``; None for excluded arms."""
    summ = delta_min_profile(instance, model)
    v = np.asarray(v, dtype=float)
    om = omega(v, instance.mu_off, instance.mu_on)
    in_opt = set(a for act in summ.optimal_actions for a in act)
    m = instance.m
    log_t = math.log(instance.horizon)
    terms = []
    for a in range(instance.k):
        d = summ.delta_min[a]
        if d is None or a in in_opt:
            terms.append(None)
            continue
        sav = m * int(instance.offline_counts[a]) * d * _shortfall_sq(float(om[a]), d)
        terms.append((m * log_t / d - sav, sav))
    return terms, summ


def comb_dep_upper(instance: CombInstance, v, model=None):
    """Order-level instance-dependent bound for linear rewards (constants = 1)."""
    terms, summ = comb_dep_terms(instance, v, model)
    return sum(max(tm[0], summ.delta_max) for tm in terms if tm is not None)


def impossibility_threshold(eps, horizon):
    return horizon ** eps / (4.0 * math.log(horizon))


def impossibility_pair(beta, eps, c, horizon, t_s=(0, 0)):
    """Two-arm instances with equal offline laws but different optimal arms.

    Raises RejectedInputError when C >= T^eps / (4 log T) or any range fails.
    """
    if not 0 < beta < 0.5:
        raise RejectedInputError("beta must lie in (0, 1/2)")
    if not 0 < eps < beta:
        raise RejectedInputError("eps must lie in (0, beta)")
    if not c > 0:
        raise RejectedInputError("C must be > 0")
    if not horizon > 1:
        raise RejectedInputError("horizon must exceed 1")
    thr = impossibility_threshold(eps, horizon)
    if not c < thr:
        raise RejectedInputError(f"hypothesis C < T^eps/(4 log T) fails: C={c!r}, threshold={thr!r}")
    gap = horizon ** (-beta)
    q2 = 1.0 / (math.sqrt(c * math.log(horizon)) * horizon ** (beta - eps / 2)) - gap
    if not q2 > gap > 0:
        raise RejectedInputError("numerical failure: Q arm-2 mean not above T^-beta")
    h = int(round(horizon))
    p = MabInstance.from_means([0.0, -gap], [0.0, -gap], t_s, h)
    q = MabInstance.from_means([0.0, q2], [0.0, -gap], t_s, h)
    return p, q


@dataclass
class BoundReport:
    omega: np.ndarray
    sav0: np.ndarray
    sav_eps: np.ndarray
    kappa_eps: list
    dep_upper_explicit: float
    tau_star: float
    n_star: np.ndarray
    indep_branch_ucb: float
    indep_branch_warm: float
    comb: dict = field(default_factory=dict)


def bound_report(instance: MabInstance, v: BiasBound, query: Optional[BoundQuery] = None,
                 comb_instance: Optional[CombInstance] = None) -> BoundReport:
    query = BoundQuery() if query is None else query
    gaps = gap_profile(instance).delta
    om = omega(v.v, instance.mu_off, instance.mu_on)
    s0 = np.zeros(instance.k)
    se = np.zeros(instance.k)
    kap = [None] * instance.k
    for a in range(instance.k):
        if gaps[a] > 0:
            s0[a] = sav0(instance.offline_counts[a], float(gaps[a]), float(om[a]))
            se[a], kap[a] = sav_eps_and_kappa(query, instance.offline_counts[a], float(gaps[a]), float(om[a]))
    wf = tau_star_waterfill(instance.offline_counts, instance.horizon)
    if 2 <= instance.k <= instance.horizon:
        prof = indep_upper_profile(instance, v, query.delta)
        b_ucb, b_warm = prof.branch_ucb, prof.branch_warm
    else:
        b_ucb = b_warm = float("nan")
    rep = BoundReport(om, s0, se, kap, dep_upper_explicit(instance, v), wf.tau_star, wf.n_star, b_ucb, b_warm)
    if comb_instance is not None:
        ci = comb_instance
        lin = comb_indep_upper_profile(ci.offline_counts, ci.horizon, v.v_max, query.delta, m=ci.m, linear=True)
        terms, summ = comb_dep_terms(ci, v.v)
        rep.comb = {
            "tau_star_c": lin.tau_star,
            "sav_com": [None if tm is None else tm[1] for tm in terms],
            "delta_min": list(summ.delta_min),
            "delta_max": summ.delta_max,
            "comb_dep_upper": comb_dep_upper(ci, v.v),
            "comb_indep_branch_1": lin.branch_1,
            "comb_indep_branch_2": lin.branch_2,
        }
    return rep


def _fmt(x):
    if x is None:
        return "undef"
    if isinstance(x, (list, tuple, np.ndarray)):
        return ",".join(_fmt(y) for y in x)
    return f"{float(x):.9g}"


def format_report(rep: BoundReport) -> str:
    rows = [
        ("omega", rep.omega), ("sav0", rep.sav0), ("sav_eps", rep.sav_eps),
        ("kappa_eps", rep.kappa_eps), ("dep_upper_explicit", rep.dep_upper_explicit),
        ("tau_star", rep.tau_star), ("n_star", rep.n_star),
        ("indep_branch_ucb", rep.indep_branch_ucb), ("indep_branch_warm", rep.indep_branch_warm),
        ("indep_profile", "order-level"),
    ]
    rows += sorted(rep.comb.items())
    out = []
    for key, val in rows:
        out.append(f"{key}={val if isinstance(val, str) else _fmt(val)}")
    return "\n".join(out) + "\n"

"""Hot loops for multi-armed trials.

``mab_actions`` runs one policy for ``horizon`` rounds over a pre-drawn reward
table (row a = rewards of the successive pulls of arm a) and returns the arm
sequence. Two interchangeable backends exist:

* ``_mab_actions_numba``: scalar loop compiled with numba;
* ``_mab_actions_numpy``: per-round vectorized numpy using
  :func:`warmbandit.policies.index_vectors`.

Both perform the same IEEE operations in the same order (the log term is a
scalar ``math.log`` in each), so they return identical action sequences.
``WARMBANDIT_NUMBA=0`` selects the numpy path globally.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit
from .policies import PolicyKind, incremental_mean, index_vectors

KIND_MIN = int(PolicyKind.MinUcb)
KIND_PURE = int(PolicyKind.PureUcb)
KIND_UCBS = int(PolicyKind.UcbSOnly)
KIND_MON = int(PolicyKind.MonUcbPooled)


@njit
def _mab_actions_numba(kind, horizon, t_s, x_hat, v, rewards, delta_scale):
    k = t_s.shape[0]
    actions = np.empty(horizon, dtype=np.int64)
    n = np.zeros(k, dtype=np.int64)
    r = np.zeros(k)
    pulls = np.zeros(k, dtype=np.int64)
    if kind == 3:
        for a in range(k):
            n[a] = t_s[a]
            if t_s[a] > 0:
                r[a] = x_hat[a]
    for t in range(1, horizon + 1):
        arm = -1
        for a in range(k):
            if n[a] == 0:
                arm = a
                break
        if arm < 0:
            dt = delta_scale / (2.0 * k * t * t)
            two_l = 2.0 * math.log(2.0 * t / dt)
            best = -np.inf
            for a in range(k):
                rad = math.sqrt(two_l / n[a])
                ucb = r[a] + rad
                if kind == 3 or kind == 1:
                    idx = ucb
                else:
                    tot = n[a] + t_s[a]
                    if t_s[a] > 0:
                        rad_s = math.sqrt(two_l / tot) + (t_s[a] / tot) * v[a]
                        ucb_s = (n[a] * r[a] + t_s[a] * x_hat[a]) / tot + rad_s
                    else:
                        ucb_s = r[a] + math.sqrt(two_l / tot)
                    if kind == 2:
                        idx = ucb_s
                    else:
                        idx = min(ucb, ucb_s)
                if arm < 0 or idx > best:
                    best = idx
                    arm = a
        reward = rewards[arm, pulls[arm]]
        pulls[arm] += 1
        if n[arm] == 0:
            r[arm] = reward
        else:
            r[arm] = n[arm] * r[arm] / (n[arm] + 1) + reward / (n[arm] + 1)
        n[arm] += 1
        actions[t - 1] = arm
    return actions


def _mab_actions_numpy(kind, horizon, t_s, x_hat, v, rewards, delta_scale):
    k = t_s.shape[0]
    actions = np.empty(horizon, dtype=np.int64)
    pulls = np.zeros(k, dtype=np.int64)
    if kind == KIND_MON:
        n = t_s.astype(np.int64).copy()
        r = np.where(t_s > 0, np.nan_to_num(x_hat), 0.0)
    else:
        n = np.zeros(k, dtype=np.int64)
        r = np.zeros(k)
    for t in range(1, horizon + 1):
        empty = np.flatnonzero(n == 0)
        if empty.size:
            arm = int(empty[0])
        else:
            dt = delta_scale / (2.0 * k * t * t)
            L = math.log(2.0 * t / dt)
            if kind == KIND_PURE or kind == KIND_MON:
                idx = r + np.sqrt(2.0 * L / n)
            else:
                ucb, ucb_s, _, _ = index_vectors(L, n, r, t_s, x_hat, v)
                idx = ucb_s if kind == KIND_UCBS else np.minimum(ucb, ucb_s)
            arm = int(np.argmax(idx))
        reward = float(rewards[arm, pulls[arm]])
        pulls[arm] += 1
        r[arm] = incremental_mean(int(n[arm]), float(r[arm]), reward)
        n[arm] += 1
        actions[t - 1] = arm
    return actions


def mab_actions(kind, horizon, t_s, x_hat, v, rewards, delta_scale=1.0, use_numba=None):
    """Arm sequence of one trial. ``x_hat`` is NaN where ``t_s == 0``."""
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    t_s = np.ascontiguousarray(t_s, dtype=np.int64)
    x_hat = np.ascontiguousarray(x_hat, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    fn = _mab_actions_numba if (use_numba and _accel.HAS_NUMBA) else _mab_actions_numpy
    return fn(int(kind), int(horizon), t_s, x_hat, v, rewards, float(delta_scale))


@njit
def _cum_regret_numba(actions, gaps):
    out = np.empty(actions.shape[0])
    acc = 0.0
    for i in range(actions.shape[0]):
        acc += gaps[actions[i]]
        out[i] = acc
    return out


def cumulative_regret(actions, gaps, use_numba=None):
    """Pseudo-regret trajectory: running sum of gaps of the chosen arms."""
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    gaps = np.ascontiguousarray(gaps, dtype=np.float64)
    if use_numba and _accel.HAS_NUMBA:
        return _cum_regret_numba(actions, gaps)
    return np.cumsum(gaps[actions])

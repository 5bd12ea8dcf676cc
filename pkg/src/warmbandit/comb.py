"""Combinatorial semi-bandits: action families, reward models, oracles, MIN-COMB-UCB.

Actions are sorted tuples of base-arm indices. Oracles receive a per-arm
score vector that may contain ``+inf`` (arms not yet observed). Candidate
actions are ranked by

1. the number of ``+inf`` members (more first),
2. the reward of the action with the infinite entries removed
   (for linear rewards: the sum of the finite members),
3. the lexicographically smallest index tuple.

This makes the initialization loop deterministic and guarantees it ends.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _accel, rng
from ._accel import njit
from .errors import RejectedInputError
from .policies import SCHEDULE_DEP, incremental_mean, index_vectors, schedule_scale

MAX_EXPLICIT_ACTIONS = 10**6


# -- action families -----------------------------------------------------------

@dataclass(frozen=True)
class TopM:
    m: int


@dataclass(frozen=True)
class MPath:
    """K/m disjoint paths; path j holds arms j*m .. j*m + m - 1."""
    m: int


@dataclass(frozen=True)
class Explicit:
    actions: tuple

    @property
    def m(self):
        return max(len(a) for a in self.actions)


@dataclass(frozen=True)
class InfluenceGraph:
    n_nodes: int
    src: np.ndarray
    dst: np.ndarray

    @classmethod
    def from_edges(cls, edges, n_nodes=None):
        edges = list(edges)
        src = np.array([int(e[0]) for e in edges], dtype=np.int64)
        dst = np.array([int(e[1]) for e in edges], dtype=np.int64)
        if n_nodes is None:
            n_nodes = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        if np.any(src < 0) or np.any(dst < 0) or np.any(src >= n_nodes) or np.any(dst >= n_nodes):
            raise RejectedInputError("edge endpoint outside the node range")
        return cls(int(n_nodes), src, dst)

    @property
    def n_edges(self):
        return int(self.src.size)

    def out_edges(self, node):
        return np.flatnonzero(self.src == node)


@dataclass(frozen=True)
class Influence:
    """Seed-set selection of ``seeds`` nodes; base arms are the graph edges."""
    graph: InfluenceGraph
    seeds: int

    @property
    def m(self):
        deg = np.bincount(self.graph.src, minlength=self.graph.n_nodes)
        return int(np.sort(deg)[::-1][: self.seeds].sum())


# -- reward models ------------------------------------------------------------

@dataclass(frozen=True)
class Linear:
    def value(self, u, action):
        s = 0.0
        for a in action:
            s += u[a]
        return s


@dataclass(frozen=True)
class Smooth:
    """General reward ``r_u(A)`` with smoothness modulus ``gamma * x**rho``."""
    expected_reward: Callable
    gamma: float
    rho: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise RejectedInputError("gamma must be > 0")
        if not 0 < self.rho <= 1:
            raise RejectedInputError("rho must lie in (0, 1]")

    def value(self, u, action):
        return float(self.expected_reward(u, action))


# -- oracle ---------------------------------------------------------------------

class Solver(enum.Enum):
    ExactTopM = "exact-topm"
    ExactEnumerate = "exact-enumerate"
    GreedyInfluence = "greedy-influence"


@dataclass(frozen=True)
class OracleSpec:
    alpha: float
    beta: float
    solver: Solver

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise RejectedInputError("alpha and beta must lie in (0, 1]")
        if self.solver in (Solver.ExactTopM, Solver.ExactEnumerate) and (self.alpha, self.beta) != (1.0, 1.0):
            raise RejectedInputError("exact oracles have alpha = beta = 1")

    @classmethod
    def exact_topm(cls):
        return cls(1.0, 1.0, Solver.ExactTopM)

    @classmethod
    def exact_enumerate(cls):
        return cls(1.0, 1.0, Solver.ExactEnumerate)

    @classmethod
    def greedy_influence(cls):
        return cls(1.0 - 1.0 / math.e, 1.0, Solver.GreedyInfluence)


# -- instances --------------------------------------------------------------------

class _GaussianBase:
    name = "gaussian"

    def draw(self, mean, gen, size):
        return mean + gen.standard_normal(size)


class _BernoulliBase:
    name = "bernoulli"

    def draw(self, mean, gen, size):
        return (gen.random(size) < mean).astype(float)


@dataclass(frozen=True)
class CombInstance:
    mu_on: np.ndarray
    mu_off: np.ndarray
    offline_counts: np.ndarray
    horizon: int
    family: object
    law: object = field(default=None, compare=False)

    def __post_init__(self):
        mu_on = np.array(self.mu_on, dtype=float)
        mu_off = np.array(self.mu_off, dtype=float)
        t_s = np.array(self.offline_counts, dtype=np.int64)
        k = mu_on.size
        if k < 1 or mu_off.size != k or t_s.size != k:
            raise RejectedInputError("base-arm arrays must be non-empty and equally long")
        if np.any(t_s < 0) or int(self.horizon) < 1:
            raise RejectedInputError("offline counts must be >= 0 and horizon >= 1")
        for arr in (mu_on, mu_off, t_s):
            arr.setflags(write=False)
        object.__setattr__(self, "mu_on", mu_on)
        object.__setattr__(self, "mu_off", mu_off)
        object.__setattr__(self, "offline_counts", t_s)
        object.__setattr__(self, "horizon", int(self.horizon))
        fam = self.family
        if isinstance(fam, (TopM, MPath)):
            if not 1 <= fam.m <= k:
                raise RejectedInputError(f"m = {fam.m} outside [1, {k}]")
            if isinstance(fam, MPath) and k % fam.m:
                raise RejectedInputError(f"m-path needs K/m integral, got K={k}, m={fam.m}")
        elif isinstance(fam, Explicit):
            acts = tuple(tuple(sorted(set(int(a) for a in act))) for act in fam.actions)
            if not acts:
                raise RejectedInputError("explicit action collection is empty")
            if len(acts) > MAX_EXPLICIT_ACTIONS:
                raise RejectedInputError(f"explicit collections are capped at {MAX_EXPLICIT_ACTIONS} actions")
            if any(not act for act in acts) or any(a < 0 or a >= k for act in acts for a in act):
                raise RejectedInputError("every action must be a non-empty subset of the base arms")
            object.__setattr__(self, "family", Explicit(acts))
        elif isinstance(fam, Influence):
            if fam.graph.n_edges != k:
                raise RejectedInputError("influence instances need one base arm per edge")
            n_src = np.unique(fam.graph.src).size
            if not 1 <= fam.seeds <= n_src:
                raise RejectedInputError(f"seed budget must lie in [1, {n_src}]")
        else:
            raise RejectedInputError(f"unknown action family {fam!r}")
        if self.law is None:
            law = _BernoulliBase() if isinstance(fam, Influence) else _GaussianBase()
            object.__setattr__(self, "law", law)

    @property
    def k(self):
        return self.mu_on.size

    @property
    def m(self):
        return self.family.m

    def enumerate_actions(self):
        """All feasible actions for enumerable families, in canonical order."""
        fam = self.family
        if isinstance(fam, Explicit):
            return list(fam.actions)
        if isinstance(fam, MPath):
            return [tuple(range(j * fam.m, (j + 1) * fam.m)) for j in range(self.k // fam.m)]
        if isinstance(fam, TopM):
            from itertools import combinations
            if math.comb(self.k, fam.m) > MAX_EXPLICIT_ACTIONS:
                raise RejectedInputError("too many top-m subsets to enumerate")
            return list(combinations(range(self.k), fam.m))
        raise RejectedInputError("influence actions are not enumerable")


def default_model(instance: CombInstance):
    if isinstance(instance.family, Influence):
        g = instance.family.graph
        return Smooth(lambda u, act: _influence_of_action(g, u, act), float(g.n_nodes * g.n_edges), 1.0)
    return Linear()


def default_oracle(instance: CombInstance):
    fam = instance.family
    if isinstance(fam, TopM):
        return OracleSpec.exact_topm()
    if isinstance(fam, Influence):
        return OracleSpec.greedy_influence()
    return OracleSpec.exact_enumerate()


# -- influence ---------------------------------------------------------------------

def influence_expected_reward(graph: InfluenceGraph, probabilities, seeds):
    """Expected number of active nodes after one diffusion step from ``seeds``.

    Seeds count as active. A non-seed node v is activated with probability
    ``1 - prod(1 - p(u, v))`` over seed in-neighbours u.
    """
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise RejectedInputError("edge probabilities must lie in [0, 1]")
    seeds = set(int(s) for s in seeds)
    edges = [e for e in range(graph.n_edges) if int(graph.src[e]) in seeds]
    return _influence_value(graph, p, seeds, edges)


def _influence_value(graph, p, seeds, edges):
    miss = np.ones(graph.n_nodes)
    for e in edges:
        miss[graph.dst[e]] *= 1.0 - p[e]
    total = float(len(seeds))
    for v in range(graph.n_nodes):
        if v not in seeds:
            total += 1.0 - miss[v]
    return total


def _influence_of_action(graph, u, action):
    p = np.clip(np.where(np.isinf(u), 1.0, u), 0.0, 1.0)
    seeds = set(int(graph.src[e]) for e in action)
    return _influence_value(graph, p, seeds, list(action))


def _greedy_influence(instance, u):
    fam = instance.family
    g = fam.graph
    inf_mask = np.isinf(u)
    candidates = sorted(set(int(s) for s in g.src))
    chosen = []
    edges = []
    for _ in range(fam.seeds):
        best, best_key = None, None
        base = _influence_of_action(g, u, edges)
        for node in candidates:
            if node in chosen:
                continue
            out = g.out_edges(node).tolist()
            trial = edges + out
            key = (int(inf_mask[out].sum()), _influence_of_action(g, u, trial) - base)
            if best_key is None or key > best_key:
                best, best_key = node, key
        chosen.append(best)
        edges = edges + g.out_edges(best).tolist()
    return tuple(sorted(edges))


# -- oracle -----------------------------------------------------------------------

def _seq_row_sums(mat):
    """Row sums accumulated left to right (matches a scalar loop bit for bit)."""
    acc = mat[:, 0].copy()
    for j in range(1, mat.shape[1]):
        acc += mat[:, j]
    return acc


def _best_by_key(inf_count, value, actions):
    top = inf_count.max()
    cand = np.flatnonzero(inf_count == top)
    vmax = value[cand].max()
    cand = cand[value[cand] == vmax]
    return min(actions[i] for i in cand) if cand.size > 1 else actions[cand[0]]


def oracle_solve(spec: OracleSpec, model, instance: CombInstance, u):
    u = np.asarray(u, dtype=float)
    if u.size != instance.k or np.any(np.isnan(u)) or np.any(u == -np.inf):
        raise RejectedInputError("oracle input must hold K finite or +inf entries")
    fam = instance.family
    inf_mask = np.isinf(u)
    finite = np.where(inf_mask, 0.0, u)
    if spec.solver is Solver.GreedyInfluence:
        if not isinstance(fam, Influence):
            raise RejectedInputError("greedy influence oracle needs an influence family")
        return _greedy_influence(instance, u)
    if spec.solver is Solver.ExactTopM:
        if not isinstance(fam, TopM):
            raise RejectedInputError("top-m oracle needs a top-m family")
        order = np.lexsort((np.arange(u.size), -finite, -inf_mask.astype(np.int64)))
        return tuple(sorted(int(a) for a in order[: fam.m]))
    if isinstance(fam, MPath):
        paths = finite.reshape(-1, fam.m)
        counts = inf_mask.reshape(-1, fam.m).sum(axis=1)
        if isinstance(model, Linear):
            values = _seq_row_sums(paths)
        else:
            values = np.array([model.value(np.where(inf_mask, 0.0, u), act)
                               for act in instance.enumerate_actions()])
        j = _best_by_key(counts, values, list(range(counts.size)))
        return tuple(range(j * fam.m, (j + 1) * fam.m))
    actions = instance.enumerate_actions()
    if isinstance(model, Linear) and isinstance(fam, Explicit):
        width = fam.m
        idx = np.full((len(actions), width), instance.k, dtype=np.int64)
        for i, act in enumerate(actions):
            idx[i, : len(act)] = act
        fin_pad = np.append(finite, 0.0)
        inf_pad = np.append(inf_mask, False)
        values = _seq_row_sums(fin_pad[idx])
        counts = inf_pad[idx].sum(axis=1)
    else:
        u_fin = np.where(inf_mask, 0.0, u)
        values = np.array([model.value(u_fin, act) for act in actions])
        counts = np.array([int(inf_mask[list(act)].sum()) for act in actions])
    return _best_by_key(counts, values, actions)


def optimal_value(instance: CombInstance, model=None, spec=None):
    """Return ``(r_star, exact)`` under the true online means."""
    model = default_model(instance) if model is None else model
    spec = default_oracle(instance) if spec is None else spec
    fam = instance.family
    mu = instance.mu_on
    if isinstance(fam, Influence):
        return model.value(mu, _greedy_influence(instance, mu)), False
    if isinstance(fam, TopM) and isinstance(model, Linear):
        # same summation order as the value of the played (sorted) action
        return model.value(mu, oracle_solve(OracleSpec.exact_topm(), model, instance, mu)), True
    return max(model.value(mu, act) for act in instance.enumerate_actions()), True


def comb_regret(actions, instance: CombInstance, model=None, spec=None):
    """Scaled regret sum_t (alpha*beta*r* - r_mu(A_t)) of an action trajectory."""
    return float(comb_regret_trajectory(actions, instance, model, spec)[-1]) if len(actions) else 0.0


def comb_regret_trajectory(actions, instance: CombInstance, model=None, spec=None):
    model = default_model(instance) if model is None else model
    spec = default_oracle(instance) if spec is None else spec
    r_star, _ = optimal_value(instance, model, spec)
    target = spec.alpha * spec.beta * r_star
    cache = {}
    per_round = np.empty(len(actions))
    for i, act in enumerate(actions):
        key = tuple(act)
        if key not in cache:
            cache[key] = model.value(instance.mu_on, key)
        per_round[i] = target - cache[key]
    return np.cumsum(per_round)


# -- MIN-COMB-UCB -----------------------------------------------------------------------

@dataclass
class CombPolicyState:
    n: np.ndarray
    r_hat: np.ndarray
    t: int
    t0: Optional[int]
    v: np.ndarray
    t_s: np.ndarray
    x_hat: np.ndarray
    schedule: str = SCHEDULE_DEP
    delta: Optional[float] = None

    @property
    def initialized(self):
        return bool(np.all(self.n >= 1))


def init_comb_policy(instance: CombInstance, offline_means, v, schedule=SCHEDULE_DEP, delta=None):
    k = instance.k
    v = np.asarray(v, dtype=float)
    if v.size != k or len(offline_means) != k:
        raise RejectedInputError("bias bound / offline means do not match the base arms")
    schedule_scale(schedule, delta)
    x_hat = np.array([np.nan if m is None else m for m in offline_means], dtype=float)
    return CombPolicyState(np.zeros(k, dtype=np.int64), np.full(k, np.inf), 1, None,
                           v, instance.offline_counts.astype(np.int64), x_hat, schedule, delta)


def comb_scores(state: CombPolicyState):
    """Oracle input for the current round: running means while initializing,
    otherwise min(UCB, UCB^S) per base arm."""
    if not state.initialized:
        return state.r_hat.copy()
    k = state.n.size
    dt = schedule_scale(state.schedule, state.delta) / (2.0 * k * state.t * state.t)
    L = math.log(2.0 * state.t / dt)
    ucb, ucb_s, _, _ = index_vectors(L, state.n, state.r_hat, state.t_s, state.x_hat, state.v)
    return np.minimum(ucb, ucb_s)


def min_comb_ucb_round(state: CombPolicyState, instance: CombInstance, model, spec, rewards):
    """Play one round. ``rewards[a, j]`` is the reward of the (j+1)-th pull of arm a."""
    u = comb_scores(state)
    action = oracle_solve(spec, model, instance, u)
    for a in action:
        n = int(state.n[a])
        state.r_hat[a] = incremental_mean(n, float(state.r_hat[a]), float(rewards[a, n]))
        state.n[a] += 1
    state.t += 1
    if state.t0 is None and state.initialized:
        state.t0 = state.t
    return action, state


def sample_comb_offline(instance: CombInstance, seed):
    means = []
    for a in range(instance.k):
        gen = rng.stream(seed, rng.PURPOSE_OFFLINE, a)
        x = instance.law.draw(instance.mu_off[a], gen, int(instance.offline_counts[a]))
        means.append(float(x.mean()) if x.size else None)
    return means


def comb_reward_table(instance: CombInstance, seed, depth=None):
    depth = instance.horizon if depth is None else int(depth)
    table = np.empty((instance.k, depth))
    for a in range(instance.k):
        gen = rng.stream(seed, rng.PURPOSE_ONLINE, a)
        table[a] = instance.law.draw(instance.mu_on[a], gen, depth)
    return table


# -- kernels for the linear structural families -----------------------------------------

FAMILY_TOPM = 0
FAMILY_MPATH = 1


@njit
def _comb_actions_numba(family, m, horizon, t_s, x_hat, v, rewards, delta_scale):
    k = t_s.shape[0]
    actions = np.empty((horizon, m), dtype=np.int64)
    n = np.zeros(k, dtype=np.int64)
    r = np.full(k, np.inf)
    u = np.empty(k)
    taken = np.zeros(k, dtype=np.bool_)
    for t in range(1, horizon + 1):
        init = False
        for a in range(k):
            if n[a] == 0:
                init = True
                break
        if init:
            for a in range(k):
                u[a] = r[a]
        else:
            dt = delta_scale / (2.0 * k * t * t)
            two_l = 2.0 * math.log(2.0 * t / dt)
            for a in range(k):
                ucb = r[a] + math.sqrt(two_l / n[a])
                tot = n[a] + t_s[a]
                if t_s[a] > 0:
                    rad_s = math.sqrt(two_l / tot) + (t_s[a] / tot) * v[a]
                    ucb_s = (n[a] * r[a] + t_s[a] * x_hat[a]) / tot + rad_s
                else:
                    ucb_s = r[a] + math.sqrt(two_l / tot)
                u[a] = min(ucb, ucb_s)
        if family == 0:
            for a in range(k):
                taken[a] = False
            for j in range(m):
                best = -1
                for a in range(k):
                    if taken[a]:
                        continue
                    if best < 0:
                        best = a
                        continue
                    ia = np.isinf(u[a])
                    ib = np.isinf(u[best])
                    if ia and not ib:
                        best = a
                    elif ia == ib and not ia and u[a] > u[best]:
                        best = a
                taken[best] = True
            j = 0
            for a in range(k):
                if taken[a]:
                    actions[t - 1, j] = a
                    j += 1
        else:
            best_p = -1
            best_c = -1
            best_v = 0.0
            for p in range(k // m):
                c = 0
                s = 0.0
                first = True
                for l in range(m):
                    x = u[p * m + l]
                    if np.isinf(x):
                        c += 1
                        x = 0.0
                    if first:
                        s = x
                        first = False
                    else:
                        s += x
                if c > best_c or (c == best_c and s > best_v):
                    best_p = p
                    best_c = c
                    best_v = s
            for l in range(m):
                actions[t - 1, l] = best_p * m + l
        for j in range(m):
            a = actions[t - 1, j]
            reward = rewards[a, n[a]]
            if n[a] == 0:
                r[a] = reward
            else:
                r[a] = n[a] * r[a] / (n[a] + 1) + reward / (n[a] + 1)
            n[a] += 1
    return actions


def comb_actions(instance: CombInstance, offline_means, v, rewards, schedule=SCHEDULE_DEP,
                 delta=None, model=None, spec=None, use_numba=None):
    """Action trajectory of MIN-COMB-UCB over ``instance.horizon`` rounds.

    Linear top-m and m-path instances run in the numba kernel when enabled;
    everything else goes through :func:`min_comb_ucb_round`.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    model = default_model(instance) if model is None else model
    spec = default_oracle(instance) if spec is None else spec
    fam = instance.family
    fast = isinstance(model, Linear) and isinstance(fam, (TopM, MPath))
    if use_numba and _accel.HAS_NUMBA and fast:
        x_hat = np.array([np.nan if m is None else m for m in offline_means], dtype=float)
        code = FAMILY_TOPM if isinstance(fam, TopM) else FAMILY_MPATH
        out = _comb_actions_numba(code, fam.m, instance.horizon,
                                  np.ascontiguousarray(instance.offline_counts, dtype=np.int64),
                                  x_hat, np.ascontiguousarray(v, dtype=float),
                                  np.ascontiguousarray(rewards, dtype=float),
                                  schedule_scale(schedule, delta))
        return [tuple(int(a) for a in row) for row in out]
    state = init_comb_policy(instance, offline_means, v, schedule, delta)
    actions = []
    for _ in range(instance.horizon):
        act, state = min_comb_ucb_round(state, instance, model, spec, rewards)
        actions.append(act)
    return actions

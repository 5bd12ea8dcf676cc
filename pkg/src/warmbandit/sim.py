"""Seeded trials, multi-trial experiments, experiment presets and CSV output."""
from __future__ import annotations

import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .bounds import impossibility_pair
from .comb import (CombInstance, MPath, comb_actions, comb_regret_trajectory, comb_reward_table,
                   sample_comb_offline)
from .errors import ConfigurationError, RejectedInputError
from .kernels import cumulative_regret, mab_actions
from .model import (BiasBound, MabInstance, gap_profile, online_reward_table, sample_offline,
                    validate_bias_bound)
from .policies import SCHEDULE_DEP, PolicyKind, schedule_scale

log = logging.getLogger(__name__)

COMB_POLICY = "min-comb-ucb"
COMB_BASELINE = "comb-ucb"


@dataclass(frozen=True)
class TrialConfig:
    instance: object            # MabInstance or CombInstance
    policy: str                 # min-ucb | pure-ucb | ucbs | monucb | min-comb-ucb
    v: BiasBound
    seed: int = 0
    schedule: str = SCHEDULE_DEP
    delta: Optional[float] = None
    allow_invalid_v: bool = False
    offline_seed: Optional[int] = None   # set to pin the offline dataset across trials

    @property
    def horizon(self):
        return self.instance.horizon


@dataclass
class TrialResult:
    trajectory: np.ndarray
    counts: np.ndarray
    actions: Optional[list] = None
    invalid_v: bool = False

    @property
    def final_regret(self):
        return float(self.trajectory[-1]) if self.trajectory.size else 0.0


def _check_v(config):
    inst = config.instance
    if isinstance(inst, CombInstance):
        if len(config.v) != inst.k:
            raise RejectedInputError("bias bound length does not match the base arms")
        ok = bool(np.all(config.v.v >= np.abs(inst.mu_off - inst.mu_on)))
    else:
        ok = validate_bias_bound(inst, config.v)
    if not ok and not config.allow_invalid_v:
        raise RejectedInputError("bias bound is not valid for this instance")
    return not ok


def run_trial(config: TrialConfig, keep_actions=False, use_numba=None) -> TrialResult:
    invalid = _check_v(config)
    inst = config.instance
    off_seed = config.seed if config.offline_seed is None else config.offline_seed
    if isinstance(inst, CombInstance):
        if config.policy not in (COMB_POLICY, COMB_BASELINE):
            raise ConfigurationError(f"policy {config.policy!r} is not a combinatorial policy")
        v = config.v.v if config.policy == COMB_POLICY else np.full(inst.k, np.inf)
        means = sample_comb_offline(inst, off_seed)
        table = comb_reward_table(inst, config.seed)
        acts = comb_actions(inst, means, v, table, config.schedule, config.delta, use_numba=use_numba)
        traj = comb_regret_trajectory(acts, inst)
        counts = np.zeros(inst.k, dtype=np.int64)
        for act in acts:
            counts[list(act)] += 1
        return TrialResult(traj, counts, acts if keep_actions else None, invalid)
    kind = PolicyKind.from_name(config.policy)
    data = sample_offline(inst, off_seed)
    table = online_reward_table(inst, config.seed)
    acts = mab_actions(kind, inst.horizon, data.counts, data.packed_means(), config.v.v, table,
                       schedule_scale(config.schedule, config.delta), use_numba=use_numba)
    traj = cumulative_regret(acts, gap_profile(inst).delta, use_numba=use_numba)
    counts = np.bincount(acts, minlength=inst.k)
    return TrialResult(traj, counts, acts if keep_actions else None, invalid)


# -- presets ------------------------------------------------------------------

BIAS_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))
T_GRID = (50, 500, 1500, 3000, 5000, 7000)
FIG2_V = (0.4, 0.5, 0.6)
MAB_POLICIES = ("min-ucb", "pure-ucb", "ucbs", "monucb")


def _fig_instance(mu_off, t_s, horizon):
    k = len(mu_off)
    mu_on = [1.0] + [0.0] * (k - 1)
    inst = MabInstance.from_means(mu_on, mu_off, [t_s] * k, horizon)
    return inst, BiasBound.exact(inst)


def preset_optimistic(v, k=10, t_s=1000, horizon=10_000):
    """Offline data under-rate the best arm by v and over-rate the others by v."""
    return _fig_instance([1.0 - v] + [v] * (k - 1), t_s, horizon)


def preset_pessimistic(v, k=10, t_s=1000, horizon=10_000):
    """Offline data under-rate every arm by v."""
    return _fig_instance([1.0 - v] + [-v] * (k - 1), t_s, horizon)


def preset_t_sweep(v, horizon, k=10, t_s=10_000):
    return preset_optimistic(v, k=k, t_s=t_s, horizon=horizon)


class UtilityLaw:
    """Customer valuation law: ``uniform:lo:hi`` or ``exponential:scale``."""

    def __init__(self, spec):
        parts = spec.split(":")
        self.spec = spec
        self.kind = parts[0]
        try:
            params = [float(p) for p in parts[1:]]
        except ValueError:
            raise RejectedInputError(f"bad utility spec {spec!r}") from None
        if self.kind == "uniform" and len(params) == 2 and params[0] < params[1]:
            self.lo, self.hi = params
        elif self.kind == "exponential" and len(params) == 1 and params[0] > 0:
            self.scale = params[0]
        else:
            raise RejectedInputError(f"bad utility spec {spec!r}")

    def survival(self, x):
        if self.kind == "uniform":
            return float(min(max((self.hi - x) / (self.hi - self.lo), 0.0), 1.0))
        return float(math.exp(-max(x, 0.0) / self.scale))

    def sample(self, gen, size):
        if self.kind == "uniform":
            return gen.uniform(self.lo, self.hi, size)
        return gen.exponential(self.scale, size)


class PricingLaw:
    """Reward of price a is ``a * 1{U >= a}``; offline valuations are ``U + shift``.

    Rewards are bounded rather than unit-variance Gaussian; the confidence
    radii are used unchanged.
    """
    name = "pricing"

    def __init__(self, prices, utility, shift):
        self.prices = np.asarray(prices, dtype=float)
        self.utility = utility
        self.shift = float(shift)

    def draw(self, instance, arm, phase, gen, size):
        u = self.utility.sample(gen, size)
        if phase == "offline":
            u = u + self.shift
        price = self.prices[arm]
        return np.where(u >= price, price, 0.0)


def preset_pricing(prices=(0.2, 0.5, 0.8), utility="uniform:0:1", shift=0.0, t_s=1000, horizon=10_000):
    prices = [float(p) for p in prices]
    if not prices or min(prices) <= 0:
        raise RejectedInputError("prices must be positive")
    law_u = UtilityLaw(utility) if isinstance(utility, str) else utility
    mu_on = [p * law_u.survival(p) for p in prices]
    mu_off = [p * law_u.survival(p - shift) for p in prices]
    inst = MabInstance.from_means(mu_on, mu_off, [t_s] * len(prices), horizon,
                                  law=PricingLaw(prices, law_u, shift))
    return inst, BiasBound.exact(inst)


def preset_impossibility(beta, eps, c, horizon, t_s=None):
    """The two instances as ``[(name, instance, bound), ...]``; bounds are infinite.

    Defaults the offline size to 128 (T^{2 beta} - T^{2 beta - eps}) log T per arm.
    """
    if t_s is None:
        t_s = int(math.ceil(128 * (horizon ** (2 * beta) - horizon ** (2 * beta - eps)) * math.log(horizon)))
    p, q = impossibility_pair(beta, eps, c, horizon, (t_s, t_s))
    return [("I_P", p, BiasBound.infinite(2)), ("I_Q", q, BiasBound.infinite(2))]


def preset_mpath(v_known=True, k=10, m=2, t_s=1000, horizon=10_000, gap=1.0):
    """m-path instance: arms of the first path have mean ``gap``, all others 0; no bias."""
    mu = np.zeros(k)
    mu[:m] = gap
    inst = CombInstance(mu, mu.copy(), [t_s] * k, horizon, MPath(m))
    return inst, BiasBound(np.zeros(k) if v_known else np.full(k, np.inf))


@dataclass(frozen=True)
class SweepPoint:
    experiment: str
    param: float
    instance: object
    v: BiasBound
    policies: tuple = MAB_POLICIES


def build_sweep(name, grid=None, **kw):
    """Named preset sweeps: fig1a, fig1b, fig2, pricing, impossibility, mpath."""
    if name == "fig1a":
        return [SweepPoint("fig1a", v, *preset_optimistic(v)) for v in (grid or BIAS_GRID)]
    if name == "fig1b":
        return [SweepPoint("fig1b", v, *preset_pessimistic(v)) for v in (grid or BIAS_GRID)]
    if name == "fig2":
        vs = kw.get("v_levels", FIG2_V)
        return [SweepPoint(f"fig2-v{v:g}", t, *preset_t_sweep(v, t)) for v in vs for t in (grid or T_GRID)]
    if name == "pricing":
        return [SweepPoint("pricing", s, *preset_pricing(shift=s, **kw)) for s in (grid or (0.0, 0.05, 0.1, 0.2))]
    if name == "impossibility":
        beta, eps, c, horizon = kw.get("beta", 0.25), kw.get("eps", 0.2), kw.get("c", 0.1), kw.get("t", 10_000)
        pts = preset_impossibility(beta, eps, c, horizon, kw.get("t_s"))
        return [SweepPoint(f"impossibility-{nm}", 0.0, inst, v, ("pure-ucb", "monucb")) for nm, inst, v in pts]
    if name == "mpath":
        pts = []
        for t_s in (grid or (1000,)):
            inst, v = preset_mpath(True, t_s=int(t_s), **kw)
            pts.append(SweepPoint("mpath", float(t_s), inst, v, (COMB_POLICY, COMB_BASELINE)))
        return pts
    raise ConfigurationError(f"unknown preset {name!r}")


PRESETS = ("fig1a", "fig1b", "fig2", "pricing", "impossibility", "mpath")


# -- experiments ------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    policy: str
    param: float
    mean: float
    std: float
    trials: int


@dataclass
class ExperimentSummary:
    rows: list
    raw: list                      # (experiment, policy, param, trial, final_regret)
    trajectories: dict = field(default_factory=dict)
    std_degenerate: bool = False

    def lookup(self, experiment, policy, param):
        for r in self.rows:
            if r.experiment == experiment and r.policy == policy and math.isclose(r.param, param):
                return r
        raise KeyError((experiment, policy, param))

    def finals(self, experiment, policy, param):
        return np.array([row[4] for row in self.raw
                         if row[0] == experiment and row[1] == policy and math.isclose(row[2], param)])


def _run_job(job):
    config, keep_traj, use_numba = job
    res = run_trial(config, use_numba=use_numba)
    return res.final_regret, (res.trajectory if keep_traj else None)


def run_experiment(points, trials, seed=0, workers=1, trajectories=False, fixed_offline=False,
                   use_numba=None, allow_invalid_v=False) -> ExperimentSummary:
    """Run every (point, policy) for ``trials`` trials.

    Trial i of every configuration uses root seed ``mix(seed, TRIAL, i)``, so
    all policies face the same offline data and the same per-pull rewards.
    Results are merged by index and do not depend on ``workers``.
    """
    if trials < 1:
        raise RejectedInputError("trials must be >= 1")
    offline_seed = rng.mix(seed, rng.PURPOSE_EXPERIMENT_OFFLINE) if fixed_offline else None
    seeds = [rng.trial_seed(seed, i) for i in range(trials)]
    keys, jobs = [], []
    for pt in points:
        for pol in pt.policies:
            for i, s in enumerate(seeds):
                cfg = TrialConfig(pt.instance, pol, pt.v, seed=s, offline_seed=offline_seed,
                                  allow_invalid_v=allow_invalid_v)
                keys.append((pt.experiment, pol, pt.param, i))
                jobs.append((cfg, trajectories, use_numba))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_job(j) for j in jobs]
    raw = [key + (res[0],) for key, res in zip(keys, results)]
    trajs = {key: res[1] for key, res in zip(keys, results)} if trajectories else {}
    rows = []
    for pt in points:
        for pol in pt.policies:
            finals = np.array([r[4] for r in raw if r[0] == pt.experiment and r[1] == pol and r[2] == pt.param])
            std = float(finals.std(ddof=1)) if finals.size > 1 else 0.0
            rows.append(SummaryRow(pt.experiment, pol, float(pt.param), float(finals.mean()), std, int(finals.size)))
    if trials == 1:
        log.warning("single trial: standard deviations reported as 0")
    return ExperimentSummary(rows, raw, trajs, std_degenerate=(trials == 1))


# -- CSV ----------------------------------------------------------------------------

def fmt_num(x):
    return f"{float(x):.9g}"


def atomic_write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_csv(summary: ExperimentSummary) -> str:
    lines = ["experiment,policy,param,mean,std,trials"]
    for r in summary.rows:
        lines.append(f"{r.experiment},{r.policy},{fmt_num(r.param)},{fmt_num(r.mean)},{fmt_num(r.std)},{r.trials}")
    return "\n".join(lines) + "\n"


def raw_csv(summary: ExperimentSummary) -> str:
    lines = ["experiment,policy,param,trial,final_regret"]
    for exp, pol, param, trial, final in summary.raw:
        lines.append(f"{exp},{pol},{fmt_num(param)},{trial},{fmt_num(final)}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(summary: ExperimentSummary, path, stride=1):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write("experiment,policy,param,trial,t,cum_regret\n")
            for (exp, pol, param, trial), traj in summary.trajectories.items():
                head = f"{exp},{pol},{fmt_num(param)},{trial},"
                idx = list(range(stride - 1, traj.size, stride))
                if traj.size and idx[-1:] != [traj.size - 1]:
                    idx.append(traj.size - 1)
                fh.writelines(f"{head}{i + 1},{fmt_num(traj[i])}\n" for i in idx)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_summary_csv(text):
    import csv
    import io
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(SummaryRow(rec["experiment"], rec["policy"], float(rec["param"]),
                               float(rec["mean"]), float(rec["std"]), int(rec["trials"])))
    return rows

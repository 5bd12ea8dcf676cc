"""Instances, offline datasets, bias bounds and gaps for K-armed bandits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import rng
from .errors import RejectedInputError


@dataclass(frozen=True)
class GaussianArmPair:
    """Online/offline mean of one arm. Both laws have unit variance."""
    mu_on: float
    mu_off: float

    def __post_init__(self):
        if not (math.isfinite(self.mu_on) and math.isfinite(self.mu_off)):
            raise RejectedInputError("arm means must be finite")


class GaussianLaw:
    """Unit-variance Gaussian rewards around the instance means."""

    name = "gaussian"

    def draw(self, instance, arm, phase, gen, size):
        mu = instance.mu_off[arm] if phase == "offline" else instance.mu_on[arm]
        return mu + gen.standard_normal(size)


@dataclass(frozen=True)
class MabInstance:
    arms: tuple
    offline_counts: tuple
    horizon: int
    law: object = field(default_factory=GaussianLaw, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "offline_counts", tuple(int(c) for c in self.offline_counts))
        if len(self.arms) < 1:
            raise RejectedInputError("instance needs at least one arm")
        if len(self.offline_counts) != len(self.arms):
            raise RejectedInputError(
                f"offline_counts has {len(self.offline_counts)} entries, expected {len(self.arms)}")
        if any(c < 0 for c in self.offline_counts):
            raise RejectedInputError("offline counts must be non-negative")
        if int(self.horizon) < 1:
            raise RejectedInputError("horizon must be >= 1")
        object.__setattr__(self, "horizon", int(self.horizon))

    @classmethod
    def from_means(cls, mu_on, mu_off, offline_counts, horizon, law=None):
        arms = tuple(GaussianArmPair(float(a), float(b)) for a, b in zip(mu_on, mu_off))
        if len(mu_on) != len(mu_off):
            raise RejectedInputError("mu_on and mu_off differ in length")
        return cls(arms, tuple(offline_counts), horizon, law if law is not None else GaussianLaw())

    @property
    def k(self):
        return len(self.arms)

    @property
    def mu_on(self):
        return np.array([a.mu_on for a in self.arms], dtype=float)

    @property
    def mu_off(self):
        return np.array([a.mu_off for a in self.arms], dtype=float)

    @property
    def t_s(self):
        return np.array(self.offline_counts, dtype=np.int64)


@dataclass(frozen=True)
class OfflineDataset:
    """Per-arm offline samples; ``mean_cache[a]`` is None when arm a has no samples."""
    samples: tuple
    mean_cache: tuple

    @classmethod
    def from_samples(cls, samples: Sequence[Sequence[float]]):
        arrs = tuple(np.asarray(s, dtype=float) for s in samples)
        for a in arrs:
            a.setflags(write=False)
        means = tuple(float(a.mean()) if a.size else None for a in arrs)
        return cls(arrs, means)

    @property
    def counts(self):
        return np.array([s.size for s in self.samples], dtype=np.int64)

    def packed_means(self):
        """Means as a float array for the kernels; NaN marks arms without data."""
        return np.array([np.nan if m is None else m for m in self.mean_cache], dtype=float)


@dataclass(frozen=True)
class BiasBound:
    """Per-arm bound V(a) on |mu_off(a) - mu_on(a)|; ``inf`` means no knowledge."""
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        if np.any(np.isnan(v)) or np.any(v < 0):
            raise RejectedInputError("bias bound entries must be in [0, inf]")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def infinite(cls, k):
        return cls(np.full(k, np.inf))

    @classmethod
    def exact(cls, instance: MabInstance):
        return cls(np.abs(instance.mu_off - instance.mu_on))

    def __len__(self):
        return self.v.size

    @property
    def v_max(self):
        return float(self.v.max())


@dataclass(frozen=True)
class GapProfile:
    delta: np.ndarray
    mu_star: float
    optimal_arms: tuple


def sample_offline(instance: MabInstance, seed: int) -> OfflineDataset:
    samples = []
    for a, n in enumerate(instance.offline_counts):
        gen = rng.stream(seed, rng.PURPOSE_OFFLINE, a)
        samples.append(instance.law.draw(instance, a, "offline", gen, n))
    return OfflineDataset.from_samples(samples)


def online_reward_table(instance: MabInstance, seed: int, depth: Optional[int] = None):
    """Row a holds the rewards of the 1st, 2nd, ... online pull of arm a.

    Indexing rewards by pull count means every policy run under the same seed
    sees the same reward for the j-th pull of an arm.
    """
    depth = instance.horizon if depth is None else int(depth)
    table = np.empty((instance.k, depth))
    for a in range(instance.k):
        gen = rng.stream(seed, rng.PURPOSE_ONLINE, a)
        table[a] = instance.law.draw(instance, a, "online", gen, depth)
    return table


def validate_bias_bound(instance: MabInstance, bound: BiasBound) -> bool:
    if len(bound) != instance.k:
        raise RejectedInputError(f"bias bound has {len(bound)} entries, instance has {instance.k} arms")
    gap = np.abs(instance.mu_off - instance.mu_on)
    return bool(np.all(bound.v >= gap))


def gap_profile(instance: MabInstance) -> GapProfile:
    mu = instance.mu_on
    mu_star = float(mu.max())
    delta = mu_star - mu
    optimal = tuple(int(i) for i in np.flatnonzero(delta == 0))
    return GapProfile(delta, mu_star, optimal)


# -- key = value instance files ---------------------------------------------

def _fmt(x):
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def format_instance(instance: MabInstance, bound: Optional[BiasBound] = None) -> str:
    lines = [
        f"k = {instance.k}",
        f"t = {instance.horizon}",
        "mu_on = " + " ".join(_fmt(x) for x in instance.mu_on),
        "mu_off = " + " ".join(_fmt(x) for x in instance.mu_off),
        "t_s = " + " ".join(str(c) for c in instance.offline_counts),
    ]
    if bound is not None:
        lines.append("v = " + " ".join(_fmt(x) for x in bound.v))
    return "\n".join(lines) + "\n"


def parse_instance(text: str):
    """Parse an instance file. Returns ``(instance, bound_or_None)``."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise RejectedInputError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        fields[key.lower()] = val
    missing = {"k", "t", "mu_on", "mu_off", "t_s"} - fields.keys()
    if missing:
        raise RejectedInputError(f"instance file missing fields: {sorted(missing)}")
    try:
        k = int(fields["k"])
        horizon = int(float(fields["t"]))
        mu_on = [float(x) for x in fields["mu_on"].split()]
        mu_off = [float(x) for x in fields["mu_off"].split()]
        t_s = [int(float(x)) for x in fields["t_s"].split()]
        v = [float(x) for x in fields["v"].split()] if "v" in fields else None
    except ValueError as exc:
        raise RejectedInputError(f"malformed instance file: {exc}") from None
    for name, arr in (("mu_on", mu_on), ("mu_off", mu_off), ("t_s", t_s)) + ((("v", v),) if v else ()):
        if len(arr) != k:
            raise RejectedInputError(f"{name} has {len(arr)} entries, k = {k}")
    inst = MabInstance.from_means(mu_on, mu_off, t_s, horizon)
    return inst, (BiasBound(np.array(v)) if v is not None else None)


def read_instance(path):
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())

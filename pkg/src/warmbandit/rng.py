"""Deterministic random streams.

Every trial owns one 64-bit root seed. Each purpose (offline samples, online
rewards, ...) and each arm gets its own child stream::

    child = SeedSequence(entropy=root_seed, spawn_key=(purpose_tag, arm_index))
    gen   = Generator(PCG64(child))

``SeedSequence`` is the mixing function; draws come from PCG64 and Gaussian
variates use numpy's ziggurat ``standard_normal``. Identical seeds therefore
give bit-identical samples on the same numpy build, regardless of how many
trials run in parallel or in which order.
"""
import numpy as np

PURPOSE_OFFLINE = 1
PURPOSE_ONLINE = 2
PURPOSE_TRIAL = 3
PURPOSE_EXPERIMENT_OFFLINE = 4

MASK64 = (1 << 64) - 1


def mix(root_seed, purpose_tag, index=0):
    """Derive a child 64-bit seed from ``(root_seed, purpose_tag, index)``."""
    ss = np.random.SeedSequence(entropy=int(root_seed) & MASK64,
                                spawn_key=(int(purpose_tag), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(root_seed, purpose_tag, index=0):
    ss = np.random.SeedSequence(entropy=int(root_seed) & MASK64,
                                spawn_key=(int(purpose_tag), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def trial_seed(experiment_seed, trial_index):
    return mix(experiment_seed, PURPOSE_TRIAL, trial_index)

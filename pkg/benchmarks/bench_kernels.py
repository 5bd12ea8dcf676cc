"""Compare the numba and numpy trial kernels.

    python3 benchmarks/bench_kernels.py --horizon 10000 --repeats 5

Prints one line per (kernel, policy, backend) with the best wall time per
trial, and checks that both backends return the same actions.
"""
import argparse
import time

import numpy as np

from warmbandit import _accel
from warmbandit.comb import comb_actions, comb_reward_table, sample_comb_offline
from warmbandit.kernels import mab_actions
from warmbandit.model import online_reward_table, sample_offline
from warmbandit.policies import PolicyKind
from warmbandit.sim import preset_mpath, preset_optimistic


def best_time(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_mab(horizon, repeats, seed):
    inst, v = preset_optimistic(0.4, horizon=horizon)
    data = sample_offline(inst, seed)
    table = online_reward_table(inst, seed)
    rows = []
    for kind in PolicyKind:
        args = (kind, horizon, data.counts, data.packed_means(), v.v, table)
        mab_actions(*args, use_numba=True)  # compile outside the timing
        t_fast, a_fast = best_time(lambda: mab_actions(*args, use_numba=True), repeats)
        t_slow, a_slow = best_time(lambda: mab_actions(*args, use_numba=False), repeats)
        rows.append(("mab", kind.cli_name, t_fast, t_slow, np.array_equal(a_fast, a_slow)))
    return rows


def bench_comb(horizon, repeats, seed):
    inst, v = preset_mpath(horizon=horizon)
    means = sample_comb_offline(inst, seed)
    table = comb_reward_table(inst, seed)
    comb_actions(inst, means, v.v, table, use_numba=True)
    t_fast, a_fast = best_time(lambda: comb_actions(inst, means, v.v, table, use_numba=True), repeats)
    t_slow, a_slow = best_time(lambda: comb_actions(inst, means, v.v, table, use_numba=False), repeats)
    return [("comb", "min-comb-ucb/mpath", t_fast, t_slow, a_fast == a_slow)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = bench_mab(args.horizon, args.repeats, args.seed) + bench_comb(args.horizon, args.repeats, args.seed)
    print(f"{'kernel':<6} {'policy':<20} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} same")
    for kernel, name, fast, slow, same in rows:
        print(f"{kernel:<6} {name:<20} {fast * 1e3:>11.2f} {slow * 1e3:>11.2f} {slow / fast:>7.0f}x {same}")


if __name__ == "__main__":
    main()

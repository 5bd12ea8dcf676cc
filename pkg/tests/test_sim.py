import numpy as np
import pytest

from warmbandit.bounds import omega, sav0
from warmbandit.errors import ConfigurationError, RejectedInputError
from warmbandit.model import BiasBound, MabInstance, gap_profile, sample_offline, validate_bias_bound
from warmbandit.sim import (BIAS_GRID, PRESETS, T_GRID, SweepPoint, TrialConfig, UtilityLaw, build_sweep,
                            parse_summary_csv, preset_impossibility, preset_mpath, preset_optimistic,
                            preset_pessimistic, preset_pricing, preset_t_sweep, raw_csv, run_experiment,
                            run_trial, summary_csv, write_trajectory_csv)


def test_single_arm_has_zero_regret():
    inst = MabInstance.from_means([0.3], [0.3], [5], 200)
    res = run_trial(TrialConfig(inst, "min-ucb", BiasBound([0.0]), seed=1))
    assert np.all(res.trajectory == 0) and res.trajectory.size == 200


@pytest.mark.parametrize("policy", ["min-ucb", "pure-ucb", "ucbs", "monucb"])
def test_trial_invariants(policy):
    inst, v = preset_optimistic(0.5, horizon=2000)
    res = run_trial(TrialConfig(inst, policy, v, seed=9), keep_actions=True)
    assert np.all(np.diff(res.trajectory) >= 0)
    assert res.final_regret == pytest.approx(float(res.counts @ gap_profile(inst).delta))
    assert res.counts.sum() == 2000 and len(res.actions) == 2000
    again = run_trial(TrialConfig(inst, policy, v, seed=9))
    assert np.array_equal(res.trajectory, again.trajectory)


def test_pure_ucb_regret_envelope():
    inst, v = preset_optimistic(0.3)
    finals = [run_trial(TrialConfig(inst, "pure-ucb", v, seed=s)).final_regret for s in range(50)]
    assert 50 <= min(finals) and max(finals) <= 800


def test_invalid_bias_bound_is_rejected_unless_flagged():
    inst, _ = preset_optimistic(0.5, horizon=100)
    small = BiasBound(np.zeros(10))
    with pytest.raises(RejectedInputError):
        run_trial(TrialConfig(inst, "min-ucb", small))
    res = run_trial(TrialConfig(inst, "min-ucb", small, allow_invalid_v=True))
    assert res.invalid_v


def test_unknown_policy_names():
    inst, v = preset_optimistic(0.5, horizon=100)
    with pytest.raises(ConfigurationError):
        run_trial(TrialConfig(inst, "thompson", v))
    comb, cv = preset_mpath(horizon=50)
    with pytest.raises(ConfigurationError):
        run_trial(TrialConfig(comb, "min-ucb", cv))


def test_optimistic_preset():
    inst, v = preset_optimistic(0.3)
    assert inst.k == 10 and inst.horizon == 10_000 and list(inst.t_s) == [1000] * 10
    assert list(inst.mu_on) == [1.0] + [0.0] * 9
    assert inst.mu_off[0] == pytest.approx(0.7) and np.allclose(inst.mu_off[1:], 0.3)
    assert validate_bias_bound(inst, v)
    gaps = gap_profile(inst).delta
    om = omega(v.v, inst.mu_off, inst.mu_on)
    assert np.all(om[1:] < gaps[1:])
    inst, v = preset_optimistic(0.5)
    om = omega(v.v, inst.mu_off, inst.mu_on)
    assert np.all(om[1:] >= gap_profile(inst).delta[1:] - 1e-12)


def test_pessimistic_preset():
    inst, v = preset_pessimistic(1.0)
    assert list(inst.mu_off) == [0.0] + [-1.0] * 9 and list(v.v) == [1.0] * 10
    for lvl in BIAS_GRID:
        inst, v = preset_pessimistic(lvl)
        om = omega(v.v, inst.mu_off, inst.mu_on)
        assert np.allclose(om, 0)
        assert all(sav0(1000, 1.0, w) == pytest.approx(1000) for w in om[1:])


def test_t_sweep_preset():
    for lvl in (0.4, 0.5, 0.6):
        for horizon in T_GRID:
            inst, _ = preset_t_sweep(lvl, horizon)
            assert inst.k == 10 and list(inst.t_s) == [10_000] * 10 and inst.horizon == horizon


def test_pricing_preset():
    inst, v = preset_pricing()
    assert list(inst.mu_on) == pytest.approx([0.16, 0.25, 0.16])
    assert int(np.argmax(inst.mu_on)) == 1
    assert np.array_equal(inst.mu_on, inst.mu_off) and np.all(v.v == 0)
    shifted, v = preset_pricing(shift=0.1)
    assert shifted.mu_off[1] == pytest.approx(0.5 * 0.6)
    assert validate_bias_bound(shifted, v)
    data = sample_offline(shifted, 3)
    assert set(np.unique(np.concatenate(data.samples[1:2]))) <= {0.0, 0.5}
    with pytest.raises(RejectedInputError):
        preset_pricing(prices=(0.2, -0.1))
    assert UtilityLaw("exponential:2").survival(1.0) == pytest.approx(np.exp(-0.5))
    with pytest.raises(RejectedInputError):
        UtilityLaw("cauchy:1")


def test_impossibility_preset():
    (np_, p, vp), (nq, q, vq) = preset_impossibility(0.25, 0.2, 0.1, 10_000)
    assert (np_, nq) == ("I_P", "I_Q")
    assert int(np.argmax(p.mu_on)) == 0 and int(np.argmax(q.mu_on)) == 1
    assert gap_profile(p).delta[1] == pytest.approx(10_000 ** -0.25)
    a, b = sample_offline(p, 4), sample_offline(q, 4)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.samples, b.samples))
    assert np.all(np.isinf(vp.v)) and np.all(np.isinf(vq.v))


def test_mpath_preset():
    inst, v = preset_mpath()
    assert inst.k == 10 and inst.m == 2 and np.all(v.v == 0)
    _, vinf = preset_mpath(v_known=False)
    assert np.all(np.isinf(vinf.v))


def test_build_sweep_shapes():
    assert len(build_sweep("fig1a")) == 10 and len(build_sweep("fig1b")) == 10
    fig2 = build_sweep("fig2")
    assert len(fig2) == 18 and {p.experiment for p in fig2} == {"fig2-v0.4", "fig2-v0.5", "fig2-v0.6"}
    assert set(PRESETS) == {"fig1a", "fig1b", "fig2", "pricing", "impossibility", "mpath"}
    with pytest.raises(ConfigurationError):
        build_sweep("fig9")


def test_experiment_summary_structure_and_std():
    summary = run_experiment(build_sweep("fig1a"), trials=2, seed=3)
    assert len(summary.rows) == 40 and len(summary.raw) == 80
    for r in summary.rows:
        assert r.trials == 2 and r.std >= 0
        finals = summary.finals(r.experiment, r.policy, r.param)
        assert r.mean == pytest.approx(finals.mean())
        assert r.std == pytest.approx(finals.std(ddof=1))
    one = run_experiment(build_sweep("fig1a", grid=(0.2,)), trials=1, seed=3)
    assert one.std_degenerate and all(r.std == 0 for r in one.rows)
    with pytest.raises(RejectedInputError):
        run_experiment(build_sweep("fig1a"), trials=0)


def test_constant_zero_regret_summary():
    inst = MabInstance.from_means([0.0], [0.0], [0], 50)
    pt = SweepPoint("zero", 0.0, inst, BiasBound([0.0]))
    s = run_experiment([pt], trials=5, seed=0)
    assert all(r.mean == 0 and r.std == 0 for r in s.rows)


def test_trial_seeds_shared_across_policies_and_points():
    # with V = inf MIN-UCB must replay PURE-UCB trial by trial
    inst, _ = preset_optimistic(0.2, horizon=1500)
    pt = SweepPoint("x", 0.2, inst, BiasBound.infinite(10), ("min-ucb", "pure-ucb"))
    s = run_experiment([pt], trials=4, seed=8)
    assert np.array_equal(s.finals("x", "min-ucb", 0.2), s.finals("x", "pure-ucb", 0.2))


def test_workers_do_not_change_results():
    pts = build_sweep("fig1a", grid=(0.3, 0.7))
    a = run_experiment(pts, trials=3, seed=11, workers=1)
    b = run_experiment(pts, trials=3, seed=11, workers=2)
    assert summary_csv(a) == summary_csv(b) and raw_csv(a) == raw_csv(b)


def test_fixed_offline_mode_pins_dataset():
    inst, v = preset_optimistic(0.2, horizon=300)
    pt = SweepPoint("f", 0.2, inst, v, ("monucb",))
    s = run_experiment([pt], trials=4, seed=2, fixed_offline=True)
    # trial 0 replays directly with the pinned offline seed
    from warmbandit import rng
    seed0 = rng.trial_seed(2, 0)
    direct = run_trial(TrialConfig(inst, "monucb", v, seed=seed0,
                                   offline_seed=rng.mix(2, rng.PURPOSE_EXPERIMENT_OFFLINE)))
    assert s.raw[0][4] == direct.final_regret


def test_csv_formats(tmp_path):
    pts = build_sweep("fig1a", grid=(0.1,))
    s = run_experiment(pts, trials=2, seed=1, trajectories=True)
    text = summary_csv(s)
    assert text.splitlines()[0] == "experiment,policy,param,mean,std,trials"
    for back, row in zip(parse_summary_csv(text), s.rows):
        assert (back.experiment, back.policy, back.param, back.trials) == (row.experiment, row.policy, row.param, row.trials)
        assert back.mean == float(f"{row.mean:.9g}") and back.std == float(f"{row.std:.9g}")
    assert raw_csv(s).splitlines()[0] == "experiment,policy,param,trial,final_regret"
    path = tmp_path / "traj.csv"
    write_trajectory_csv(s, path, stride=1000)
    lines = path.read_text().splitlines()
    assert lines[0] == "experiment,policy,param,trial,t,cum_regret"
    assert len(lines) == 1 + 8 * 10
    assert lines[10].split(",")[4] == "10000"


def test_comb_trial_runs():
    inst, v = preset_mpath(horizon=500)
    res = run_trial(TrialConfig(inst, "min-comb-ucb", v, seed=3))
    assert res.trajectory.size == 500 and np.all(np.diff(res.trajectory) >= 0)
    assert res.counts.sum() == 1000

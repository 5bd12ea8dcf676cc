import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from warmbandit.bounds import (BoundQuery, bound_report, comb_dep_terms, comb_dep_upper,
                               comb_indep_upper_profile, delta_min_profile, dep_upper_explicit,
                               dep_upper_profile_terms, format_report, impossibility_pair,
                               impossibility_threshold, indep_upper_profile, omega, sav0,
                               sav_eps_and_kappa, tau_star_waterfill)
from warmbandit.comb import CombInstance, Explicit, MPath, TopM
from warmbandit.errors import RejectedInputError
from warmbandit.model import BiasBound, MabInstance, validate_bias_bound
from warmbandit.sim import preset_optimistic, preset_pessimistic


def test_omega_examples():
    inst, v = preset_optimistic(0.3)
    om = omega(v.v, inst.mu_off, inst.mu_on)
    assert om[1:] == pytest.approx([0.6] * 9)
    for lvl in (0.1, 0.5, 1.0):
        inst, v = preset_pessimistic(lvl)
        assert np.allclose(omega(v.v, inst.mu_off, inst.mu_on), 0.0)
    assert omega(0.0, 1.5, 1.5) == 0.0


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 2)), min_size=1, max_size=6))
def test_omega_range_under_valid_bound(rows):
    mu_on = np.array([r[0] for r in rows])
    mu_off = np.array([r[1] for r in rows])
    v = np.abs(mu_off - mu_on) + np.array([r[2] for r in rows])
    inst = MabInstance.from_means(mu_on, mu_off, [0] * len(rows), 5)
    assert validate_bias_bound(inst, BiasBound(v))
    om = omega(v, mu_off, mu_on)
    assert np.all(om >= -1e-12) and np.all(om <= 2 * v + 1e-12)


def test_sav0_examples():
    assert sav0(1000, 1.0, 1.2) == 0.0
    assert sav0(1000, 1.0, 0.0) == 1000.0
    assert sav0(1000, 1.0, 0.4) == pytest.approx(360.0)
    with pytest.raises(RejectedInputError):
        sav0(10, 0.0, 0.1)


def test_sav0_monotonicity_on_grids():
    for d in (0.1, 0.5, 1.0, 3.0):
        for om in np.linspace(0, 2 * d, 9):
            vals = [sav0(ts, d, om) for ts in range(0, 2000, 50)]
            assert all(b >= a for a, b in zip(vals, vals[1:]))
        for ts in (0, 10, 1000):
            vals = [sav0(ts, d, om) for om in np.linspace(0, 3 * d, 31)]
            assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_sav_eps_and_kappa_examples():
    tiny = BoundQuery(epsilon=1e-8)
    for om in (0.0, 0.3, 0.9):
        s_eps, _ = sav_eps_and_kappa(tiny, 1000, 1.0, om)
        assert abs(s_eps - sav0(1000, 1.0, om)) <= 1e-6 * 1000
    s_eps, _ = sav_eps_and_kappa(BoundQuery(epsilon=1.0), 1000, 1.0, 2.0)
    assert s_eps == 0.0
    _, kappa = sav_eps_and_kappa(BoundQuery(epsilon=1.0, consistency_c=1 / 8), 1000, 1.0, 0.0)
    assert kappa == pytest.approx(0.0, abs=1e-15)
    _, kappa = sav_eps_and_kappa(BoundQuery(epsilon=0.5, consistency_c=10.0), 10, 1.0, 0.0)
    assert kappa < 0


def test_bound_query_ranges():
    for kw in ({"epsilon": 0}, {"epsilon": 1.5}, {"consistency_c": 0}, {"consistency_p": 1}, {"delta": 1}):
        with pytest.raises(RejectedInputError):
            BoundQuery(**kw)


def _hp_dep_upper(k, horizon, gaps, t_s, om):
    mpmath.mp.dps = 40
    total = mpmath.pi ** 2 / 6 * max(gaps)
    for d, ts, w in zip(gaps, t_s, om):
        if d > 0:
            shortfall = max(1 - mpmath.mpf(w) / d, 0) ** 2
            total += max(32 * mpmath.log(4 * k * mpmath.mpf(horizon) ** 4) / d - ts * d * shortfall, d)
    return float(total)


def test_dep_upper_examples():
    inst = MabInstance.from_means([1, 1, 1], [1, 1, 1], [0] * 3, 100)
    assert dep_upper_explicit(inst, BiasBound.infinite(3)) == 0.0
    inst = MabInstance.from_means([1, 0], [1, 0], [0, 0], 10_000)
    val = dep_upper_explicit(inst, BiasBound([0, 0]))
    # pi^2/6 + 32 log(8e16); log(8e16) = 38.9207..., so the value is 1247.11
    assert val == pytest.approx(1247.11, abs=0.01)
    assert val == pytest.approx(_hp_dep_upper(2, 10_000, [0, 1], [0, 0], [0, 0]), rel=1e-12)
    inst = MabInstance.from_means([1, 0], [1, 0], [0, 10 ** 6], 10_000)
    val = dep_upper_explicit(inst, BiasBound([0, 0]))
    assert val == pytest.approx(2.645, abs=1e-3)
    assert val == pytest.approx(math.pi ** 2 / 6 + 1, rel=1e-12)


@settings(max_examples=40)
@given(st.integers(0, 2**32))
def test_dep_upper_matches_high_precision(seed):
    g = np.random.default_rng(seed)
    k = int(g.integers(2, 8))
    mu_on = g.uniform(-1, 1, k)
    mu_off = mu_on + g.uniform(-0.5, 0.5, k)
    t_s = g.integers(0, 5000, k)
    inst = MabInstance.from_means(mu_on, mu_off, t_s, int(g.integers(10, 10 ** 6)))
    v = BiasBound.exact(inst)
    gaps = mu_on.max() - inst.mu_on
    om = omega(v.v, inst.mu_off, inst.mu_on)
    assert dep_upper_explicit(inst, v) == pytest.approx(
        _hp_dep_upper(k, inst.horizon, gaps, t_s, om), rel=1e-9)
    terms = dep_upper_profile_terms(inst, v)
    assert [t is None for t in terms] == list(gaps == 0)


def bisection_tau(t_s, mass):
    f = lambda tau: sum(max(tau - x, 0.0) for x in t_s) - mass
    lo, hi = float(min(t_s)), float(max(t_s)) + mass
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
    return (lo + hi) / 2


def test_waterfill_closed_form_cases():
    wf = tau_star_waterfill([1000] * 10, 10_000)
    assert wf.tau_exact == 2000 and all(n == 1000 for n in wf.n_exact)
    assert tau_star_waterfill([100] * 5 + [0] * 5, 1000).tau_exact == 150
    assert tau_star_waterfill([1000] * 8 + [0] * 2, 1000).tau_exact == 500
    with pytest.raises(RejectedInputError):
        tau_star_waterfill([], 10)
    with pytest.raises(RejectedInputError):
        tau_star_waterfill([1, 2], 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 10 ** 4), min_size=1, max_size=20), st.integers(1, 10 ** 5))
def test_waterfill_properties(t_s, horizon):
    wf = tau_star_waterfill(t_s, horizon)
    assert sum(wf.n_exact) == horizon
    assert all(wf.tau_exact <= Fraction(x) + n for x, n in zip(t_s, wf.n_exact))
    assert wf.tau_star >= horizon / len(t_s) + min(t_s) - 1e-9
    assert np.allclose(wf.n_star, np.maximum(wf.tau_star - np.array(t_s), 0))
    assert abs(wf.tau_star - bisection_tau(t_s, horizon)) <= 1e-9 * wf.tau_star


def test_waterfill_matches_generic_lp_solver():
    g = np.random.default_rng(5)
    for _ in range(30):
        k = int(g.integers(1, 12))
        t_s = g.integers(0, 2000, k)
        horizon = int(g.integers(1, 20_000))
        # variables (tau, n_1..n_k): maximize tau
        c = np.zeros(k + 1)
        c[0] = -1
        a_ub = np.hstack([np.ones((k, 1)), -np.eye(k)])
        a_eq = np.hstack([[0.0], np.ones(k)])[None, :]
        res = linprog(c, A_ub=a_ub, b_ub=t_s, A_eq=a_eq, b_eq=[horizon],
                      bounds=[(None, None)] + [(0, None)] * k, method="highs")
        assert res.status == 0
        assert tau_star_waterfill(t_s, horizon).tau_star == pytest.approx(-res.fun, rel=1e-7)


def test_indep_profile_examples():
    inst = MabInstance.from_means([1] + [0] * 9, [1] + [0] * 9, [1000] * 10, 10_000)
    prof = indep_upper_profile(inst, BiasBound([0] * 10), 0.1)
    # 1e4 * sqrt(ln(1e5) / 2000) = 1e4 * 0.0758713...
    assert prof.branch_warm == pytest.approx(758.71, abs=0.01)
    assert prof.branch_warm == pytest.approx(1e4 * math.sqrt(math.log(1e5) / 2000), rel=1e-12)
    assert prof.label == "order-level profile"
    prof = indep_upper_profile(inst, BiasBound.infinite(10), 0.1)
    assert prof.branch_warm == math.inf and prof.min == prof.branch_ucb
    zero = MabInstance.from_means([1] + [0] * 9, [1] + [0] * 9, [0] * 10, 10_000)
    prof = indep_upper_profile(zero, BiasBound([0] * 10), 0.1)
    assert prof.branch_warm == pytest.approx(prof.branch_ucb, rel=1e-12)
    with pytest.raises(RejectedInputError):
        indep_upper_profile(MabInstance.from_means([0] * 5, [0] * 5, [0] * 5, 3), BiasBound([0] * 5), 0.1)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 5000), min_size=2, max_size=12), st.integers(12, 10 ** 5),
       st.floats(0, 2), st.floats(0.01, 0.99))
def test_comb_profiles_reduce_to_mab(t_s, horizon, v_max, delta):
    k = len(t_s)
    inst = MabInstance.from_means([1] + [0] * (k - 1), [1] + [0] * (k - 1), t_s, horizon)
    mab = indep_upper_profile(inst, BiasBound([v_max] * k), delta)
    gen = comb_indep_upper_profile(t_s, horizon, v_max, delta, gamma=1.0, rho=1.0, m=1)
    lin = comb_indep_upper_profile(t_s, horizon, v_max, delta, m=1, linear=True)
    for prof in (gen, lin):
        assert prof.branch_1 == pytest.approx(mab.branch_ucb, rel=1e-12)
        assert prof.branch_2 == pytest.approx(mab.branch_warm, rel=1e-12)
        assert prof.min == pytest.approx(mab.min, rel=1e-12)


def test_comb_linear_tau_example():
    prof = comb_indep_upper_profile([0] * 4, 10_000, 0.0, 0.1, m=2, linear=True)
    assert prof.tau_star == 5000
    with pytest.raises(RejectedInputError):
        comb_indep_upper_profile([0] * 4, 10_000, 0.0, 0.1, rho=0.0)


def test_delta_min_examples():
    inst = CombInstance([1, 1, 0, 3], [1, 1, 0, 3], [0] * 4, 100, MPath(2))
    s = delta_min_profile(inst)
    assert s.delta_min == (1.0, 1.0, None, None) and s.delta_max == 1.0
    single = CombInstance([1, 2], [1, 2], [0, 0], 100, Explicit(((0, 1),)))
    s = delta_min_profile(single)
    assert s.delta_max == 0 and s.delta_min == (None, None)
    top = CombInstance([2, 1, 0], [2, 1, 0], [0] * 3, 100, Explicit(((0,), (1,), (2,))))
    s = delta_min_profile(top)
    assert s.delta_min == (None, 1.0, 2.0) and s.delta_max == 2.0


def test_comb_dep_examples():
    inst = CombInstance([1, 1, 0.5, 0.5], [1, 1, 0.5, 0.5], [50] * 4, 100, MPath(2))
    terms, summ = comb_dep_terms(inst, np.zeros(4))
    assert summ.delta_min[2] == 1.0
    assert terms[2][1] == pytest.approx(100.0)
    # omega >= delta_min: savings vanish
    far = CombInstance([1, 1, 0, 0], [1, 1, 2, 2], [50] * 4, 100, MPath(2))
    terms, _ = comb_dep_terms(far, np.full(4, 2.0))
    assert terms[2][1] == 0.0 and terms[2][0] == pytest.approx(2 * math.log(100) / 2)
    # m = 1 matches the MAB order-level terms arm by arm
    mu = np.array([0.9, 0.5, 0.1, 0.4])
    t_s = [20, 30, 0, 5]
    cinst = CombInstance(mu, mu, t_s, 500, TopM(1))
    minst = MabInstance.from_means(mu, mu, t_s, 500)
    cterms, _ = comb_dep_terms(cinst, np.zeros(4))
    mterms = dep_upper_profile_terms(minst, BiasBound(np.zeros(4)))
    for c, m in zip(cterms, mterms):
        assert (c is None) == (m is None)
        if c is not None:
            assert c[0] == pytest.approx(m, rel=1e-12)
    assert comb_dep_upper(cinst, np.zeros(4)) >= 0


def test_impossibility_examples():
    assert impossibility_threshold(0.2, 1e8) == pytest.approx(0.540, abs=1e-3)
    hp = float(mpmath.power(1e8, 0.2) / (4 * mpmath.log(1e8)))
    assert impossibility_threshold(0.2, 1e8) == pytest.approx(hp, rel=1e-12)
    p, q = impossibility_pair(0.25, 0.2, 0.5, 1e8)
    q2 = 1 / (math.sqrt(0.5 * math.log(1e8)) * 1e8 ** (0.25 - 0.1)) - 1e8 ** -0.25
    assert q.mu_on[1] == pytest.approx(0.0108, abs=1e-4)
    assert q.mu_on[1] == pytest.approx(q2, rel=1e-12)
    assert np.array_equal(p.mu_off, q.mu_off)
    assert list(p.mu_on) == [0.0, -0.01]
    with pytest.raises(RejectedInputError, match="threshold"):
        impossibility_pair(0.25, 0.2, 0.6, 1e8)


def test_bound_report_fields():
    inst, v = preset_optimistic(0.3)
    rep = bound_report(inst, v)
    assert rep.tau_star == 2000 and np.all(rep.sav0 >= 0)
    assert rep.kappa_eps[0] is None
    text = format_report(rep)
    assert "tau_star=2000" in text and "indep_profile=order-level" in text
    assert "kappa_eps=undef," in text
    cinst = CombInstance([1, 1, 0, 0], [1, 1, 0, 0], [50] * 4, 100, MPath(2))
    rep = bound_report(MabInstance.from_means(cinst.mu_on, cinst.mu_off, [50] * 4, 100),
                       BiasBound(np.zeros(4)), comb_instance=cinst)
    assert rep.comb["tau_star_c"] == pytest.approx(100.0)
    assert "comb_dep_upper=" in format_report(rep)

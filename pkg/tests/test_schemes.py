from dataclasses import replace

import numpy as np
import pytest

from conftest import instance
from oracles import ee_grid
from starfd import SCHEMES, SimulationParams, StarRisProfile, composite_channels, draw_channel_set, run_scheme
from starfd.power import initial_power, optimize_power
from starfd.schemes import initial_point, run_cr_fd_eem, run_sr_fd_eem, run_sr_fd_srm, run_sr_hd_eem
from starfd.system import PowerAllocation

M8 = SimulationParams(num_elements=8)


def run(name, params, seed):
    return run_scheme(name, draw_channel_set(params.geometry(), params.channel_params(), seed), params, seed)


@pytest.fixture(scope="module")
def m8_runs():
    out = {}
    for seed in range(6):
        cs = draw_channel_set(M8.geometry(), M8.channel_params(), seed)
        out[seed] = {s: run_scheme(s, cs, M8, seed) for s in SCHEMES}
    return out


def test_unknown_scheme():
    with pytest.raises(ValueError):
        run("SR-FD-XYZ", M8, 0)


def test_odd_elements_rejected_for_conventional():
    with pytest.raises(ValueError):
        run("CR-FD-EEM", SimulationParams(num_elements=7), 0)


def test_channel_length_must_match():
    cs = draw_channel_set(M8.geometry(), M8.channel_params(), 0)
    with pytest.raises(ValueError):
        run_scheme("SR-FD-EEM", cs, SimulationParams(num_elements=6), 0)


def test_named_wrappers(m8_runs):
    cs = draw_channel_set(M8.geometry(), M8.channel_params(), 0)
    for fn, name in ((run_sr_fd_eem, "SR-FD-EEM"), (run_sr_hd_eem, "SR-HD-EEM"),
                     (run_cr_fd_eem, "CR-FD-EEM"), (run_sr_fd_srm, "SR-FD-SRM")):
        assert fn(cs, M8, 0).ee == m8_runs[0][name].ee


def test_deterministic():
    a, b = run("SR-FD-EEM", M8, 3), run("SR-FD-EEM", M8, 3)
    assert a.ee == b.ee and a.ao_trace == b.ao_trace


def test_results_feasible(m8_runs):
    for seed, runs in m8_runs.items():
        for name, r in runs.items():
            if r.feasible:
                assert r.report.violations == []
                assert np.all(r.profile.beta_t + r.profile.beta_r == 1.0)


def test_ao_trace_monotone(m8_runs):
    for runs in m8_runs.values():
        for name in ("SR-FD-EEM", "SR-HD-EEM", "CR-FD-EEM"):
            t = runs[name].ao_trace
            assert all(b >= a - 1e-6 for a, b in zip(t, t[1:])), (name, t)


def test_conventional_not_above_star(m8_runs):
    for runs in m8_runs.values():
        cr, sr = runs["CR-FD-EEM"], runs["SR-FD-EEM"]
        if cr.feasible and sr.feasible:
            assert cr.ee <= sr.ee * 1.01 + 1e-6


def test_conventional_profile_is_on_off(m8_runs):
    for runs in m8_runs.values():
        r = runs["CR-FD-EEM"]
        if r.feasible:
            np.testing.assert_array_equal(r.profile.beta_t, [1, 1, 1, 1, 0, 0, 0, 0])


def test_two_element_conventional_is_one_per_side():
    p = SimulationParams(num_elements=2, r_u_th=0.1, r_d_th=0.5)
    for seed in range(10):
        r = run("CR-FD-EEM", p, seed)
        if r.feasible:
            np.testing.assert_array_equal(r.profile.beta_t, [1.0, 0.0])
            np.testing.assert_array_equal(r.profile.beta_r, [0.0, 1.0])


def test_sum_rate_scheme_dominance(m8_runs):
    for runs in m8_runs.values():
        srm, eem = runs["SR-FD-SRM"], runs["SR-FD-EEM"]
        if srm.feasible and eem.feasible:
            assert srm.r_u + srm.r_d >= 0.99 * (eem.r_u + eem.r_d)
            assert srm.ee <= 1.01 * eem.ee + 1e-6


def test_sum_rate_power_saturates_uplink_without_interference():
    cc, setup, prof, pw = instance(0, 8)
    g = replace(setup.gains(prof, cc), gamma3=0.0)
    res = optimize_power(initial_power(g, setup), g, setup, sum_rate_only=True)
    assert res.allocation.p_u == pytest.approx(setup.limits.p_u_max, rel=1e-6)


def test_half_duplex_independent_of_rsi():
    checked = 0
    for seed in range(6):
        a = run("SR-HD-EEM", M8.with_(sigma_si_db=-110.0), seed)
        b = run("SR-HD-EEM", M8.with_(sigma_si_db=-80.0), seed)
        assert a.feasible == b.feasible
        if a.feasible:
            assert a.ee == b.ee
            checked += 1
    assert checked >= 3


def _beats_random_points(r_u_th, r_d_th, seeds):
    p = SimulationParams(num_elements=1, r_u_th=r_u_th, r_d_th=r_d_th)
    setup = p.setup()
    rng = np.random.default_rng(9)
    for seed in seeds:
        cs = draw_channel_set(p.geometry(), p.channel_params(), seed)
        cc = composite_channels(cs)
        r = run_scheme("SR-FD-EEM", cs, p, seed)
        if not r.feasible:
            continue
        for _ in range(100):
            prof = StarRisProfile.from_split(rng.uniform(0, 1, 1), rng.uniform(0, 6.3, 1), rng.uniform(0, 6.3, 1))
            pw = PowerAllocation(rng.uniform(0, 0.1), rng.uniform(0, 1))
            g = setup.gains(prof, cc)
            r_u, r_d = setup.rates(pw, g)
            if r_u >= r_u_th and r_d >= r_d_th:
                assert r.ee >= setup.ee(pw, g) - 1e-9, seed


def test_ee_beats_random_points_single_element():
    _beats_random_points(0.1, 0.5, range(20))


@pytest.mark.xfail(strict=True, reason=(
    "without rate targets the first power step may switch the uplink off; "
    "the surface then moves all energy to transmission and p_u = 0 stays "
    "optimal, so alternation stops in a downlink-only corner (seeds 2, 7, 14)"))
def test_ee_beats_random_points_single_element_no_targets():
    _beats_random_points(0.0, 0.0, range(20))


def test_high_rsi_protects_uplink():
    """With strong RSI the EE optimum holds the uplink exactly at its target."""
    cc, setup, prof, _ = instance(0, 16)
    g = setup.gains(prof, cc)
    g_hi = replace(g, gamma_bb=30 * g.gamma_bb)
    res = optimize_power(initial_power(g_hi, setup), g_hi, setup)
    r_u, _ = setup.rates(res.allocation, g_hi)
    assert r_u == pytest.approx(setup.limits.r_u_th, abs=1e-6)
    ref = ee_grid(*setup.normalized(g_hi), setup)
    assert abs(setup.ee(res.allocation, g_hi) - ref) <= 0.01 * ref


def test_initial_point_none_when_unreachable():
    p = SimulationParams(num_elements=2)
    cc = composite_channels(draw_channel_set(p.geometry(), p.channel_params(), 0))
    assert initial_point(cc, p.setup(), None, np.random.default_rng(0)) is None
    r = run("SR-FD-EEM", p, 0)
    assert not r.feasible and r.statuses == ["no-feasible-init"]


def test_full_size_ordering():
    """Default system at M=50: full duplex above half duplex and conventional."""
    p = SimulationParams()
    ee = {s: np.mean([run(s, p, seed).ee for seed in range(3)]) for s in ("SR-FD-EEM", "SR-HD-EEM", "CR-FD-EEM")}
    assert ee["SR-FD-EEM"] > ee["SR-HD-EEM"]
    assert ee["SR-FD-EEM"] > ee["CR-FD-EEM"]

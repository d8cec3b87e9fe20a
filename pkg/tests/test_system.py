import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import instance
from starfd import SimulationParams
from starfd.channels import CompositeChannels, composite_channels, draw_channel_set
from starfd.schemes import run_scheme
from starfd.system import (
    EffectiveGains,
    NoiseParams,
    PowerAllocation,
    PowerModelParams,
    RateConstraints,
    StarRisProfile,
    SystemSetup,
    check_solution,
    decomposed_sum_rate,
    effective_gains,
    energy_efficiency,
    rate_downlink,
    rate_uplink,
    total_power,
)

N = NoiseParams()
S2 = N.sigma_u_sq


def _cc(h1, h2=None, h3=None, hbb=0j):
    h1 = np.asarray(h1, complex)
    z = np.zeros_like(h1)
    return CompositeChannels(h1, z if h2 is None else np.asarray(h2, complex),
                             z if h3 is None else np.asarray(h3, complex), hbb)


def test_from_split_exact_complement(rng):
    bt = rng.uniform(0, 1, 16)
    prof = StarRisProfile.from_split(bt, rng.uniform(-9, 9, 16), rng.uniform(-9, 9, 16))
    assert np.all(prof.beta_t + prof.beta_r == 1.0)
    assert np.all((prof.phi_t >= 0) & (prof.phi_t < 2 * math.pi))


def test_gain_zero_channel():
    prof = StarRisProfile.from_split(np.full(3, 0.5), np.zeros(3), np.zeros(3))
    assert effective_gains(prof, _cc(np.zeros(3))).gamma1 == 0.0


def test_gain_single_element_half_split():
    prof = StarRisProfile.from_split([0.5], [0.0], [0.0])
    assert effective_gains(prof, _cc([1.0])).gamma1 == pytest.approx(0.5, rel=1e-15)


def test_gain_matches_direct_cascade():
    p = SimulationParams(num_elements=8)
    cs = draw_channel_set(p.geometry(), p.channel_params(), 5)
    cc = composite_channels(cs)
    rng = np.random.default_rng(0)
    prof = StarRisProfile.from_split(rng.uniform(0, 1, 8), rng.uniform(0, 6, 8), rng.uniform(0, 6, 8))
    theta_r = np.sqrt(prof.beta_r) * np.exp(1j * prof.phi_r)
    direct = abs(cs.h_ib.conj() @ np.diag(theta_r) @ cs.h_ui) ** 2
    assert effective_gains(prof, cc).gamma1 == pytest.approx(direct, rel=1e-12)


def test_gain_length_mismatch():
    prof = StarRisProfile.from_split(np.full(2, 0.5), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        effective_gains(prof, _cc(np.ones(3)))


def test_rate_uplink_examples():
    g = EffectiveGains(1.0, 1.0, 0.0, 0.0)
    assert rate_uplink(PowerAllocation(0.0, 1.0), g, N) == 0.0
    assert rate_uplink(PowerAllocation(S2, 0.0), g, N) == pytest.approx(1.0, rel=1e-14)
    g = EffectiveGains(3 * S2, 0.0, 0.0, S2)
    assert rate_uplink(PowerAllocation(1.0, 1.0), g, N) == pytest.approx(1.3219, abs=1e-4)
    assert rate_uplink(PowerAllocation(1.0, 1.0), g, N) == pytest.approx(math.log2(2.5), rel=1e-14)


def test_rate_downlink_examples():
    g = EffectiveGains(0.0, 1.0, 1.0, 0.0)
    assert rate_downlink(PowerAllocation(1.0, 0.0), g, N) == 0.0
    g = EffectiveGains(0.0, S2, 0.0, 0.0)
    assert rate_downlink(PowerAllocation(0.0, 1.0), g, N) == pytest.approx(1.0, rel=1e-14)
    g = EffectiveGains(0.0, 7 * S2, S2, 0.0)
    assert rate_downlink(PowerAllocation(1.0, 1.0), g, N) == pytest.approx(2.1699, abs=1e-4)


def test_total_power_examples():
    pm = PowerModelParams()
    assert total_power(PowerAllocation(0.0, 0.0), 0, pm) == pytest.approx(pm.p_c + pm.p_c0, rel=1e-15)
    # 1 + 1.1/0.8 + 50 * 10^0.6 mW + 0.1 * 1 + 0.05
    assert total_power(PowerAllocation(0.1, 1.0), 50, pm) == pytest.approx(2.72405, abs=1e-5)
    a = total_power(PowerAllocation(0.1, 1.0), 16, pm)
    b = total_power(PowerAllocation(0.1, 1.0), 32, pm)
    assert b - a == pytest.approx(16 * pm.p_s, rel=1e-12)


def test_power_model_validation():
    with pytest.raises(ValueError):
        PowerModelParams(rho=0.0)
    with pytest.raises(ValueError):
        RateConstraints(r_u_th=-1)
    with pytest.raises(ValueError):
        NoiseParams(0.0, 1.0)


def test_energy_efficiency_recomposition(rng):
    cc, setup, prof, _ = instance(2)
    p = PowerAllocation(0.03, 0.4)
    g = effective_gains(prof, cc)
    ee = energy_efficiency(p, prof, cc, N, PowerModelParams())
    expect = (rate_uplink(p, g, N) + rate_downlink(p, g, N)) / total_power(p, 8, PowerModelParams())
    assert ee == pytest.approx(expect, rel=1e-12)
    assert setup.ee(p, g) == pytest.approx(expect, rel=1e-12)
    zero = energy_efficiency(PowerAllocation(0.0, 0.0), prof, cc, N, PowerModelParams())
    assert zero == 0.0


def random_system_point(rng):
    """Channel draw, random profile and random in-cap powers (default system)."""
    m = int(rng.integers(1, 17))
    par = SimulationParams(num_elements=m)
    cc = composite_channels(draw_channel_set(par.geometry(), par.channel_params(), int(rng.integers(1 << 30))))
    prof = StarRisProfile.from_split(rng.uniform(0, 1, m), rng.uniform(0, 6.3, m), rng.uniform(0, 6.3, m))
    p = PowerAllocation(rng.uniform(0, 0.1), rng.uniform(0, 1.0))
    return cc, prof, p, par.setup()


def test_decomposition_identity(rng):
    worst = 0.0
    for _ in range(1000):
        cc, prof, p, _ = random_system_point(rng)
        g = effective_gains(prof, cc)
        f1, f2, f3, f4 = decomposed_sum_rate(p, g, N)
        r = rate_uplink(p, g, N) + rate_downlink(p, g, N)
        worst = max(worst, abs(f1 + f2 - f3 - f4 - r) / r)
    assert worst < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(-16, -6), st.floats(-16, -6),
       st.floats(-16, -6), st.floats(-16, -6))
def test_decomposition_identity_property(pu, pd, a, b, c, d):
    p = PowerAllocation(pu, pd)
    g = EffectiveGains(10 ** a, 10 ** b, 10 ** c, 10 ** d)
    f1, f2, f3, f4 = decomposed_sum_rate(p, g, N)
    r = rate_uplink(p, g, N) + rate_downlink(p, g, N)
    assert f1 + f2 - f3 - f4 == pytest.approx(r, rel=1e-10, abs=1e-12)


def test_decomposition_zero_power():
    g = EffectiveGains(1e-9, 1e-9, 1e-9, 1e-9)
    f1, f2, f3, f4 = decomposed_sum_rate(PowerAllocation(0.0, 0.0), g, N)
    assert f1 - f3 == 0.0 and f2 - f4 == 0.0


def test_decomposition_unit_uplink():
    g = EffectiveGains(S2, 1e-9, 1e-9, 0.0)
    f1, _, f3, _ = decomposed_sum_rate(PowerAllocation(1.0, 0.3), g, N)
    assert f1 - f3 == pytest.approx(1.0, rel=1e-12)


def test_check_solution_zero_power_violation():
    cc, setup, prof, _ = instance(0)
    rep = check_solution(PowerAllocation(0.0, 0.0), prof, cc, setup)
    assert not rep.feasible
    viol = dict(rep.violations)
    assert viol["rate_ul"] == pytest.approx(-1.0)
    assert viol["rate_dl"] == pytest.approx(-3.0)


def test_check_solution_no_thresholds():
    cc, _, prof, _ = instance(0)
    setup = SimulationParams(num_elements=8, r_u_th=0.0, r_d_th=0.0).setup()
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = PowerAllocation(rng.uniform(0, 0.1), rng.uniform(0, 1.0))
        assert check_solution(p, prof, cc, setup).feasible


def test_check_solution_power_cap():
    cc, setup, prof, _ = instance(0)
    rep = check_solution(PowerAllocation(0.2, 0.5), prof, cc, setup)
    assert "p_u_max" in dict(rep.violations)


def test_converged_output_is_feasible():
    p = SimulationParams(num_elements=8)
    cs = draw_channel_set(p.geometry(), p.channel_params(), 0)
    res = run_scheme("SR-FD-EEM", cs, p, 0)
    assert res.feasible and res.report.violations == []
    assert res.ee == pytest.approx(res.report.ee)


def test_half_duplex_halves_rate_without_interference():
    cc, _, prof, _ = instance(4)
    cc = CompositeChannels(cc.h1, cc.h2, np.zeros_like(cc.h3), 0j)
    p = PowerAllocation(0.05, 0.7)
    fd = SimulationParams(num_elements=8).setup(False)
    hd = SimulationParams(num_elements=8).setup(True)
    assert fd.sum_rate(p, fd.gains(prof, cc)) == pytest.approx(2 * hd.sum_rate(p, hd.gains(prof, cc)), rel=1e-12)


def test_half_duplex_targets_and_power():
    hd = SystemSetup(half_duplex=True)
    tu, td = hd.sinr_targets()
    assert tu == pytest.approx(3.0) and td == pytest.approx(63.0)
    const, au, ad = hd.power_coefficients()
    assert au == ad == pytest.approx(0.5 / 0.8)
    assert const == pytest.approx(1.0 + 50 * 10 ** 0.6 * 1e-3)

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from srlaser import analytics as an, cumulant as cu
from srlaser.params import PhysParams

FIG3 = PhysParams.from_hz(g_hz=200.0, kappa_hz=1e5, N=100)
FIG5 = PhysParams.from_hz(g_hz=3e3, kappa_hz=1e6, gammaR_hz=2e5, N=2e4)


def with_n2c(p, y):
    """Same g, kappa, N with Gamma chosen so that N^2 C' = y."""
    return p.replace(Gamma=p.N * p.collective_rate / y)


params_st = st.builds(
    lambda g, k, N, G, gam: PhysParams.from_hz(g_hz=g, kappa_hz=k, N=N, Gamma_hz=G, gamma_hz=gam),
    st.floats(10.0, 1e4), st.floats(1e4, 1e7), st.floats(2.0, 1e6), st.floats(1.0, 1e7), st.floats(0.0, 1e5),
)


# mean-field steady state ----------------------------------------------------------


def test_no_spontaneous_emission_limit():
    ss = an.mf_steady_state(FIG5)
    assert ss.Sz == pytest.approx(FIG5.kappa * FIG5.Gamma_R / (4 * FIG5.g**2), rel=1e-12)


def test_negative_dipole_reports_trivial_branch():
    p = FIG3.replace(Gamma=FIG3.N * FIG3.collective_rate * 4).replace(gamma=1e3)
    ss = an.mf_steady_state(p)
    assert ss.Splus_sq < 0 and not ss.superradiant
    assert ss.Sz_physical == ss.Sz_trivial
    assert ss.Splus_sq_physical == 0.0
    assert ss.Sz_trivial == pytest.approx(0.5 * p.N * (p.Gamma_R - p.gamma) / (p.Gamma_R + p.gamma))


@given(params_st)
def test_branch_flags_are_consistent(p):
    ss = an.mf_steady_state(p)
    assert math.isfinite(ss.Splus_sq)
    assert ss.superradiant == (ss.Splus_sq > 0)


# threshold -------------------------------------------------------------------------


def test_boundary_collapses_at_collective_threshold():
    crit = [an.threshold_boundary(with_n2c(FIG3, 0.5 * (1 + eps))) for eps in (1e-2, 1e-4, 1e-6)]
    assert crit[0] > crit[1] > crit[2] > 0
    assert crit[2] < 1e-5 * FIG3.collective_rate


def test_below_collective_threshold_raises():
    with pytest.raises(an.BelowThresholdError):
        an.threshold_boundary(with_n2c(FIG3, 0.5))
    with pytest.raises(an.BelowThresholdError):
        an.linewidth_mf(with_n2c(FIG3, 0.4))


def test_large_N_boundary_approaches_refresh_rate():
    ratios = []
    for N in (1e5, 1e6, 1e8):
        p = FIG5.replace(N=N)
        ratios.append(an.threshold_boundary(p) / p.Gamma_R)
    assert abs(ratios[-1] - 1.0) < 1e-3
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)


@settings(max_examples=60)
@given(params_st)
def test_boundary_brackets_the_sign_change(p):
    assume(p.N2C_prime > 0.5 * (1 + 1e-3))
    crit = an.threshold_boundary(p)
    assert an.mf_steady_state(p.replace(gamma=0.99 * crit)).Splus_sq > 0
    assert an.mf_steady_state(p.replace(gamma=1.01 * crit)).Splus_sq < 0


def test_fig3_grid_signs_agree_with_boundary():
    for G in np.logspace(math.log10(20), math.log10(2e4), 20):
        for gam in np.logspace(-2, math.log10(200), 20):
            p = PhysParams.from_hz(g_hz=200.0, kappa_hz=1e5, N=100, Gamma_hz=G, gamma_hz=gam)
            try:
                crit = an.threshold_boundary(p)
            except an.BelowThresholdError:
                assert not an.mf_steady_state(p).superradiant
                continue
            if abs(p.gamma / crit - 1.0) < 1e-6:
                continue
            assert an.mf_steady_state(p).superradiant == (p.gamma < crit)


@settings(max_examples=10)
@given(st.floats(0.5 + 1e-6, 1e6))
def test_continuous_bound_is_stricter_than_pulsed(y):
    assert an.pulsed_limit_margin(y) > 0


def test_pulsed_criterion_recovered_without_loading():
    p = FIG3.replace(gamma=2 * math.pi * 10.0)
    values = [an.inversion_times_C(p.replace(Gamma=G)) for G in (1e2, 1e0, 1e-2, 0.0)]
    assert values[-1] == 0.25
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-2] - 0.25 < 1e-5


@given(params_st)
def test_lasing_inversion_exceeds_the_bound(p):
    assume(p.gamma > 0 and p.N2C_prime > 0.51)
    assume(p.gamma < 0.999 * an.threshold_boundary(p))
    assert an.inversion_times_C(p) - 0.25 > an.pulsed_limit_margin(p.N2C_prime) * (1 - 1e-9)


@given(st.floats(10.0, 1e4), st.floats(1e4, 1e7), st.floats(2.0, 1e6), st.floats(0.5, 1e6),
       st.floats(1e-6, 1.0, exclude_max=True))
def test_collective_conditions_imply_NC_above_half(g, kappa, N, y, gamma_frac):
    p = with_n2c(PhysParams.from_hz(g_hz=g, kappa_hz=kappa, N=N), y * (1 + 1e-9))
    p = p.replace(gamma=gamma_frac * p.Gamma_R)
    assert p.N2C_prime > 0.5 and p.gamma < p.Gamma_R
    assert p.N * p.C > 0.5


# power -----------------------------------------------------------------------------


@given(params_st)
def test_power_form_equals_dipole_form(p):
    a = an.power_metrics(p).Splus_sq
    b = an.mf_steady_state(p).Splus_sq
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9 * max(1.0, abs(a), p.N))


def test_photon_number_large_N():
    p = FIG5.replace(N=1e8)
    m = an.power_metrics(p)
    assert m.Nnu_over_N == pytest.approx(p.Gamma_R / (2 * p.kappa), rel=1e-3)
    assert m.R == pytest.approx(0.5 * p.Gamma, rel=1e-3)


# linewidths ------------------------------------------------------------------------


def test_mf_linewidth_limit():
    p = with_n2c(FIG5, 1e9)
    lw = an.linewidth_mf(p)
    assert lw.D_largeN == pytest.approx(4 * p.purcell, rel=1e-8)
    assert lw.domega_largeN == pytest.approx(2 * p.purcell, rel=1e-8)


def test_mf_linewidth_at_two():
    lw = an.linewidth_mf(with_n2c(FIG5, 2.0))
    assert lw.D_largeN == pytest.approx(4 * FIG5.purcell * 4.0 / 3.0, rel=1e-12)


def test_mf_linewidth_override_and_flag():
    p = with_n2c(FIG5, 5.0)
    assert an.linewidth_mf(p, Sx_sq=1e6).D == pytest.approx(p.Gamma / 2e6)
    assert an.linewidth_mf(with_n2c(FIG5, 0.5 * (1 + 1e-8))).near_threshold


def test_cumulant_linewidth_deep_in_regime():
    p = with_n2c(FIG5.replace(N=1e6), 100.0)
    assert an.linewidth_cumulant(p).domega == pytest.approx(4 * p.purcell, rel=1e-3)


def test_cumulant_linewidth_few_photons():
    p = with_n2c(FIG5.replace(N=1e6), 1e-3)
    assert an.linewidth_cumulant(p).domega == pytest.approx(p.Gamma_R, rel=1e-3)


def test_heuristic_limits():
    assert an.linewidth_heuristic(2.0, 1.0, 5.0) == 0.0
    with pytest.raises(ValueError):
        an.linewidth_heuristic(0.0, 0.0, 1.0)


def test_heuristic_without_correlations_matches_mean_field():
    p = with_n2c(FIG5, 5.0)
    L2 = an.mf_steady_state(p).Splus_sq
    assert an.linewidth_heuristic(math.sqrt(L2), 0.0, p.Gamma) == pytest.approx(an.linewidth_mf(p).D, rel=1e-12)


def test_linewidth_report_fig5():
    r = an.linewidth_report(FIG5)
    assert r.domega_min == pytest.approx(4 * FIG5.purcell)
    for v in (r.D_mf, r.domega_mf, r.domega_cumulant, r.domega_largeN, r.D_heuristic):
        assert v > 0 and math.isfinite(v)
    assert not r.flagged


def test_width_from_integrated_state_matches_closed_form():
    traj = cu.run_cumulant(cu.CumulantState.product_state(0.5, 0.0), FIG5, 40.0 / FIG5.Gamma_R, n_samples=40)
    s = traj.final
    integrated = an.inverse_tau_c(FIG5.N, FIG5.Gamma_R, s.sz.real, s.spsm.real)
    assert integrated == pytest.approx(an.linewidth_cumulant(FIG5).domega, rel=1e-4)

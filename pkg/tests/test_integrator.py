import math

import numpy as np
import pytest

from srlaser.integrator import (
    IntegrationPolicy, OdeSystem, SteadyStateTimeout, StiffnessError, default_policy, find_steady_state, integrate,
    residual_inf,
)


def decay(t, y):
    return -y


def test_rk4_exponential():
    traj = integrate(decay, [1.0], 0.0, 1.0, IntegrationPolicy(method="rk4", dt=1e-3))
    assert abs(traj.final[0] - math.exp(-1.0)) < 1e-9
    assert traj.t[-1] == 1.0
    assert np.all(np.diff(traj.t) > 0)


def test_rk4_is_fourth_order():
    errs = []
    for dt in (0.1, 0.05, 0.025, 0.0125):
        y = integrate(decay, [1.0], 0.0, 1.0, IntegrationPolicy(method="rk4", dt=dt)).final[0]
        errs.append(abs(y - math.exp(-1.0)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(14.0 < r < 18.0 for r in ratios), ratios


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_unitary_rotation_keeps_modulus(method):
    omega = 3.0
    pol = IntegrationPolicy(method=method, dt=1e-3, rtol=1e-11, atol=1e-13)
    traj = integrate(lambda t, y: 1j * omega * y, [1.0], 0.0, 100.0 / omega, pol.with_(record_stride=50))
    assert np.max(np.abs(np.abs(traj.y[:, 0]) - 1.0)) < 1e-9


@pytest.mark.slow
def test_harmonic_oscillator_energy_drift():
    # unit frequency oscillator over 1e4 periods; the exact orbit has energy 1/2
    f = lambda t, y: np.array([y[1], -y[0]])
    traj = integrate(f, [1.0, 0.0], 0.0, 2 * math.pi * 1e4,
                     IntegrationPolicy(method="rk45", rtol=1e-10, atol=1e-13, record_stride=10_000))
    x, v = traj.final.real
    assert abs(0.5 * (x * x + v * v) - 0.5) < 1e-6
    assert abs(x - 1.0) < 1e-5


def test_adaptive_matches_fixed_step():
    f = lambda t, y: np.array([-2.0 * y[0] + np.sin(t), -0.5 * y[1] * y[0]])
    a = integrate(f, [1.0, 1.0], 0.0, 5.0, IntegrationPolicy(method="rk45", rtol=1e-10, atol=1e-12)).final
    b = integrate(f, [1.0, 1.0], 0.0, 5.0, IntegrationPolicy(method="rk4", dt=1e-3)).final
    assert np.max(np.abs(a - b)) < 1e-8


def test_uniform_sampling_lands_on_grid():
    traj = integrate(decay, [1.0], 0.0, 2.0, IntegrationPolicy(sample_dt=0.1))
    assert traj.t.size == 21
    np.testing.assert_allclose(traj.t, np.linspace(0.0, 2.0, 21), rtol=0, atol=1e-12)
    np.testing.assert_allclose(traj.y[:, 0].real, np.exp(-traj.t), rtol=1e-7)


def test_step_underflow_raises_stiffness_error_with_time():
    # blows up at t = 1
    f = lambda t, y: y * y
    with pytest.raises(StiffnessError) as info:
        integrate(f, [1.0], 0.0, 2.0, IntegrationPolicy(rtol=1e-8, dt_min=1e-6))
    assert 0.9 < info.value.t <= 1.0


def test_dimension_and_interval_checks():
    sys2 = OdeSystem(lambda t, y: -y, 2)
    with pytest.raises(ValueError):
        integrate(sys2, [1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate(sys2, [1.0, 1.0], 1.0, 1.0)


@pytest.mark.parametrize("kw", [dict(method="euler"), dict(method="rk4"), dict(rtol=0.0),
                                dict(dt_min=2.0, dt_max=1.0), dict(sample_dt=-1.0)])
def test_policy_validation(kw):
    with pytest.raises(ValueError):
        IntegrationPolicy(**kw)


def test_default_policy_step_bound():
    pol = default_policy(10.0, 400.0, 2.0)
    assert pol.dt_max == pytest.approx(0.05 / 400.0)
    assert pol.method == "rk45" and pol.rtol == 1e-8 and pol.atol == 1e-12


def test_find_steady_state_relaxation():
    f = lambda t, y: -(y - 3.0)
    y = find_steady_state(f, [0.0], IntegrationPolicy(rtol=1e-12, atol=1e-14), eps=1e-10, window=1.0, t_max=100.0)
    assert abs(y[0] - 3.0) <= 1e-10
    assert residual_inf(f, 0.0, y) <= 1e-10


def test_find_steady_state_timeout_reports_residual():
    f = lambda t, y: np.array([1.0 + 0 * y[0]])
    with pytest.raises(SteadyStateTimeout) as info:
        find_steady_state(f, [0.0], None, eps=1e-6, window=1.0, t_max=3.0)
    assert info.value.residual == pytest.approx(1.0)

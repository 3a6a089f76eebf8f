"""The compiled kernels and their pure-Python twins must agree."""

import numpy as np
import pytest

from srlaser import _backend, _kernels_py

compiled = pytest.importorskip("srlaser._kernels")


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("SRLASER_BACKEND", "python")
    assert _backend.load() is _kernels_py
    monkeypatch.setenv("SRLASER_BACKEND", "compiled")
    assert _backend.load() is compiled
    monkeypatch.delenv("SRLASER_BACKEND")
    assert _backend.load().BACKEND == "compiled"


@pytest.mark.parametrize("method", [0, 1])
def test_mf_adiabatic_agrees(method):
    args = (400.0, 0.5, 0.1, 2.0, 0.3, 2000.0, 1000.0, 0.0, 0.02, 200, method, 1e-5,
            1e-9, 1e-12, 0.0, 1e-4, 10_000_000)
    T1, Y1, n1, r1, s1 = compiled.mf_adiabatic(*args)
    T2, Y2, n2, r2, s2 = _kernels_py.mf_adiabatic(*args)
    assert (n1, r1, s1) == (n2, r2, s2)
    np.testing.assert_allclose(T1, T2, rtol=0, atol=1e-15)
    np.testing.assert_allclose(Y1, Y2, rtol=1e-10, atol=1e-9)


def test_mc_events_agree():
    rng = np.random.Generator(np.random.Philox(7))
    draws = rng.integers(0, 2, size=(3000, 4), dtype=np.int8)
    args = (3.0, 0.0, 20.0, 0.05, 100.0, 1e-3, 4, 3000, draws, True, True, 3)
    S1, F1 = compiled.mc_events(*args)
    S2, F2 = _kernels_py.mc_events(*args)
    np.testing.assert_array_equal(np.asarray(F1), np.asarray(F2))
    np.testing.assert_allclose(np.asarray(S1), np.asarray(S2), rtol=1e-11, atol=1e-11)


def test_spectrum_direct_agrees():
    t = np.linspace(0.0, 1.0, 501)
    b = np.exp(-3.0 * t) * np.exp(2j * t)
    omega = np.linspace(-50.0, 50.0, 301)
    re1, im1 = compiled.spectrum_direct(0.0, t[1] - t[0], b.real.copy(), b.imag.copy(), omega)
    re2, im2 = _kernels_py.spectrum_direct(0.0, t[1] - t[0], b.real.copy(), b.imag.copy(), omega)
    np.testing.assert_allclose(np.asarray(re1), re2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(np.asarray(im1), im2, rtol=1e-12, atol=1e-14)


def test_python_backend_runs_the_library(monkeypatch):
    """A full pulsed run through the pure-Python path matches the default path."""
    import srlaser.meanfield as mf
    from srlaser.params import PhysParams

    p = PhysParams.from_hz(g_hz=4e3, kappa_hz=2e5, N=100.0)
    spec = mf.pulsed_scenario(p, 2e-5, n_samples=100)
    ref = mf.run_scenario(spec, p)
    monkeypatch.setattr(mf, "kernels", _kernels_py)
    alt = mf.run_scenario(spec, p)
    np.testing.assert_allclose(alt.Sz, ref.Sz, rtol=1e-10, atol=1e-9)

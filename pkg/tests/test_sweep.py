import math

import numpy as np
import pytest

from srlaser import sweep
from srlaser.figures import phase_outputs
from srlaser.io import read_csv


@pytest.mark.parametrize("text", [
    "gamma_hz:log:0.01:200",
    "bogus:log:1:2:3",
    "gamma_hz:cubic:1:2:3",
    "gamma_hz:log:0:2:3",
    "gamma_hz:linear:2:1:3",
    "gamma_hz:linear:1:2:1",
    "gamma_hz:linear:a:2:3",
])
def test_bad_axes(text):
    with pytest.raises(sweep.SweepError):
        sweep.Axis.parse(text)


def test_axis_values():
    np.testing.assert_allclose(sweep.Axis.parse("N:log:10:1000:3").values(), [10, 100, 1000])
    np.testing.assert_allclose(sweep.Axis.parse("N:linear:0:1:5").values(), [0, 0.25, 0.5, 0.75, 1])


def test_spec_shape_rules():
    a = sweep.Axis.parse("gamma_hz:log:0.01:200:3")
    with pytest.raises(sweep.SweepError):
        sweep.SweepSpec(axes=())
    with pytest.raises(sweep.SweepError):
        sweep.SweepSpec(axes=(a, a))
    with pytest.raises(sweep.SweepError):
        sweep.SweepSpec(axes=(a,), task="everything")
    with pytest.raises(sweep.SweepError):
        sweep.check_phase_axes(sweep.SweepSpec(axes=(a,)))


def test_points_are_row_major():
    spec = sweep.SweepSpec(axes=(sweep.Axis.parse("Gamma_hz:linear:1:2:2"), sweep.Axis.parse("N:linear:10:30:3")),
                           fixed={"g_hz": 1.0, "kappa_hz": 10.0, "gammaR_hz": 5.0})
    pts = list(spec.points())
    assert [idx for idx, _ in pts] == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert all("gammaR_hz" not in v for _, v in pts)
    assert pts[4][1]["N"] == 20.0 and pts[4][1]["Gamma_hz"] == 2.0


def test_failing_points_are_recorded_and_the_sweep_continues():
    spec = sweep.SweepSpec(axes=(sweep.Axis.parse("N:linear:-10:100:3"),),
                           fixed={"g_hz": 200.0, "kappa_hz": 1e5, "Gamma_hz": 100.0}, task="mf-steady")
    res = sweep.run_sweep(spec)
    assert math.isnan(res[0].domega) and res[0].reason
    assert not res[2].reason and math.isfinite(res[2].domega)


def test_mf_and_cumulant_tasks_agree_deep_in_regime():
    fixed = {"g_hz": 200.0, "kappa_hz": 1e5, "N": 1e4}
    for task in ("mf-steady", "cumulant-steady"):
        spec = sweep.SweepSpec(axes=(sweep.Axis.parse("Gamma_hz:log:1e3:1e4:2"),), fixed=fixed, task=task)
        for r in sweep.run_sweep(spec):
            assert r.superradiant and r.domega > 0


def test_all_below_threshold_gives_empty_boundary(tmp_path):
    spec = sweep.SweepSpec(
        axes=(sweep.Axis.parse("Gamma_hz:log:1e6:1e7:2"), sweep.Axis.parse("gamma_hz:log:1:10:2")),
        fixed={"g_hz": 200.0, "kappa_hz": 1e5, "N": 100.0}, task="mf-steady")
    assert sweep.phase_boundary(spec) == []
    with pytest.warns(UserWarning, match="boundary"):
        files, _ = phase_outputs(tmp_path, spec)
    _, cols = read_csv(tmp_path / "boundary.csv")
    assert all(len(v) == 0 for v in cols.values())


def test_phase_boundary_matches_sign_changes():
    spec = sweep.fig3_spec(count=5)
    for G, crit in sweep.phase_boundary(spec, count=20):
        assert G > 0 and crit > 0


def test_boundary_collapse_metric():
    sr = np.array([[True, True, True, False, False, False]])
    width = np.array([[1.0, 1.0, 2.0, 50.0, 100.0, 100.0]])
    assert sweep.boundary_collapse(width, sr) == [(0, 0, 2, 100.0)]
    # too close to the edge for the cells one step further in
    assert sweep.boundary_collapse(width[:, 2:5], sr[:, 2:5]) == []


def test_parallel_sweep_matches_serial():
    spec = sweep.SweepSpec(axes=(sweep.Axis.parse("Gamma_hz:log:100:1e4:4"),),
                           fixed={"g_hz": 200.0, "kappa_hz": 1e5, "N": 100.0}, duration_factor=20)
    a = sweep.run_sweep(spec, threads=1)
    b = sweep.run_sweep(spec, threads=2)
    assert [r.domega for r in a] == [r.domega for r in b]

"""Parameter sweeps over one or two axes, including the (gamma, Gamma) phase diagram."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytics, meanfield, spectrum
from .params import PARAM_KEYS, PhysParams, TWO_PI, params_from_mapping

TASKS = ("mf-steady", "cumulant-steady", "mc-linewidth", "spectrum-linewidth")
AXIS_KEYS = PARAM_KEYS


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    scale: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_KEYS:
            raise SweepError(f"unknown axis {self.name!r}; expected one of {AXIS_KEYS}")
        if self.scale not in ("linear", "log"):
            raise SweepError("axis scale must be 'linear' or 'log'")
        if self.count < 2:
            raise SweepError("an axis needs at least 2 points")
        if self.scale == "log" and not (self.lo > 0 and self.hi > 0):
            raise SweepError("log axes need positive bounds")
        if not self.hi > self.lo:
            raise SweepError("axis needs max > min")

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name:scale:min:max:count``, e.g. ``gamma_hz:log:0.01:200:20``."""
        parts = text.split(":")
        if len(parts) != 5:
            raise SweepError(f"axis {text!r} is not name:scale:min:max:count")
        name, scale, lo, hi, count = parts
        try:
            return cls(name, scale, float(lo), float(hi), int(count))
        except ValueError as exc:
            raise SweepError(f"axis {text!r}: {exc}") from None

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[Axis, ...]
    fixed: dict = field(default_factory=dict)
    task: str = "spectrum-linewidth"
    duration_factor: float = 200.0
    mc_events: int = 20_000
    mc_realizations: int = 4
    seed: int = 0

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise SweepError("a sweep has one or two axes")
        if len({a.name for a in self.axes}) != len(self.axes):
            raise SweepError("axes must differ")
        if self.task not in TASKS:
            raise SweepError(f"unknown task {self.task!r}; expected one of {TASKS}")

    def points(self):
        """(index tuple, parameter mapping) for every grid point, row-major."""
        grids = [a.values() for a in self.axes]
        for idx in np.ndindex(*[g.size for g in grids]):
            values = dict(self.fixed)
            for a, g, i in zip(self.axes, grids, idx):
                values[a.name] = float(g[i])
            if "gammaR_hz" in values and "Gamma_hz" in values:
                values.pop("gammaR_hz" if any(a.name == "Gamma_hz" for a in self.axes) else "Gamma_hz")
            yield idx, values


@dataclass(frozen=True)
class PointResult:
    index: tuple
    values: dict
    domega: float
    superradiant: bool
    splus_sq: float
    reason: str = ""


def run_duration(p: PhysParams, factor: float) -> float:
    """Mean-field run length: ``factor`` transit times, at least 10 ``factor`` collective times."""
    return factor * max(1.0 / p.Gamma_R, 10.0 / p.collective_rate)


def spectrum_linewidth_point(p: PhysParams, factor: float = 200.0, seed_fraction: float = 1e-3,
                             max_samples: int = 1 << 20) -> float:
    """HWHM of the emitted spectrum of a long continuous run started from full inversion."""
    T = run_duration(p, factor)
    rate = max(2.0 * p.collective_rate, p.gamma, p.Gamma_R)
    n = int(min(max(1 << 14, 2.0 * T * rate), max_samples))
    sc = meanfield.ScenarioSpec("continuous_spont", T, 0.5 * p.N, seed_fraction * p.N, n_samples=n)
    traj = meanfield.run_scenario(sc, p)
    width, _ = spectrum.measure_linewidth(traj.field_record(), method="fft")
    return width


def _evaluate(args) -> PointResult:
    spec, idx, values = args
    try:
        p = params_from_mapping(values)
        ss = analytics.mf_steady_state(p)
        width = math.nan
        if spec.task == "spectrum-linewidth":
            width = spectrum_linewidth_point(p, spec.duration_factor)
        elif spec.task == "cumulant-steady":
            width = analytics.linewidth_cumulant(p).domega
        elif spec.task == "mc-linewidth":
            from .montecarlo import McConfig, run_ensemble

            seed = (spec.seed + int(np.ravel_multi_index(idx, [a.count for a in spec.axes]))) & ((1 << 64) - 1)
            cfg = McConfig(p, seed=seed, n_events=spec.mc_events, realizations=spec.mc_realizations)
            width = run_ensemble(cfg, threads=1).mean()
        elif spec.task == "mf-steady" and ss.superradiant:
            width = analytics.linewidth_mf(p).domega
        return PointResult(idx, values, width, ss.superradiant, ss.Splus_sq)
    except Exception as exc:  # recorded in-grid, the sweep continues
        return PointResult(idx, values, math.nan, False, math.nan, f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[PointResult]:
    tasks = [(spec, idx, values) for idx, values in spec.points()]
    if threads <= 1 or len(tasks) == 1:
        results = [_evaluate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    return sorted(results, key=lambda r: r.index)


def phase_boundary(spec: SweepSpec, count: int = 200) -> list[tuple[float, float]]:
    """Analytic (Gamma_hz, gamma_crit_hz) pairs across the sweep's Gamma range.

    Points with N^2 C' <= 1/2 have no boundary and are left out.
    """
    axis = _axis(spec, "Gamma_hz")
    if axis.scale == "log":
        grid = np.logspace(math.log10(axis.lo), math.log10(axis.hi), count)
    else:
        grid = np.linspace(axis.lo, axis.hi, count)
    out = []
    for G in grid:
        values = dict(spec.fixed)
        values.pop("gammaR_hz", None)
        values["Gamma_hz"] = float(G)
        values.setdefault("gamma_hz", 0.0)
        p = params_from_mapping(values)
        try:
            out.append((float(G), analytics.threshold_boundary(p) / TWO_PI))
        except analytics.BelowThresholdError:
            continue
    return out


def _axis(spec: SweepSpec, name: str) -> Axis:
    for a in spec.axes:
        if a.name == name:
            return a
    raise SweepError(f"sweep has no {name} axis")


def check_phase_axes(spec: SweepSpec) -> None:
    names = sorted(a.name for a in spec.axes)
    if names != ["Gamma_hz", "gamma_hz"]:
        raise SweepError("the phase diagram needs exactly the two axes gamma_hz and Gamma_hz")


def fig3_spec(count: int = 20, duration_factor: float = 200.0) -> SweepSpec:
    """Default (gamma, Gamma) grid around the lasing region at g/2pi = 200 Hz, kappa/2pi = 100 kHz, N = 100."""
    return SweepSpec(
        axes=(Axis("Gamma_hz", "log", 20.0, 2e4, count), Axis("gamma_hz", "log", 0.01, 200.0, count)),
        fixed={"g_hz": 200.0, "kappa_hz": 1e5, "N": 100.0},
        task="spectrum-linewidth",
        duration_factor=duration_factor,
    )


def grid_arrays(spec: SweepSpec, results: list[PointResult]) -> tuple[np.ndarray, np.ndarray]:
    """(linewidth, superradiant) arrays shaped like the sweep grid."""
    shape = tuple(a.count for a in spec.axes)
    width = np.full(shape, np.nan)
    sr = np.zeros(shape, dtype=bool)
    for r in results:
        width[r.index] = r.domega
        sr[r.index] = r.superradiant
    return width, sr


def boundary_collapse(width: np.ndarray, superradiant: np.ndarray) -> list[tuple[int, int, int, float]]:
    """Linewidth drop across every grid line that crosses the lasing boundary.

    For each adjacent (lasing, non-lasing) pair along a row or column, the
    widths one cell further in on each side are compared. Returns
    ``(axis, line, position, ratio)`` with ratio = width(non-lasing) / width(lasing).
    """
    out = []
    for axis, (W, S) in enumerate(((width, superradiant), (width.T, superradiant.T))):
        for i, (w, s) in enumerate(zip(W, S)):
            for j in range(s.size - 1):
                if s[j] == s[j + 1]:
                    continue
                ia, ib = (j - 1, j + 2) if s[j] else (j + 2, j - 1)
                if 0 <= ia < s.size and 0 <= ib < s.size and s[ia] and not s[ib]:
                    out.append((axis, i, j, float(w[ib] / w[ia])))
    return out

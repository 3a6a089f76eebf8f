"""Data bundles for the standard figures: CSV series plus a gnuplot script.

Each ``figN`` function writes its CSVs and ``figN.gp`` into ``out`` and
returns the list of written paths. Parameters default to the figure's own
values; ``overrides`` (Hz-convention keys, plus a few figure-specific ones)
replace them. Plot scripts reference only the CSVs of the same bundle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import analytics, cumulant, io, meanfield, montecarlo, spectrum, sweep
from .params import PhysParams, TWO_PI, params_from_mapping

PRESETS = ("desk", "paper")


@dataclass(frozen=True)
class Context:
    out: Path
    preset: str = "desk"
    seed: int = 0
    threads: int = 1
    overrides: Mapping | None = None

    def param_values(self, defaults: Mapping) -> dict:
        values = dict(defaults)
        for key, value in (self.overrides or {}).items():
            if value is None:
                continue
            if key in ("gammaR_hz", "Gamma_hz"):
                values.pop("Gamma_hz" if key == "gammaR_hz" else "gammaR_hz", None)
            values[key] = value
        return values

    def option(self, key, default):
        value = (self.overrides or {}).get(key)
        return default if value is None else value


def params_meta(p: PhysParams) -> dict:
    return {"params_hz": p.as_hz()}


def _gp(path: Path, lines: list[str]) -> Path:
    head = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
    ]
    path.write_text("\n".join(head + lines) + "\n", encoding="utf-8")
    return path


# pulsed ----------------------------------------------------------------------------

FIG1 = {"g_hz": 4e3, "kappa_hz": 2e5, "N": 1e3, "Gamma_hz": 0.0}
FIG1_SNAPSHOTS = (2e-6, 4e-6, 6e-6, 8e-6)


def pulsed_outputs(out: Path, p: PhysParams, duration: float, seed_fraction: float = meanfield.PULSED_SEED_FRACTION,
                   n_samples: int = 4000, snapshots=FIG1_SNAPSHOTS, n_times: int = 40,
                   with_spectrum: bool = True) -> list[Path]:
    """Burst trajectory, spectra at ``snapshots`` and linewidth against elapsed time."""
    traj = meanfield.run_scenario(meanfield.pulsed_scenario(p, duration, seed_fraction, n_samples), p)
    meta = params_meta(p) | {"seed_fraction": seed_fraction}
    files = [io.write_columns(out / "trajectory.csv", "trajectory", traj.columns(), meta)]
    if not with_spectrum:
        return files
    record = traj.field_record()
    scale = p.collective_rate
    grid = np.linspace(-20.0 * scale, 20.0 * scale, 2001)
    grid = grid[np.abs(grid) <= record.nyquist]
    cols = {"omega_over_2pi_hz": grid / TWO_PI}
    for ts in snapshots:
        if ts > traj.t[-1]:
            continue
        spec = spectrum.compute_spectrum(record.window(0.0, ts), grid, method="fft")
        cols[f"I_{ts * 1e6:g}us"] = spec.intensity
    files.append(io.write_columns(out / "spectra.csv", "spectra", cols, meta))

    t_min = spectrum.MIN_SAMPLES * record.dt
    times = np.geomspace(t_min, traj.t[-1], n_times)
    widths = []
    for ts in times:
        try:
            widths.append(spectrum.measure_linewidth(record.window(0.0, ts), method="fft")[0])
        except spectrum.SpectrumError:
            widths.append(math.nan)
    widths = np.asarray(widths)
    files.append(io.write_columns(
        out / "linewidth_vs_time.csv", "linewidth_vs_time",
        {"t_s": times, "hwhm_hz": widths / TWO_PI, "inv_t_hz": widths[0] * times[0] / times / TWO_PI,
         "collective_hz": np.full(times.size, scale / TWO_PI)},
        meta,
    ))
    return files


def fig1(ctx: Context) -> list[Path]:
    p = params_from_mapping(ctx.param_values(FIG1))
    duration = ctx.option("duration", 20e-6)
    files = pulsed_outputs(ctx.out, p, duration, ctx.option("seed_fraction", meanfield.PULSED_SEED_FRACTION))
    spec_cols = io.read_csv(files[1])[1]
    series = [c for c in spec_cols if c != "omega_over_2pi_hz"]
    plots = ", ".join(f"'spectra.csv' using 1:{i + 2} with lines" for i in range(len(series)))
    files.append(_gp(ctx.out / "fig1.gp", [
        "set multiplot layout 1,3",
        "set xlabel 't (s)'",
        "plot 'trajectory.csv' using 1:(sqrt($3**2+$4**2)) with lines title '|Sm|', '' using 1:2 with lines",
        "set xlabel 'frequency (Hz)'",
        f"plot {plots}",
        "set logscale xy",
        "set xlabel 't (s)'",
        "plot 'linewidth_vs_time.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines",
        "unset multiplot",
    ]))
    return files


# relaxation ------------------------------------------------------------------------


# beam crossing a 100 um waist at 50 m/s: Gamma_R = v/w0 = 5e5 s^-1
FIG2 = {"g_hz": 3e3, "kappa_hz": 1e6, "gamma_hz": 7e3, "N": 1e5, "gammaR_hz": 5e5 / TWO_PI}


def fig2(ctx: Context) -> list[Path]:
    p = params_from_mapping(ctx.param_values(FIG2))
    duration = ctx.option("duration", 10.0 / p.Gamma_R)
    sm0 = 0.03 * p.N
    sz0 = math.sqrt((0.5 * p.N) ** 2 - sm0 * sm0)
    sc = meanfield.ScenarioSpec("continuous_spont", duration, sz0, sm0, n_samples=int(ctx.option("samples", 4000)))
    traj = meanfield.run_scenario(sc, p)
    ss = analytics.mf_steady_state(p)
    meta = params_meta(p) | {"steady_Sz": ss.Sz_physical, "steady_Splus_sq": ss.Splus_sq_physical}
    files = [io.write_columns(ctx.out / "relaxation.csv", "trajectory", traj.columns(), meta)]
    files.append(_gp(ctx.out / "fig2.gp", [
        "set xlabel 't (s)'",
        "plot 'relaxation.csv' using 1:2 with lines, '' using 1:(sqrt($3**2+$4**2)) with lines title '|Sm|'",
    ]))
    return files


# phase diagram ---------------------------------------------------------------------


def phase_outputs(out: Path, spec: sweep.SweepSpec, threads: int = 1) -> tuple[list[Path], list[sweep.PointResult]]:
    """Grid CSV (one row per point, NaN with reason on failure) and analytic boundary CSV."""
    sweep.check_phase_axes(spec)
    results = sweep.run_sweep(spec, threads)
    meta = {"fixed": spec.fixed, "task": spec.task, "duration_factor": spec.duration_factor,
            "axes": [f"{a.name}:{a.scale}:{a.lo!r}:{a.hi!r}:{a.count}" for a in spec.axes]}
    rows = [(r.values["gamma_hz"], r.values["Gamma_hz"], r.domega / TWO_PI, r.domega,
             "A" if r.superradiant else "B", r.splus_sq, r.reason) for r in results]
    files = [io.write_csv(out / "grid.csv", "phase_grid",
                          ("gamma_hz", "Gamma_hz", "dnu_hz", "domega_rad_s", "branch", "splus_sq", "reason"),
                          rows, meta)]
    boundary = sweep.phase_boundary(spec)
    if not boundary:
        warnings.warn("every grid point is below the collective threshold; boundary file is empty", stacklevel=2)
    files.append(io.write_csv(out / "boundary.csv", "phase_boundary", ("Gamma_hz", "gamma_crit_hz"), boundary, meta))
    return files, results


def fig3(ctx: Context) -> list[Path]:
    count = int(ctx.option("count", 20 if ctx.preset == "desk" else 30))
    factor = float(ctx.option("duration_factor", 200.0 if ctx.preset == "desk" else 1000.0))
    spec = sweep.fig3_spec(count, factor)
    fixed = ctx.param_values(spec.fixed)
    for key in ("gamma_hz", "Gamma_hz", "gammaR_hz"):
        fixed.pop(key, None)
    spec = sweep.SweepSpec(spec.axes, fixed, spec.task, factor)
    files, _ = phase_outputs(ctx.out, spec, ctx.threads)
    files.append(_gp(ctx.out / "fig3.gp", [
        "set logscale xyz",
        "set xlabel 'gamma/2pi (Hz)'",
        "set ylabel 'Gamma/2pi (Hz)'",
        "set view map",
        "splot 'grid.csv' using 1:2:3 with points palette pointtype 5 notitle, "
        "'boundary.csv' using 2:1:(1) with lines linecolor 'red' notitle",
    ]))
    return files


# Monte-Carlo linewidth -------------------------------------------------------------

FIG4 = {"g_hz": 300.0, "kappa_hz": 1e5, "N": 100.0}
FIG4_GRID_DESK = (0.6, 0.8, 1.0, 2.0, 5.0, 10.0, 30.0)
FIG4_GRID_PAPER = (0.55, 0.6, 0.7, 0.8, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0)


def point_seed(seed: int, k: int) -> int:
    return (seed + 0x9E3779B97F4A7C15 * (k + 1)) & montecarlo.SEED_MASK


def fig4(ctx: Context) -> list[Path]:
    values = ctx.param_values(FIG4)
    grid = ctx.option("grid", FIG4_GRID_DESK if ctx.preset == "desk" else FIG4_GRID_PAPER)
    realizations = int(ctx.option("realizations", 10 if ctx.preset == "desk" else 50))
    factor = float(ctx.option("event_factor", 300.0))
    rows = []
    for k, y in enumerate(grid):
        p = montecarlo.fig4_params(y, N=values["N"], g_hz=values["g_hz"], kappa_hz=values["kappa_hz"])
        cfg = montecarlo.McConfig(p, seed=point_seed(ctx.seed, k), n_events=montecarlo.events_for(p, factor),
                                  realizations=realizations)
        ens = montecarlo.run_ensemble(cfg, ctx.threads)
        scale = 1.0 / p.purcell
        rows.append((y, ens.mean() * scale, ens.std() * scale, realizations, cfg.n_events, cfg.seed))
    meta = {"params_hz": values, "realizations": realizations}
    files = [io.write_csv(ctx.out / "mc.csv", "fig4_mc",
                          ("N2C_prime", "domega_kappa_over_g2", "std", "realizations", "n_events", "seed"), rows, meta)]
    curve = np.geomspace(0.5 * 1.02, max(grid) * 2.0, 200)
    mf, cu = [], []
    for y in curve:
        p = montecarlo.fig4_params(y, N=values["N"], g_hz=values["g_hz"], kappa_hz=values["kappa_hz"])
        mf.append(analytics.linewidth_mf(p).D_largeN / p.purcell)
        cu.append(analytics.linewidth_cumulant(p).domega / p.purcell)
    files.append(io.write_columns(ctx.out / "theory.csv", "fig4_theory",
                                  {"N2C_prime": curve, "D_kappa_over_g2": mf, "cumulant_domega_kappa_over_g2": cu},
                                  meta))
    files.append(_gp(ctx.out / "fig4.gp", [
        "set logscale xy",
        "set xlabel 'N^2 C'''",
        "plot 'mc.csv' using 1:2:3 with yerrorbars, 'theory.csv' using 1:2 with lines, '' using 1:3 with lines",
    ]))
    return files


# cumulant dynamics -----------------------------------------------------------------

FIG5 = {"g_hz": 3e3, "kappa_hz": 1e6, "gammaR_hz": 2e5, "N": 2e4}
FIG5_STARTS = {"large": (0.3, 0.4), "small": (math.sqrt(0.25 - 1e-4), 0.01)}


def fig5(ctx: Context) -> list[Path]:
    p = params_from_mapping(ctx.param_values(FIG5))
    duration = ctx.option("duration", 20.0 / p.Gamma_R)
    n = int(ctx.option("samples", 1000))
    files = []
    for label, (sz, sm) in FIG5_STARTS.items():
        mf = meanfield.run_scenario(meanfield.ScenarioSpec("nonadiabatic", duration, sz * p.N, sm * p.N,
                                                           n_samples=n), p)
        cu = cumulant.run_cumulant(cumulant.CumulantState.product_state(sz, sm), p, duration, n_samples=n)
        files.append(io.write_columns(ctx.out / f"dynamics_{label}.csv", "fig5_dynamics", {
            "t_s": mf.t, "Sz_mf": mf.Sz, "Splus_sq_mf": mf.dipole_sq,
            "Sz_cumulant": cu.Sz_coll, "dipole_sq_cumulant": cu.dipole_sq,
        }, params_meta(p) | {"start_sz": sz, "start_sm": sm}))
    ss_mf = analytics.mf_steady_state(p)
    ss_cu = cumulant.steady_state_closed_form(p)
    files.append(io.write_csv(ctx.out / "asymptotes.csv", "fig5_asymptotes", ("quantity", "value"), [
        ("Sz_mf", ss_mf.Sz_physical), ("Splus_sq_mf", ss_mf.Splus_sq_physical),
        ("Sz_cumulant", p.N * ss_cu.sz), ("dipole_sq_cumulant", cumulant.dipole_sq(p.N, ss_cu.sigma)),
    ], params_meta(p)))
    files.append(_gp(ctx.out / "fig5.gp", [
        "set multiplot layout 2,2",
        "set xlabel 't (s)'",
        *[f"plot 'dynamics_{label}.csv' using 1:{a} with lines dashtype 2, '' using 1:{b} with lines"
          for label in FIG5_STARTS for a, b in ((2, 4), (3, 5))],
        "unset multiplot",
    ]))
    return files


# correlator ------------------------------------------------------------------------

FIG6 = {"g_hz": 3e3, "kappa_hz": 1e6, "gammaR_hz": 2e5}


def fig6(ctx: Context) -> list[Path]:
    values = ctx.param_values(FIG6 | {"N": 2.0})
    N_max = float(ctx.option("N_max", 1e7))
    Ns = np.geomspace(2e3, N_max, int(ctx.option("points", 200)))
    rows = []
    for N in Ns:
        p = params_from_mapping(values | {"N": float(N)})
        ss = cumulant.steady_state_closed_form(p)
        rows.append((N, ss.sigma, analytics.sigma_large_N(p), ss.sigma * N, p.N2C_prime, ss.below_threshold))
    files = [io.write_csv(ctx.out / "sigma.csv", "fig6_sigma",
                          ("N", "sigma", "sigma_largeN", "sigma_times_N", "N2C_prime", "below_threshold"), rows,
                          {"params_hz": values})]
    files.append(_gp(ctx.out / "fig6.gp", [
        "set logscale x",
        "set xlabel 'N'",
        "plot 'sigma.csv' using 1:2 with lines, '' using 1:3 with lines dashtype 2",
    ]))
    return files


# cumulant summary ------------------------------------------------------------------

FIG7 = {"g_hz": 3e3, "kappa_hz": 1e6}
FIG7_N = (500.0, 2e4)


def fig7_rows(values: Mapping, N: float, rates_hz: np.ndarray) -> dict[str, list]:
    cols: dict[str, list] = {k: [] for k in (
        "gammaR_hz", "N2C_prime", "dnu_cumulant_hz", "dnu_mf_hz", "purcell_limit_hz", "gammaR_limit_hz",
        "Sx_sq", "Sx_sq_uncorrelated", "R_over_Gamma", "Nnu_over_N", "below_threshold")}
    for gr in rates_hz:
        p = params_from_mapping(dict(values) | {"N": N, "gammaR_hz": float(gr)})
        ss = cumulant.steady_state_closed_form(p)
        cw = analytics.linewidth_cumulant(p)
        try:
            mf = analytics.linewidth_mf(p).domega
        except analytics.BelowThresholdError:
            mf = math.nan
        d = cumulant.derived(ss.state, p)
        cols["gammaR_hz"].append(gr)
        cols["N2C_prime"].append(p.N2C_prime)
        cols["dnu_cumulant_hz"].append(cw.domega / TWO_PI)
        cols["dnu_mf_hz"].append(mf / TWO_PI)
        cols["purcell_limit_hz"].append(4.0 * p.purcell / TWO_PI)
        cols["gammaR_limit_hz"].append(gr)
        cols["Sx_sq"].append(d.Sx_sq)
        cols["Sx_sq_uncorrelated"].append(0.25 * N)
        cols["R_over_Gamma"].append(d.R / p.Gamma)
        cols["Nnu_over_N"].append(d.Nnu / N)
        cols["below_threshold"].append(ss.below_threshold)
    return cols


def fig7(ctx: Context) -> list[Path]:
    values = ctx.param_values(FIG7 | {"N": None})
    values.pop("N", None)
    values.pop("gammaR_hz", None)
    values.pop("Gamma_hz", None)
    branch = (ctx.overrides or {}).get("N")
    Ns = (float(branch),) if branch is not None else FIG7_N
    rates = np.geomspace(float(ctx.option("gammaR_min_hz", 1.0)), float(ctx.option("gammaR_max_hz", 1e7)),
                         int(ctx.option("points", 200)))
    files = []
    for N in Ns:
        files.append(io.write_columns(ctx.out / f"cumulant_N{N:g}.csv", "fig7_cumulant",
                                      fig7_rows(values, N, rates), {"params_hz": values | {"N": N}}))
    names = [f.name for f in files]
    files.append(_gp(ctx.out / "fig7.gp", [
        "set multiplot layout 1,3",
        "set logscale xy",
        "set xlabel 'Gamma_R/2pi (Hz)'",
        "plot " + ", ".join(f"'{n}' using 1:3 with lines, '' using 1:4 with lines dashtype 2" for n in names)
        + f", '{names[0]}' using 1:5 with lines dashtype 3, '' using 1:6 with lines dashtype 3",
        "plot " + ", ".join(f"'{n}' using 1:7 with lines, '' using 1:8 with lines dashtype 2" for n in names),
        "unset logscale y",
        "plot " + ", ".join(f"'{n}' using 1:9 with lines" for n in names),
        "unset multiplot",
    ]))
    return files


FIGURES: dict[str, Callable[[Context], list[Path]]] = {
    "fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7,
}


def make_figure(which: str, ctx: Context) -> list[Path]:
    try:
        fn = FIGURES[which]
    except KeyError:
        raise ValueError(f"unknown figure {which!r}; expected one of {sorted(FIGURES)}") from None
    ctx.out.mkdir(parents=True, exist_ok=True)
    return fn(ctx)

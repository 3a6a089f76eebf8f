"""Command-line front end.

Every command writes its CSVs plus ``manifest.json`` into ``--out``. The
manifest records the argument vector, so ``srlaser replay manifest.json``
re-runs the command and checks that every output is byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, analytics, cumulant, figures, io, meanfield, montecarlo, spectrum, sweep
from ._backend import BACKEND
from .integrator import IntegrationError
from .params import PARAM_KEYS, ParameterError, PhysParams, TWO_PI, params_from_mapping, read_config

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


NUMERIC_ERRORS = (IntegrationError, spectrum.SpectrumError, montecarlo.McError, analytics.BelowThresholdError,
                  FloatingPointError, RuntimeError)
USAGE_ERRORS = (UsageError, ParameterError, sweep.SweepError, ValueError, FileNotFoundError)


# parameters -----------------------------------------------------------------------


def _positive_duration(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("duration must be > 0")
    return v


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("physical parameters (Hz, nu = omega / 2pi)")
    g.add_argument("--g-hz", dest="g_hz", type=float)
    g.add_argument("--kappa-hz", dest="kappa_hz", type=float)
    g.add_argument("--gamma-hz", dest="gamma_hz", type=float)
    rate = g.add_mutually_exclusive_group()
    rate.add_argument("--gammaR-hz", dest="gammaR_hz", type=float, help="refreshing rate Gamma/N")
    rate.add_argument("--Gamma-hz", dest="Gamma_hz", type=float, help="loading rate")
    g.add_argument("--N", dest="N", type=float, help="steady-state atom number")


def config_values(args) -> dict:
    """Config-file keys overridden by explicit flags."""
    values: dict = {}
    if args.config:
        for key, raw in read_config(args.config).items():
            if key not in PARAM_KEYS:
                raise ParameterError(key, "unknown config key")
            try:
                values[key] = float(raw)
            except ValueError:
                raise ParameterError(key, f"not a number: {raw!r}") from None
    for key in PARAM_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            if key in ("gammaR_hz", "Gamma_hz"):
                values.pop("Gamma_hz" if key == "gammaR_hz" else "gammaR_hz", None)
            values[key] = v
    return values


def resolve_params(args, defaults: dict) -> PhysParams:
    values = figures.Context(Path("."), overrides=config_values(args)).param_values(defaults)
    return params_from_mapping(values)


# commands -------------------------------------------------------------------------


def cmd_pulsed(args, out: Path) -> tuple[list[Path], dict]:
    p = resolve_params(args, figures.FIG1)
    duration = args.duration if args.duration is not None else 20e-6
    files = figures.pulsed_outputs(out, p, duration, args.seed_fraction, args.samples,
                                   with_spectrum=not args.no_spectrum)
    return files, {"params_hz": p.as_hz()}


def cmd_continuous(args, out: Path) -> tuple[list[Path], dict]:
    p = resolve_params(args, figures.FIG2)
    duration = args.duration if args.duration is not None else 10.0 / p.Gamma_R
    sm0 = args.Sm0_fraction * p.N
    sz0 = math.sqrt(max((0.5 * p.N) ** 2 - sm0 * sm0, 0.0))
    sc = meanfield.ScenarioSpec(args.variant, duration, sz0, sm0, n_samples=args.samples)
    traj = meanfield.run_scenario(sc, p)
    meta = {"params_hz": p.as_hz(), "variant": args.variant}
    files = [io.write_columns(out / "trajectory.csv", "trajectory", traj.columns(), meta)]
    ss = analytics.mf_steady_state(p if args.variant != "continuous" else p.replace(gamma=0.0))
    files.append(io.write_csv(out / "steady_state.csv", "mf_steady_state", ("quantity", "value"), [
        ("Sz", ss.Sz_physical), ("Splus_sq", ss.Splus_sq_physical), ("superradiant", ss.superradiant),
        ("Sz_final", traj.Sz[-1]), ("Splus_sq_final", traj.dipole_sq[-1]),
    ], meta))
    if not args.no_spectrum:
        width, spec = spectrum.measure_linewidth(traj.field_record().window(args.spectrum_from * duration),
                                                 method="fft")
        files.append(io.write_columns(out / "spectrum.csv", "spectrum",
                                      {"omega_over_2pi_hz": spec.to_hz(), "intensity_normalized": spec.intensity},
                                      meta | {"hwhm_hz": width / TWO_PI}))
    return files, meta


def phase_spec(args) -> sweep.SweepSpec:
    fixed = config_values(args)
    for key in ("gamma_hz", "Gamma_hz", "gammaR_hz"):
        fixed.pop(key, None)
    base = sweep.fig3_spec(args.count or (20 if args.preset == "desk" else 30),
                           args.duration_factor or (200.0 if args.preset == "desk" else 1000.0))
    axes = tuple(sweep.Axis.parse(a) for a in args.axis) if args.axis else base.axes
    return sweep.SweepSpec(axes, base.fixed | fixed, args.task, base.duration_factor, seed=args.seed)


def cmd_phase_diagram(args, out: Path) -> tuple[list[Path], dict]:
    spec = phase_spec(args)
    sweep.check_phase_axes(spec)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        files, results = figures.phase_outputs(out, spec, args.threads)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    failed = sum(1 for r in results if r.reason)
    if failed:
        print(f"warning: {failed} grid points failed (NaN in grid.csv)", file=sys.stderr)
    return files, {"fixed": spec.fixed, "points": len(results), "failed": failed}


def cmd_mc(args, out: Path) -> tuple[list[Path], dict]:
    given = config_values(args)
    if args.N2C_prime is not None or not ({"gammaR_hz", "Gamma_hz"} & given.keys()):
        y = 10.0 if args.N2C_prime is None else args.N2C_prime
        base = resolve_params(args, figures.FIG4 | {"gammaR_hz": 1.0})
        p = montecarlo.fig4_params(y, N=base.N, g_hz=base.g / TWO_PI, kappa_hz=base.kappa / TWO_PI)
    else:
        p = resolve_params(args, figures.FIG4)
    events = args.events or montecarlo.events_for(p)
    realizations = args.realizations or (10 if args.preset == "desk" else 50)
    cfg = montecarlo.McConfig(p, seed=args.seed, n_events=events, realizations=realizations)
    ens = montecarlo.run_ensemble(cfg, args.threads)
    meta = {"params_hz": p.as_hz(), "seed": cfg.seed, "n_events": events, "realizations": realizations}
    names = ("index", "seed", "tau_c_s", "tau_c_stderr_s", "domega_rad_s", "domega_hz", "lower_bound", "mean_Sz",
             "mean_transverse", "n_skipped", "excursions")
    rows = [(r.index, r.seed, r.tau_c, r.tau_c_stderr, r.domega, r.domega / TWO_PI, r.lower_bound, r.mean_Sz,
             r.mean_transverse, r.n_skipped, r.excursions) for r in ens.realizations]
    files = [io.write_csv(out / "realizations.csv", "mc_realizations", names, rows, meta)]
    if args.event_log:
        log = out / "events_r0.txt"
        log.write_text("\n".join(montecarlo.run_trajectory(cfg, 0).event_log()) + "\n", encoding="utf-8")
        files.append(log)
    agg = [(q, ens.mean(q), ens.std(q), ens.stderr(q), ens.n, ens.single_sample)
           for q in ("domega", "tau_c", "mean_Sz", "mean_transverse")]
    agg.append(("domega_kappa_over_g2", ens.mean() / p.purcell, ens.std() / p.purcell, ens.stderr() / p.purcell,
                ens.n, ens.single_sample))
    files.append(io.write_csv(out / "aggregate.csv", "mc_aggregate",
                              ("quantity", "mean", "std", "stderr", "n", "single_sample"), agg, meta))
    return files, meta


def cmd_cumulant(args, out: Path) -> tuple[list[Path], dict]:
    p = resolve_params(args, figures.FIG5)
    meta = {"params_hz": p.as_hz()}
    ss = cumulant.steady_state_closed_form(p)
    d = cumulant.derived(ss.state, p)
    lw = analytics.linewidth_cumulant(p)
    rows = [("sz", ss.sz), ("sigma", ss.sigma), ("Sz", d.Sz_coll), ("dipole_sq", d.dipole_sq), ("Sx_sq", d.Sx_sq),
            ("Nnu", d.Nnu), ("R", d.R), ("R_over_Gamma", d.R / p.Gamma), ("tau_c_s", lw.tau_c),
            ("dnu_hz", lw.domega / TWO_PI), ("dnu_largeN_hz", lw.domega_largeN / TWO_PI),
            ("sigma_largeN", analytics.sigma_large_N(p)), ("below_threshold", ss.below_threshold)]
    files = [io.write_csv(out / "steady_state.csv", "cumulant_steady_state", ("quantity", "value"), rows, meta)]
    if args.duration is not None:
        y0 = cumulant.CumulantState.product_state(args.sz0, args.sm0)
        traj = cumulant.run_cumulant(y0, p, args.duration, n_samples=args.samples)
        cols = {"t_s": traj.t}
        for name in cumulant.FIELDS:
            c = traj.component(name)
            cols[f"Re_{name}"] = c.real
            cols[f"Im_{name}"] = c.imag
        cols["dipole_sq"] = traj.dipole_sq
        cols["Nnu"] = traj.Nnu
        cols["sigma"] = traj.component("spsm").real
        files.append(io.write_columns(out / "trajectory.csv", "cumulant_trajectory", cols,
                                      meta | {"start_sz": args.sz0, "start_sm": args.sm0}))
    return files, meta


def cmd_spectrum(args, out: Path) -> tuple[list[Path], dict]:
    meta_in, cols = io.read_csv(args.input)
    for c in ("t_s", "Reb", "Imb"):
        if c not in cols:
            raise UsageError(f"{args.input}: missing column {c!r}")
    record = spectrum.FieldRecord(cols["t_s"], cols["Reb"] + 1j * cols["Imb"])
    if args.t_start is not None or args.t_stop is not None:
        record = record.window(args.t_start if args.t_start is not None else record.t[0], args.t_stop)
    width, spec = spectrum.measure_linewidth(record, method=args.method)
    meta = {"source": str(args.input), "hwhm_hz": width / TWO_PI, "source_meta": meta_in}
    files = [io.write_columns(out / "spectrum.csv", "spectrum",
                              {"omega_over_2pi_hz": spec.to_hz(), "intensity_normalized": spec.intensity}, meta)]
    print(f"HWHM = {width / TWO_PI:.6g} Hz ({width:.6g} rad/s)")
    return files, meta


def cmd_figures(args, out: Path) -> tuple[list[Path], dict]:
    overrides = config_values(args)
    for key in ("duration", "count", "realizations"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    ctx = figures.Context(out, args.preset, args.seed, args.threads, overrides)
    if args.which not in figures.FIGURES:
        raise UsageError(f"unknown figure {args.which!r}; expected one of {sorted(figures.FIGURES)}")
    return figures.make_figure(args.which, ctx), {"figure": args.which, "overrides": overrides}


# manifest ---------------------------------------------------------------------------


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, argv: list[str], args, snapshot: dict, files: list[Path], seconds: float) -> Path:
    manifest = {
        "argv": argv,
        "command": args.command,
        "config": snapshot,
        "seed": args.seed,
        "preset": args.preset,
        "threads": args.threads,
        "version": __version__,
        "backend": BACKEND,
        "numpy": np.__version__,
        "outputs": [{"path": f.relative_to(out).as_posix(), "sha256": sha256(f)} for f in files],
        "wall_clock_s": seconds,
    }
    return io.write_json(out / "manifest.json", manifest)


def strip_out(argv: list[str]) -> list[str]:
    """``argv`` without any ``--out`` / ``--threads`` flags (they do not affect output bytes)."""
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in ("--out", "--threads"):
            skip = True
            continue
        if a.startswith("--out=") or a.startswith("--threads="):
            continue
        res.append(a)
    return res


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or (Path(args.manifest).parent / "replay"))
    argv = strip_out(manifest["argv"]) + ["--out", str(out)]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    code = main(argv)
    if code != EXIT_OK:
        return code
    mismatched = []
    for entry in manifest["outputs"]:
        path = out / entry["path"]
        if not path.exists() or sha256(path) != entry["sha256"]:
            mismatched.append(entry["path"])
    if mismatched:
        print("replay differs: " + ", ".join(mismatched), file=sys.stderr)
        return EXIT_NUMERIC
    print(f"replay identical: {len(manifest['outputs'])} files")
    return EXIT_OK


# parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file (g_hz, kappa_hz, gamma_hz, gammaR_hz|Gamma_hz, N)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--preset", choices=figures.PRESETS, default="desk")

    parser = argparse.ArgumentParser(prog="srlaser", description="Continuous superradiant laser models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pulsed", parents=[common], help="single superradiant burst, spectra, linewidth vs time")
    add_param_flags(p)
    p.add_argument("--duration", type=_positive_duration, help="seconds (default 20e-6)")
    p.add_argument("--seed-fraction", type=float, default=meanfield.PULSED_SEED_FRACTION)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--no-spectrum", action="store_true")

    p = sub.add_parser("continuous", parents=[common], help="mean-field run with atom refreshing")
    add_param_flags(p)
    p.add_argument("--variant", choices=("continuous", "continuous_spont", "nonadiabatic"), default="continuous_spont")
    p.add_argument("--duration", type=_positive_duration, help="seconds (default 10/Gamma_R)")
    p.add_argument("--Sm0-fraction", dest="Sm0_fraction", type=float, default=0.03)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--spectrum-from", type=float, default=0.5, help="fraction of the run to skip before the spectrum")
    p.add_argument("--no-spectrum", action="store_true")

    p = sub.add_parser("phase-diagram", parents=[common], help="(gamma, Gamma) linewidth map and threshold line")
    add_param_flags(p)
    p.add_argument("--axis", action="append", help="name:scale:min:max:count (give two)")
    p.add_argument("--count", type=int, help="points per default axis")
    p.add_argument("--duration-factor", type=float, help="run length in transit times")
    p.add_argument("--task", choices=sweep.TASKS, default="spectrum-linewidth")

    p = sub.add_parser("mc", parents=[common], help="Monte-Carlo linewidth ensemble")
    add_param_flags(p)
    p.add_argument("--N2C-prime", dest="N2C_prime", type=float,
                   help="set Gamma from N^2 C' (default 10 when no rate is given)")
    p.add_argument("--realizations", type=int)
    p.add_argument("--events", type=int, help="retained events per realization")
    p.add_argument("--event-log", action="store_true", help="dump the event log of realization 0")

    p = sub.add_parser("cumulant", parents=[common], help="second-order cumulant steady state and dynamics")
    add_param_flags(p)
    p.add_argument("--duration", type=_positive_duration, help="also integrate for this many seconds")
    p.add_argument("--sz0", type=float, default=0.5)
    p.add_argument("--sm0", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("spectrum", parents=[common], help="spectrum and HWHM of a trajectory CSV")
    p.add_argument("input", help="CSV with t_s, Reb, Imb columns")
    p.add_argument("--t-start", type=float)
    p.add_argument("--t-stop", type=float)
    p.add_argument("--method", choices=("direct", "fft"), default="fft")

    p = sub.add_parser("figures", parents=[common], help="data bundle and gnuplot script for one figure")
    add_param_flags(p)
    p.add_argument("which", help="fig1 ... fig7")
    p.add_argument("--duration", type=_positive_duration)
    p.add_argument("--count", type=int)
    p.add_argument("--realizations", type=int)

    p = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    return parser


COMMANDS = {
    "pulsed": cmd_pulsed,
    "continuous": cmd_continuous,
    "phase-diagram": cmd_phase_diagram,
    "mc": cmd_mc,
    "cumulant": cmd_cumulant,
    "spectrum": cmd_spectrum,
    "figures": cmd_figures,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        return cmd_replay(args)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        with np.errstate(all="ignore"):
            files, snapshot = COMMANDS[args.command](args, out)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_manifest(out, argv, args, snapshot, files, time.perf_counter() - start)
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Compare the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on a
representative workload with both backends, and the outputs are checked to
agree before timings are reported.
"""

from __future__ import annotations

import argparse
import math
import sys
import timeit

import numpy as np

from srlaser import _kernels_py
from srlaser.montecarlo import McConfig, draw_signs, fig4_params, generator, initial_state
from srlaser.params import PhysParams

try:
    from srlaser import _kernels
except ImportError:  # extension not built
    _kernels = None


def mf_case(scale: float):
    p = PhysParams.from_hz(g_hz=3e3, kappa_hz=1e6, gamma_hz=7e3, N=1e5, gammaR_hz=5e5 / (2 * math.pi))
    a = 4.0 * p.purcell
    t1 = scale * 10.0 / p.Gamma_R
    # method 1 selects rk45
    args = (0.5 * p.N, 0.03 * p.N, 0.0, a, p.gamma, p.Gamma, p.N, 0.0, t1, 1000, 1, 0.0,
            1e-9, 1e-12, 1e-18, t1, 10_000_000)

    def compare(x, y):
        return float(np.max(np.abs(np.asarray(x[1]) - np.asarray(y[1]))) / p.N)

    return "mf_adiabatic (rk45, Fig. 2 run)", args, compare


def mc_case(scale: float):
    p = fig4_params(10.0)
    cfg = McConfig(p, seed=1, n_events=max(1000, int(scale * 20_000)))
    n = cfg.burn_in_events + cfg.n_events
    draws = draw_signs(generator(1), n)
    sx, sy, sz = initial_state(p)
    args = (sx, sy, sz, 4.0 * p.purcell, p.N, cfg.interval, cfg.substeps(), n, draws, True, True, 1)

    def compare(x, y):
        return float(np.max(np.abs(np.asarray(x[0]) - np.asarray(y[0]))) / p.N)

    return f"mc_events ({n} events)", args, compare


def spectrum_case(scale: float):
    n = max(256, int(scale * 20_000))
    t = np.linspace(0.0, 1e-3, n)
    rng = np.random.default_rng(0)
    b = np.exp(-1j * 2e4 * t) + 0.1 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    omega = np.linspace(-math.pi / (t[1] - t[0]), math.pi / (t[1] - t[0]), 2001)
    args = (0.0, float(t[1] - t[0]), b.real.copy(), b.imag.copy(), omega)

    def compare(x, y):
        ax = np.asarray(x[0]) + 1j * np.asarray(x[1])
        ay = np.asarray(y[0]) + 1j * np.asarray(y[1])
        return float(np.max(np.abs(ax - ay)) / np.max(np.abs(ax)))

    return f"spectrum_direct ({n} samples x 2001 freqs)", args, compare


CASES = {"mf": (mf_case, "mf_adiabatic"), "mc": (mc_case, "mc_events"), "spectrum": (spectrum_case, "spectrum_direct")}


def best_time(fn, args, repeat: int) -> float:
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="workload size multiplier")
    ap.add_argument("--only", choices=sorted(CASES), action="append")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build it with `pip install -e .`", file=sys.stderr)
        return 1

    print(f"{'kernel':<45} {'python [s]':>12} {'compiled [s]':>13} {'speed-up':>9} {'max diff':>10}")
    for key in args.only or sorted(CASES):
        make, name = CASES[key]
        label, call_args, compare = make(args.scale)
        py_fn = getattr(_kernels_py, name)
        cy_fn = getattr(_kernels, name)
        diff = compare(py_fn(*call_args), cy_fn(*call_args))
        t_py = best_time(py_fn, call_args, args.repeat)
        t_cy = best_time(cy_fn, call_args, args.repeat)
        print(f"{label:<45} {t_py:12.4g} {t_cy:13.4g} {t_py / t_cy:9.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

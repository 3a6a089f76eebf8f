"""Stochastic trajectories of the collective spin with discrete atom refreshing.

One event per loading interval 1/Gamma: record the spin, load a fresh excited
atom (S_z += 1/2, S_x and S_y each += ±1/2), evolve the pulsed mean-field
equations for 1/Gamma, then remove one atom (scale by (N-1)/N and add ±1/2
spin noise along the two directions orthogonal to the collective spin).

Randomness comes from ``numpy.random.Philox``; realization ``r`` of a run with
seed ``s`` uses the key ``s ^ r``. All four sign bits of every event are drawn
up front, so a trajectory is a pure function of (seed, config).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import curve_fit

from ._backend import kernels
from .analytics import mf_steady_state
from .params import PhysParams

#: Substep bound for the in-event RK4 integration, in units of the fastest rate.
SUBSTEP_FRACTION = 0.05
MIN_SAMPLES_PER_LAG = 100
FIT_FLOOR = 0.05
SEED_MASK = (1 << 64) - 1


class McError(RuntimeError):
    pass


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo run description.

    ``n_events`` counts retained events; ``burn_in`` (s) adds events before
    them and defaults to 5/Gamma_R. Free-space decay is always switched off.
    """

    params: PhysParams
    seed: int = 0
    n_events: int = 100_000
    burn_in: float | None = None
    realizations: int = 1
    noise: bool = True
    refresh: bool = True
    record_every: int = 1
    n_sub: int | None = None
    initial: tuple[float, float, float] | None = None

    def __post_init__(self):
        p = self.params
        if p.Gamma <= 0 and self.refresh:
            raise ValueError("Monte-Carlo refreshing needs Gamma > 0")
        if p.gamma != 0:
            object.__setattr__(self, "params", p.replace(gamma=0.0))
        if self.n_events < 10 * p.N:
            raise ValueError(f"n_events must be >= 10 N = {10 * p.N:g}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 <= self.seed <= SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def interval(self) -> float:
        return 1.0 / self.params.Gamma

    @property
    def burn_in_time(self) -> float:
        return 5.0 / self.params.Gamma_R if self.burn_in is None else self.burn_in

    @property
    def burn_in_events(self) -> int:
        return int(math.ceil(self.burn_in_time / self.interval - 1e-9))

    def substeps(self) -> int:
        if self.n_sub is not None:
            return self.n_sub
        p = self.params
        rate = 4.0 * p.purcell * (0.5 * p.N + math.sqrt(p.N) + 1.0)
        return max(1, int(math.ceil(self.interval * rate / SUBSTEP_FRACTION)))

    def realization_seed(self, r: int) -> int:
        return (self.seed ^ r) & SEED_MASK


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def draw_signs(rng: np.random.Generator, n_events: int) -> np.ndarray:
    """Four fair bits per event: load x, load y, unload v1, unload v2."""
    return rng.integers(0, 2, size=(n_events, 4), dtype=np.int8)


# single events -------------------------------------------------------------------


def _sign(bit) -> float:
    return 0.5 if bit else -0.5


def load_atom(state, rng=None, bits=None) -> np.ndarray:
    """Add one fully excited atom with random transverse spin signs."""
    if bits is None:
        bits = rng.integers(0, 2, size=2)
    s = np.array(state, dtype=float)
    s[2] += 0.5
    s[0] += _sign(bits[0])
    s[1] += _sign(bits[1])
    return s


def transverse_basis(u) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to the unit vector ``u``.

    v1 is Gram-Schmidt of the coordinate axis least aligned with ``u`` (the
    first such axis on ties); v2 = u x v1.
    """
    u = np.asarray(u, dtype=float)
    axis = 0
    for j in (1, 2):
        if abs(u[j]) < abs(u[axis]):
            axis = j
    v1 = -u[axis] * u
    v1[axis] += 1.0
    v1 /= math.sqrt(v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2])
    v2 = np.array([u[1] * v1[2] - u[2] * v1[1], u[2] * v1[0] - u[0] * v1[2], u[0] * v1[1] - u[1] * v1[0]])
    return v1, v2


def unload_atom(state, N: float, rng=None, bits=None) -> tuple[np.ndarray, bool]:
    """Remove one atom; returns (new_state, noise_skipped).

    Noise is skipped (and reported) when the spin has zero length.
    """
    if bits is None:
        bits = rng.integers(0, 2, size=2)
    s = np.array(state, dtype=float) * ((N - 1.0) / N)
    norm = math.sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
    if norm == 0.0:
        return s, True
    v1, v2 = transverse_basis(s / norm)
    return s + _sign(bits[0]) * v1 + _sign(bits[1]) * v2, False


# trajectories --------------------------------------------------------------------


@dataclass
class McTrajectory:
    """Spin sampled just before each load; times are event times j/Gamma."""

    t: np.ndarray
    S: np.ndarray
    flags: np.ndarray
    draws: np.ndarray
    config: McConfig
    seed: int
    burn_in_events: int

    @property
    def Sx(self) -> np.ndarray:
        return self.S[:, 0]

    @property
    def transverse(self) -> np.ndarray:
        return np.hypot(self.S[:, 0], self.S[:, 1])

    @property
    def excursions(self) -> int:
        """Samples with a component larger than N in magnitude (soft bound check)."""
        return int(np.count_nonzero(np.abs(self.S) > self.config.params.N))

    def retained(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.burn_in_events // self.config.record_every
        return self.t[k:], self.S[k:]

    def event_log(self):
        """One line per event: index, time, load signs, unload signs, noise-skipped flag."""
        dt = self.config.interval
        yield "# event t_s load_x load_y unload_v1 unload_v2 skipped"
        for j, (d, f) in enumerate(zip(self.draws, self.flags)):
            signs = " ".join("+" if bit else "-" for bit in d) if self.config.noise else "0 0 0 0"
            yield f"{j} {j * dt:.17g} {signs} {int(f)}"


def initial_state(params: PhysParams) -> tuple[float, float, float]:
    """Mean-field lasing state when it exists, else full inversion with a sqrt(N)/2 dipole."""
    ss = mf_steady_state(params)
    if ss.superradiant:
        return (math.sqrt(ss.Splus_sq), 0.0, ss.Sz)
    return (0.5 * math.sqrt(params.N), 0.0, 0.5 * params.N)


def run_trajectory(cfg: McConfig, realization: int = 0) -> McTrajectory:
    p = cfg.params
    seed = cfg.realization_seed(realization)
    n_total = cfg.burn_in_events + cfg.n_events
    draws = draw_signs(generator(seed), n_total)
    sx, sy, sz = cfg.initial if cfg.initial is not None else initial_state(p)
    S, F = kernels.mc_events(float(sx), float(sy), float(sz), 4.0 * p.purcell, float(p.N), cfg.interval,
                             cfg.substeps(), n_total, draws, bool(cfg.noise), bool(cfg.refresh),
                             cfg.record_every)
    t = np.arange(S.shape[0]) * cfg.record_every * cfg.interval
    return McTrajectory(t, np.asarray(S), np.asarray(F), draws, cfg, seed, cfg.burn_in_events)


# autocorrelation and fit -----------------------------------------------------------


@dataclass(frozen=True)
class AutocorrEstimate:
    lags: np.ndarray       # seconds
    C: np.ndarray
    counts: np.ndarray     # products averaged per lag
    duration: float        # retained record length (s)


def _lag_products(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.size
    size = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(x, size)
    full = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1]
    return full


def autocorrelation(x, dt: float, lags=None, floor: float = FIT_FLOOR) -> AutocorrEstimate:
    """Time-averaged C(k dt) = mean_i x[i+k] x[i] over a retained, uniformly sampled record.

    Without explicit ``lags`` (in samples) the grid runs from 0 until C first
    drops below ``floor * C(0)``, capped at a quarter of the record.

    Raises
    ------
    McError
        If any requested lag leaves fewer than 100 products, or exceeds a
        quarter of the record.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    cap = (n - 1) // 4
    if lags is None:
        if n - cap < MIN_SAMPLES_PER_LAG or cap < 1:
            raise McError(f"record too short ({n} samples) for an autocorrelation estimate")
        sums = _lag_products(x, cap)
        counts = n - np.arange(cap + 1)
        C = sums / counts
        below = np.nonzero(C < floor * C[0])[0]
        stop = below[0] + 1 if below.size else cap + 1
        k = np.arange(stop)
        return AutocorrEstimate(k * dt, C[:stop], counts[:stop], n * dt)
    k = np.asarray(lags, dtype=int)
    if np.any(k < 0) or np.any(k > cap):
        raise McError("lags must lie in [0, n/4]")
    counts = n - k
    if np.any(counts < MIN_SAMPLES_PER_LAG):
        raise McError(f"fewer than {MIN_SAMPLES_PER_LAG} samples for some lag")
    sums = _lag_products(x, int(k.max()))
    return AutocorrEstimate(k * dt, sums[k] / counts, counts, n * dt)


@dataclass(frozen=True)
class AutocorrFit:
    lags: np.ndarray
    C: np.ndarray
    amplitude: float
    tau_c: float
    tau_c_stderr: float
    residual_rms: float
    lower_bound: bool

    @property
    def domega(self) -> float:
        """HWHM linewidth 1/tau_c (rad/s)."""
        return 1.0 / self.tau_c


def _exp_model(t, a, tau):
    return a * np.exp(-t / tau)


def fit_linewidth(corr: AutocorrEstimate, floor: float = FIT_FLOOR) -> AutocorrFit:
    """Least-squares fit of A exp(-t/tau_c) over the leading lags with C > floor * C(0)."""
    C = np.asarray(corr.C, dtype=float)
    t = np.asarray(corr.lags, dtype=float)
    if not C[0] > 0:
        raise McError("C(0) must be positive")
    below = np.nonzero(C <= floor * C[0])[0]
    stop = below[0] if below.size else C.size
    if stop < 2:
        raise McError("correlation drops below the fit floor at the first lag")
    tt, cc = t[:stop], C[:stop]
    # log-linear start, weighted towards short lags
    slope = np.polyfit(tt, np.log(cc), 1)[0]
    tau0 = -1.0 / slope if slope < 0 else 10.0 * tt[-1]
    popt, pcov = curve_fit(_exp_model, tt, cc, p0=(cc[0], tau0), xtol=1e-14, ftol=1e-14, gtol=1e-14,
                           maxfev=20000)
    a, tau = float(popt[0]), float(popt[1])
    if not tau > 0:
        raise McError("fitted correlation time is not positive")
    err = float(np.sqrt(pcov[1, 1])) if np.all(np.isfinite(pcov)) else math.inf
    resid = float(np.sqrt(np.mean((cc - _exp_model(tt, a, tau)) ** 2)))
    return AutocorrFit(tt, cc, a, tau, err, resid, tau > corr.duration)


def fit_series(x, dt: float, blocks: int = 8, floor: float = FIT_FLOOR) -> AutocorrFit:
    """Fit the autocorrelation of a whole record, with a batch-means error on tau_c.

    The least-squares error treats neighbouring lags as independent and is far
    too small, so the reported error is the larger of it and the spread of
    fits to ``blocks`` consecutive sub-records.
    """
    x = np.asarray(x, dtype=float)
    fit = fit_linewidth(autocorrelation(x, dt, floor=floor), floor)
    taus = []
    for part in np.array_split(x, blocks):
        try:
            taus.append(fit_linewidth(autocorrelation(part, dt, floor=floor), floor).tau_c)
        except McError:
            continue
    if len(taus) >= 2:
        batch = float(np.std(taus, ddof=1) / math.sqrt(len(taus)))
        fit = replace(fit, tau_c_stderr=max(fit.tau_c_stderr, batch))
    return fit


# ensembles -------------------------------------------------------------------------


@dataclass(frozen=True)
class RealizationResult:
    index: int
    seed: int
    tau_c: float
    tau_c_stderr: float
    domega: float
    lower_bound: bool
    mean_Sz: float
    mean_transverse: float
    n_skipped: int
    excursions: int


def analyse(traj: McTrajectory) -> RealizationResult:
    t, S = traj.retained()
    dt = traj.config.interval * traj.config.record_every
    fit = fit_series(S[:, 0], dt)
    return RealizationResult(
        index=-1, seed=traj.seed, tau_c=fit.tau_c, tau_c_stderr=fit.tau_c_stderr, domega=fit.domega,
        lower_bound=fit.lower_bound, mean_Sz=float(S[:, 2].mean()),
        mean_transverse=float(np.hypot(S[:, 0], S[:, 1]).mean()),
        n_skipped=int(traj.flags.sum()), excursions=traj.excursions,
    )


def _run_one(args) -> RealizationResult:
    cfg, r = args
    try:
        res = analyse(run_trajectory(cfg, r))
    except Exception as exc:  # carry the index with the failure
        raise McError(f"realization {r}: {exc}") from exc
    return replace(res, index=r)


@dataclass
class EnsembleResult:
    config: McConfig
    realizations: list[RealizationResult] = field(default_factory=list)

    def _values(self, name):
        return np.array([getattr(r, name) for r in self.realizations])

    @property
    def n(self) -> int:
        return len(self.realizations)

    @property
    def single_sample(self) -> bool:
        return self.n == 1

    def mean(self, name: str = "domega") -> float:
        return float(self._values(name).mean())

    def std(self, name: str = "domega") -> float:
        """Standard deviation across realizations (0 for a single realization)."""
        v = self._values(name)
        return float(v.std(ddof=1)) if v.size > 1 else 0.0

    def stderr(self, name: str = "domega") -> float:
        return self.std(name) / math.sqrt(self.n)


def default_workers(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    return max(1, os.cpu_count() or 1)


def run_ensemble(cfg: McConfig, threads: int | None = None) -> EnsembleResult:
    """Run ``cfg.realizations`` independent trajectories on a process pool.

    Results are stored by realization index, so the output does not depend on
    the worker count or completion order.
    """
    tasks = [(cfg, r) for r in range(cfg.realizations)]
    workers = min(default_workers(threads), len(tasks))
    if workers == 1:
        results = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    results.sort(key=lambda r: r.index)
    return EnsembleResult(cfg, results)


def events_for(params: PhysParams, factor: float = 300.0) -> int:
    """Event count covering ``factor`` times the longest expected correlation time kappa/(4 g^2)."""
    n = int(math.ceil(factor * params.Gamma / (4.0 * params.purcell)))
    return max(n, int(math.ceil(10 * params.N)))


def fig4_params(N2C_prime: float, N: float = 100.0, g_hz: float = 300.0, kappa_hz: float = 1e5) -> PhysParams:
    """Parameters of the linewidth scan: Gamma chosen so that N^2 C' takes the given value."""
    base = PhysParams.from_hz(g_hz=g_hz, kappa_hz=kappa_hz, N=N)
    gamma_r = base.collective_rate / N2C_prime
    return base.replace(Gamma=N * gamma_r)

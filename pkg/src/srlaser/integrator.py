"""Explicit Runge-Kutta integration of complex ODE systems.

Two methods are provided: classical fixed-step RK4 and the adaptive
Dormand-Prince 5(4) pair with local extrapolation. States are flat complex
numpy arrays; real systems simply carry zero imaginary parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    pass


class StiffnessError(IntegrationError):
    """Step size fell below ``dt_min``; ``t`` is where it happened."""

    def __init__(self, t: float, h: float, message: str | None = None):
        super().__init__(message or f"step size {h:.3e} below dt_min at t={t:.6e}")
        self.t = t
        self.h = h


class SteadyStateTimeout(IntegrationError):
    def __init__(self, t: float, residual: float):
        super().__init__(f"no steady state by t={t:.6e} (last residual {residual:.3e})")
        self.t = t
        self.residual = residual


@dataclass(frozen=True)
class OdeSystem:
    rhs: Rhs
    dimension: int

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.rhs(t, y)


@dataclass(frozen=True)
class IntegrationPolicy:
    """How to integrate.

    ``method`` is ``"rk4"`` (needs ``dt``) or ``"rk45"``. Samples are taken
    every ``record_stride`` steps, or on the uniform grid ``t0 + k*sample_dt``
    when ``sample_dt`` is set (steps are shortened to land on it).
    """

    method: str = "rk45"
    dt: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-12
    dt_min: float = 0.0
    dt_max: float = math.inf
    record_stride: int = 1
    sample_dt: float | None = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "rk4" and (self.dt is None or not self.dt > 0):
            raise ValueError("rk4 needs dt > 0")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be > 0")
        if self.dt_min < 0 or self.dt_min > self.dt_max:
            raise ValueError("need 0 <= dt_min <= dt_max")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.sample_dt is not None and not self.sample_dt > 0:
            raise ValueError("sample_dt must be > 0")

    def with_(self, **changes) -> "IntegrationPolicy":
        from dataclasses import replace

        return replace(self, **changes)


def default_policy(*rates: float, rtol: float = 1e-8, atol: float = 1e-12, **kw) -> IntegrationPolicy:
    """rk45 policy with ``dt_max = 0.05 / max(rates)``."""
    fastest = max((abs(r) for r in rates if math.isfinite(r)), default=0.0)
    dt_max = 0.05 / fastest if fastest > 0 else math.inf
    return IntegrationPolicy(method="rk45", rtol=rtol, atol=atol, dt_max=dt_max, **kw)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # shape (n_samples, dimension)
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (  # fifth minus fourth order weights
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def rk4_step(f: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dp45_step(f: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray):
    """One Dormand-Prince step; returns (y_new, error_vector, k7 = f(t+h, y_new))."""
    ks = [k1]
    for i in range(1, 7):
        incr = sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(t + _C[i] * h, y + h * incr))
    y_new = y + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks[6]


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(f: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(
    system: OdeSystem | Rhs,
    y0,
    t0: float,
    t1: float,
    policy: IntegrationPolicy | None = None,
) -> Trajectory:
    """Integrate from ``t0`` to ``t1``; the last sample is always at ``t1``.

    Raises
    ------
    StiffnessError
        If the adaptive step drops below ``policy.dt_min`` (or below round-off).
    """
    policy = policy or IntegrationPolicy()
    f = system.rhs if isinstance(system, OdeSystem) else system
    y = np.array(y0, dtype=complex).ravel()
    if isinstance(system, OdeSystem) and y.size != system.dimension:
        raise ValueError(f"y0 has size {y.size}, system dimension is {system.dimension}")
    if not t1 > t0:
        raise ValueError("need t1 > t0")

    span = t1 - t0
    if policy.sample_dt is not None:
        n_samples = max(1, int(round(span / policy.sample_dt)))
        sample_times = t0 + span * np.arange(1, n_samples + 1) / n_samples
        sample_times[-1] = t1
    else:
        sample_times = None

    ts = [t0]
    ys = [y.copy()]
    t = t0
    n_steps = 0
    n_rejected = 0
    next_sample = 0

    def record(t_now, y_now):
        ts.append(t_now)
        ys.append(y_now.copy())

    if policy.method == "rk4":
        n = max(1, int(math.ceil(span / policy.dt - 1e-9)))
        h = span / n
        if sample_times is not None:
            per_sample = max(1, int(round(policy.sample_dt / h)))
            if abs(per_sample * h - span / len(sample_times)) > 1e-9 * h * per_sample:
                raise ValueError("sample_dt must be an integer multiple of the rk4 step")
        for i in range(1, n + 1):
            y = rk4_step(f, t, y, h)
            t = t0 + i * h if i < n else t1
            n_steps += 1
            if sample_times is not None:
                if i % per_sample == 0 or i == n:
                    record(t, y)
            elif i % policy.record_stride == 0 or i == n:
                record(t, y)
        return Trajectory(np.array(ts), np.array(ys), n_steps, 0)

    f0 = f(t, y)
    h = min(_initial_step(f, t, y, f0, policy.rtol, policy.atol), policy.dt_max, span)
    k1 = f0
    tiny = 16 * np.finfo(float).eps
    while t < t1:
        if n_steps + n_rejected > policy.max_steps:
            raise IntegrationError(f"max_steps exceeded at t={t:.6e}")
        target = sample_times[next_sample] if sample_times is not None else t1
        h = min(h, policy.dt_max)
        if h < policy.dt_min or h <= tiny * max(abs(t), span):
            raise StiffnessError(t, h)
        landing = t + h >= target - tiny * max(abs(target), span)
        step = target - t if landing else h
        y_new, err, k7 = dp45_step(f, t, y, step, k1)
        en = _error_norm(err, y, y_new, policy.rtol, policy.atol)
        if not np.isfinite(en):
            en = math.inf
        if en <= 1.0:
            t = target if landing else t + step
            y = y_new
            k1 = k7
            n_steps += 1
            if sample_times is not None:
                if landing:
                    record(t, y)
                    next_sample += 1
            elif n_steps % policy.record_stride == 0 or t >= t1:
                record(t, y)
            # a shortened landing step says nothing new about the natural step size
            if not landing or step >= h:
                h = h * (5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2)))
        else:
            n_rejected += 1
            h = step * max(0.2, 0.9 * en ** -0.2)
    if ts[-1] != t1:
        record(t1, y)
    return Trajectory(np.array(ts), np.array(ys), n_steps, n_rejected)


def residual_inf(system: OdeSystem | Rhs, t: float, y: np.ndarray) -> float:
    f = system.rhs if isinstance(system, OdeSystem) else system
    return float(np.max(np.abs(f(t, np.asarray(y, dtype=complex)))))


def find_steady_state(
    system: OdeSystem | Rhs,
    y0,
    policy: IntegrationPolicy | None,
    eps: float,
    window: float,
    t_max: float,
    t0: float = 0.0,
    checks_per_window: int = 10,
) -> np.ndarray:
    """Integrate until ``max|rhs(y)| <= eps`` has held over a full ``window``.

    The residual is checked ``checks_per_window`` times per window. Raises
    :class:`SteadyStateTimeout` if this has not happened by ``t0 + t_max``.
    """
    if not window > 0:
        raise ValueError("window must be > 0")
    chunk = window / checks_per_window
    y = np.array(y0, dtype=complex).ravel()
    t = t0
    res = residual_inf(system, t, y)
    held_since = t if res <= eps else None
    while True:
        if held_since is not None and t - held_since >= window * (1 - 1e-12):
            return y
        if t - t0 >= t_max:
            raise SteadyStateTimeout(t, res)
        traj = integrate(system, y, t, t + chunk, policy)
        y = traj.final
        t = t + chunk
        res = residual_inf(system, t, y)
        if res <= eps:
            if held_since is None:
                held_since = t
        else:
            held_since = None

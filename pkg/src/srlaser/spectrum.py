"""Emitted spectrum from the intracavity field and HWHM extraction.

The output-mode amplitude is a_k(t) ∝ ∫_0^t b(τ) exp(iω_k τ) dτ with an
initially empty output field, so I(ω) = |∫ b e^{iωτ} dτ|^2, normalized to a
peak of 1. Times are absolute: shifting the record origin only rotates the
phase of every a_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import czt

from ._backend import kernels

MIN_SAMPLES = 16
DEFAULT_POINTS = 4001
DEFAULT_SPAN = 40.0  # grid half-width in units of 1/T
REFINE = 8


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class FieldRecord:
    """Uniformly sampled ⟨b⟩(t)."""

    t: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        b = np.asarray(self.b, dtype=complex)
        if t.ndim != 1 or t.shape != b.shape:
            raise SpectrumError("t and b must be 1-d arrays of equal length")
        if t.size < MIN_SAMPLES:
            raise SpectrumError(f"need at least {MIN_SAMPLES} samples, got {t.size}")
        steps = np.diff(t)
        dt = (t[-1] - t[0]) / (t.size - 1)
        if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
            raise SpectrumError("samples must be uniformly spaced (1e-9 relative)")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "b", b)

    @property
    def dt(self) -> float:
        return (self.t[-1] - self.t[0]) / (self.t.size - 1)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def nyquist(self) -> float:
        return math.pi / self.dt

    def window(self, t_start: float, t_stop: float | None = None) -> "FieldRecord":
        """Sub-record with t_start <= t <= t_stop."""
        stop = self.t[-1] if t_stop is None else t_stop
        keep = (self.t >= t_start - 1e-12 * abs(t_start)) & (self.t <= stop)
        return FieldRecord(self.t[keep], self.b[keep])


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    intensity: np.ndarray
    amplitude: np.ndarray

    def to_hz(self) -> np.ndarray:
        return self.omega / (2.0 * math.pi)


def default_grid(record: FieldRecord, points: int = DEFAULT_POINTS, span: float = DEFAULT_SPAN) -> np.ndarray:
    """Symmetric grid of ``points`` angular frequencies over ±span/T, clipped to Nyquist."""
    half = min(span / record.duration, record.nyquist)
    return np.linspace(-half, half, points)


def _is_uniform(omega: np.ndarray) -> bool:
    if omega.size < 2:
        return True
    d = np.diff(omega)
    return bool(np.all(d > 0) and np.max(np.abs(d - d.mean())) <= 1e-9 * abs(d.mean()))


def _amplitude_czt(record: FieldRecord, omega: np.ndarray) -> np.ndarray:
    dt = record.dt
    w = np.full(record.b.size, dt)
    w[0] = w[-1] = 0.5 * dt
    x = record.b * w
    if omega.size == 1:
        return np.array([np.sum(x * np.exp(1j * omega[0] * record.t))])
    dw = omega[1] - omega[0]
    # sum_n x_n exp(i w_k t_n), t_n = t0 + n dt, w_k = w0 + k dw
    out = czt(x, m=omega.size, w=np.exp(1j * dw * dt), a=np.exp(-1j * omega[0] * dt))
    return out * np.exp(1j * omega * record.t[0])


def compute_spectrum(record: FieldRecord, grid=None, method: str = "direct") -> Spectrum:
    """Trapezoid-rule output amplitude on ``grid`` (rad/s) and peak-normalized intensity.

    ``method="fft"`` uses a chirp-z transform and needs a uniform grid.

    Raises
    ------
    SpectrumError
        If the grid reaches beyond the Nyquist frequency pi/dt.
    """
    omega = default_grid(record) if grid is None else np.asarray(grid, dtype=float)
    if omega.ndim != 1 or omega.size < 1:
        raise SpectrumError("grid must be a non-empty 1-d array")
    if np.max(np.abs(omega)) > record.nyquist * (1 + 1e-12):
        raise SpectrumError(f"grid reaches {np.max(np.abs(omega)):.4g} rad/s, beyond Nyquist {record.nyquist:.4g}")
    if method == "direct":
        re, im = kernels.spectrum_direct(float(record.t[0]), record.dt, record.b.real.copy(),
                                         record.b.imag.copy(), omega)
        amp = np.asarray(re) + 1j * np.asarray(im)
    elif method == "fft":
        if not _is_uniform(omega):
            raise SpectrumError("the fft path needs a uniform, increasing grid")
        amp = _amplitude_czt(record, omega)
    else:
        raise ValueError(f"unknown method {method!r}")
    inten = np.abs(amp) ** 2
    peak = inten.max()
    norm = inten / peak if peak > 0 else inten
    return Spectrum(omega, norm, amp)


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def linewidth_hwhm(spec: Spectrum) -> float:
    """Mean of the two half widths at half maximum, by linear interpolation.

    Raises
    ------
    SpectrumError
        ``"grid too narrow"`` if the maximum or a half-maximum crossing is not
        inside the grid; also if the maximum is not unique.
    """
    w = spec.omega
    y = spec.intensity
    k = int(np.argmax(y))
    top = y[k]
    if not top > 0:
        raise SpectrumError("spectrum is identically zero")
    if np.count_nonzero(y == top) > 1:
        raise SpectrumError("multiple equal maxima")
    if k == 0 or k == y.size - 1:
        raise SpectrumError("grid too narrow: maximum at grid edge")
    half = 0.5 * top
    left = np.nonzero(y[:k] <= half)[0]
    right = np.nonzero(y[k:] <= half)[0]
    if left.size == 0 or right.size == 0:
        raise SpectrumError("grid too narrow: half maximum not reached")
    i = left[-1]
    wl = _crossing(w[i], y[i], w[i + 1], y[i + 1], half)
    j = k + right[0]
    wr = _crossing(w[j - 1], y[j - 1], w[j], y[j], half)
    return 0.5 * ((w[k] - wl) + (wr - w[k]))


def _half_max_reached(spec: Spectrum) -> bool:
    y = spec.intensity
    k = int(np.argmax(y))
    return 0 < k < y.size - 1 and y[:k].min() <= 0.5 and y[k:].min() <= 0.5


def measure_linewidth(record: FieldRecord, method: str = "direct", points: int = DEFAULT_POINTS,
                      span: float = DEFAULT_SPAN, refine: int = REFINE) -> tuple[float, Spectrum]:
    """HWHM (rad/s) on the default grid, widened until the line fits, then refined.

    The coarse grid is centred on zero, or on the global peak of a full-band
    scan when that peak lies outside it. It is widened by 4x (up to Nyquist)
    while the half-maximum crossings fall outside it. The final grid has ``refine`` times finer
    spacing over a window of twice the coarse half-maximum span around the peak.
    """
    grid_method = "fft" if method == "fft" else "direct"
    # a full-band scan finds the global peak, so an off-centre line is not mistaken for a side lobe
    band = np.linspace(-record.nyquist, record.nyquist, max(record.t.size, points) | 1)
    peak = band[int(np.argmax(np.abs(_amplitude_czt(record, band))))]
    centre = peak if abs(peak) > 0.5 * span / record.duration else 0.0
    while True:
        grid = default_grid(record, points, span) + centre
        grid = grid[np.abs(grid) <= record.nyquist]
        spec = compute_spectrum(record, grid, grid_method)
        if _half_max_reached(spec):
            break
        if grid[-1] >= record.nyquist * (1 - 1e-12) and grid[0] <= -record.nyquist * (1 - 1e-12):
            raise SpectrumError("grid too narrow: line wider than Nyquist band")
        span *= 4.0
    coarse = linewidth_hwhm(spec)
    step = grid[1] - grid[0]
    centre = spec.omega[int(np.argmax(spec.intensity))]
    half_width = 2.0 * coarse + 2.0 * step
    m = int(math.ceil(half_width / (step / refine)))
    fine_grid = centre + (step / refine) * np.arange(-m, m + 1)
    fine_grid = fine_grid[np.abs(fine_grid) <= record.nyquist]
    fine = compute_spectrum(record, fine_grid, grid_method)
    return linewidth_hwhm(fine), fine


def lorentzian(omega, width):
    return 1.0 / (1.0 + (np.asarray(omega) / width) ** 2)

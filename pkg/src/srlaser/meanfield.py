"""Mean-field dynamics of the collective spin (and optionally the cavity field).

State vectors are complex numpy arrays ``[Sz, Sm]`` for the adiabatic
variants and ``[Sz, Sm, b]`` for the variant that keeps the cavity field.
``Sp`` is never stored; it is ``conj(Sm)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .integrator import (
    IntegrationError,
    IntegrationPolicy,
    OdeSystem,
    SteadyStateTimeout,
    StiffnessError,
    integrate,
)
from .params import PhysParams

VARIANTS = ("pulsed", "continuous", "continuous_spont", "nonadiabatic")

#: Default seed dipole for a pulsed burst, as a fraction of N.
PULSED_SEED_FRACTION = 1e-3


@dataclass(frozen=True)
class MeanFieldState:
    Sz: float
    Sm: complex
    b: complex | None = None

    @property
    def Sp(self) -> complex:
        return self.Sm.conjugate()

    def to_vector(self) -> np.ndarray:
        if self.b is None:
            return np.array([self.Sz, self.Sm], dtype=complex)
        return np.array([self.Sz, self.Sm, self.b], dtype=complex)

    @classmethod
    def from_vector(cls, y) -> "MeanFieldState":
        y = np.asarray(y, dtype=complex)
        b = complex(y[2]) if y.size > 2 else None
        return cls(float(y[0].real), complex(y[1]), b)


def _split(y):
    y = np.asarray(y, dtype=complex)
    return y[0].real, y[1]


def rhs_pulsed(y, params: PhysParams) -> np.ndarray:
    """dSz/dt = -4(g^2/k)|Sm|^2,  dSm/dt = 4(g^2/k) Sz Sm."""
    sz, sm = _split(y)
    a = 4.0 * params.purcell
    return np.array([-a * abs(sm) ** 2, a * sz * sm], dtype=complex)


def rhs_continuous(y, params: PhysParams) -> np.ndarray:
    """Pulsed dynamics plus deterministic atom refreshing at rate Gamma."""
    sz, sm = _split(y)
    a = 4.0 * params.purcell
    loss = params.Gamma_R
    return np.array(
        [-a * abs(sm) ** 2 + 0.5 * params.Gamma - loss * sz, (a * sz - loss) * sm],
        dtype=complex,
    )


def rhs_continuous_spont(y, params: PhysParams) -> np.ndarray:
    """Continuous loading plus free-space spontaneous emission at rate gamma."""
    sz, sm = _split(y)
    a = 4.0 * params.purcell
    loss = params.Gamma_R
    g = params.gamma
    dsz = -a * abs(sm) ** 2 - g * (sz + 0.5 * params.N) + 0.5 * params.Gamma - loss * sz
    dsm = (a * sz - 0.5 * g - loss) * sm
    return np.array([dsz, dsm], dtype=complex)


def rhs_nonadiabatic(y, params: PhysParams) -> np.ndarray:
    """Spin equations with the cavity field b kept as a dynamical variable.

    Loading and spontaneous-emission terms act on the atomic variables only.
    """
    y = np.asarray(y, dtype=complex)
    sz, sm, b = y[0].real, y[1], y[2]
    g = params.g
    loss = params.Gamma_R
    db = -0.5 * params.kappa * b - 1j * g * sm
    dsm = 2j * g * sz * b - (loss + 0.5 * params.gamma) * sm
    dsz = (1j * g * (sm * np.conj(b) - np.conj(sm) * b)).real
    dsz += 0.5 * params.Gamma - loss * sz - params.gamma * (sz + 0.5 * params.N)
    return np.array([dsz, dsm, db], dtype=complex)


_RHS = {
    "pulsed": rhs_pulsed,
    "continuous": rhs_continuous,
    "continuous_spont": rhs_continuous_spont,
    "nonadiabatic": rhs_nonadiabatic,
}


def effective_params(variant: str, params: PhysParams) -> PhysParams:
    """Zero the rates a variant does not include."""
    if variant == "pulsed":
        return params.replace(Gamma=0.0, gamma=0.0)
    if variant == "continuous":
        return params.replace(gamma=0.0)
    return params


def system(variant: str, params: PhysParams) -> OdeSystem:
    if variant not in _RHS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    f = _RHS[variant]
    p = effective_params(variant, params)
    dim = 3 if variant == "nonadiabatic" else 2
    return OdeSystem(lambda t, y: f(y, p), dim)


def adiabatic_field(Sm, params: PhysParams):
    """Cavity field slaved to the dipole: b = -2i (g/kappa) Sm."""
    return -2j * (params.g / params.kappa) * np.asarray(Sm)


def default_policy(variant: str, params: PhysParams, **kw) -> IntegrationPolicy:
    """rk45, rtol 1e-8, atol 1e-12, dt_max = 0.05 / (fastest rate in the equations).

    kappa only enters as a rate when the cavity field is integrated.
    """
    p = effective_params(variant, params)
    rates = [p.collective_rate, p.Gamma_R, p.gamma]
    if variant == "nonadiabatic":
        rates.append(p.kappa)
    fastest = max(rates)
    kw.setdefault("dt_max", 0.05 / fastest)
    kw.setdefault("rtol", 1e-8)
    kw.setdefault("atol", 1e-12)
    return IntegrationPolicy(method=kw.pop("method", "rk45"), **kw)


@dataclass(frozen=True)
class ScenarioSpec:
    """A mean-field run. ``sample_dt`` sets the uniform output grid."""

    variant: str
    duration: float
    Sz0: float
    Sm0: complex
    b0: complex = 0.0
    n_samples: int = 2000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    @property
    def sample_dt(self) -> float:
        return self.duration / self.n_samples


def pulsed_scenario(params: PhysParams, duration: float, seed_fraction: float = PULSED_SEED_FRACTION,
                    n_samples: int = 2000) -> ScenarioSpec:
    """Nearly inverted start on the Bloch sphere of radius N/2 with a small real dipole."""
    sm0 = seed_fraction * params.N
    sz0 = math.sqrt(max((0.5 * params.N) ** 2 - sm0 * sm0, 0.0))
    return ScenarioSpec("pulsed", duration, sz0, sm0, n_samples=n_samples)


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    Sz: np.ndarray
    Sm: np.ndarray
    b: np.ndarray
    variant: str
    params: PhysParams

    @property
    def dipole_sq(self) -> np.ndarray:
        return np.abs(self.Sm) ** 2

    @property
    def bloch_length_sq(self) -> np.ndarray:
        """|<Sx>|^2 + |<Sy>|^2 + <Sz>^2, conserved by the pulsed equations."""
        return np.abs(self.Sm) ** 2 + self.Sz**2

    def columns(self) -> dict[str, np.ndarray]:
        """Trajectory table in the CSV column order."""
        return {"t_s": self.t, "Sz": self.Sz, "ReSm": self.Sm.real, "ImSm": self.Sm.imag,
                "Reb": self.b.real, "Imb": self.b.imag}

    def field_record(self):
        from .spectrum import FieldRecord

        return FieldRecord(self.t, self.b)


def _run_kernel(variant, params, y0, t0, t1, n_samples, policy: IntegrationPolicy):
    p = effective_params(variant, params)
    sz0, sm0 = _split(y0)
    method = 0 if policy.method == "rk4" else 1
    T, Y, n_steps, n_rej, status = kernels.mf_adiabatic(
        float(sz0), float(sm0.real), float(sm0.imag), 4.0 * p.purcell, p.gamma, p.Gamma, p.N,
        float(t0), float(t1), int(n_samples), method, float(policy.dt or 0.0),
        policy.rtol, policy.atol, policy.dt_min, policy.dt_max, int(policy.max_steps),
    )
    if status == 1:
        raise StiffnessError(float(T[-1]), policy.dt_min)
    if status == 2:
        raise IntegrationError(f"max_steps exceeded after t={T[-1]:.6e}")
    return T, Y[:, 0], Y[:, 1] + 1j * Y[:, 2]


def run_scenario(spec: ScenarioSpec, params: PhysParams, policy: IntegrationPolicy | None = None,
                 t0: float = 0.0) -> MeanFieldTrajectory:
    """Integrate a scenario on a uniform grid of ``spec.n_samples`` intervals.

    Adiabatic variants run in the compiled kernel (or its Python twin);
    ``b`` is then reconstructed as -2i(g/kappa) Sm.
    """
    if spec.variant in ("continuous", "continuous_spont") and params.Gamma <= 0:
        raise ValueError(f"variant {spec.variant!r} needs Gamma > 0")
    policy = policy or default_policy(spec.variant, params)
    t1 = t0 + spec.duration
    if spec.variant == "nonadiabatic":
        step_bound = policy.dt if policy.method == "rk4" else policy.dt_max
        if not step_bound <= 0.1 / params.kappa * (1 + 1e-12):
            raise StiffnessError(t0, step_bound, f"step bound {step_bound:.3e} does not resolve 1/kappa")
        y0 = np.array([spec.Sz0, spec.Sm0, spec.b0], dtype=complex)
        traj = integrate(system("nonadiabatic", params), y0, t0, t1, policy.with_(sample_dt=spec.sample_dt))
        return MeanFieldTrajectory(traj.t, traj.y[:, 0].real, traj.y[:, 1], traj.y[:, 2], spec.variant, params)
    y0 = np.array([spec.Sz0, spec.Sm0], dtype=complex)
    t, sz, sm = _run_kernel(spec.variant, params, y0, t0, t1, spec.n_samples, policy)
    return MeanFieldTrajectory(t, sz, sm, adiabatic_field(sm, params), spec.variant, params)


def steady_state(params: PhysParams, y0=None, eps_rel: float = 1e-10, variant: str = "continuous_spont",
                 window: float | None = None, t_max: float | None = None,
                 policy: IntegrationPolicy | None = None) -> MeanFieldState:
    """Long-time limit of the continuous equations.

    Integrates (with the kernel) until ``max|rhs| <= eps_rel * N * rate`` has
    held for a window of ``10/Gamma_R``.
    """
    if params.Gamma <= 0:
        raise ValueError("steady_state needs Gamma > 0")
    f = _RHS[variant]
    p = effective_params(variant, params)
    window = window or 10.0 / params.Gamma_R
    t_max = t_max or 2000.0 / params.Gamma_R
    policy = policy or default_policy(variant, params, rtol=1e-11, atol=1e-12 * params.N)
    if y0 is None:
        y0 = np.array([0.5 * params.N, 0.03 * params.N], dtype=complex)
    y = np.asarray(y0, dtype=complex)
    scale = params.N * max(params.Gamma_R, params.gamma, params.collective_rate)
    eps = eps_rel * scale
    chunk = window / 10
    t = 0.0
    held = 0.0
    res = float(np.max(np.abs(f(y, p))))
    while True:
        if held >= window * (1 - 1e-12):
            return MeanFieldState.from_vector(y)
        if t >= t_max:
            raise SteadyStateTimeout(t, res)
        _, sz, sm = _run_kernel(variant, params, y, t, t + chunk, 1, policy)
        y = np.array([sz[-1], sm[-1]], dtype=complex)
        t += chunk
        res = float(np.max(np.abs(f(y, p))))
        held = held + chunk if res <= eps else 0.0


def burst_fwhm(traj: MeanFieldTrajectory) -> float:
    """Full width at half maximum of |Sm|^2, by linear interpolation."""
    d = traj.dipole_sq
    t = traj.t
    k = int(np.argmax(d))
    half = 0.5 * d[k]
    if k == 0 or k == d.size - 1:
        raise ValueError("burst peak at the edge of the record")
    left = np.nonzero(d[:k] < half)[0]
    right = np.nonzero(d[k:] < half)[0]
    if left.size == 0 or right.size == 0:
        raise ValueError("burst not fully contained in the record")
    i = left[-1]
    tl = t[i] + (half - d[i]) * (t[i + 1] - t[i]) / (d[i + 1] - d[i])
    j = k + right[0]
    tr = t[j - 1] + (half - d[j - 1]) * (t[j] - t[j - 1]) / (d[j] - d[j - 1])
    return float(tr - tl)


def pulsed_exact(t, params: PhysParams, Sz0: float, Sm0: complex):
    """Closed-form pulsed solution: Sz = -R tanh(a R (t - t_c)), |Sm| = R sech(...)."""
    a = 4.0 * params.purcell
    R = math.sqrt(Sz0 * Sz0 + abs(Sm0) ** 2)
    tc = math.atanh(Sz0 / R) / (a * R)
    x = a * R * (np.asarray(t) - tc)
    phase = Sm0 / abs(Sm0) if abs(Sm0) > 0 else 1.0
    return -R * np.tanh(x), phase * R / np.cosh(x)

"""Second-order cumulant equations for identical atoms coupled to one cavity mode.

The state is a flat complex vector in the order of :data:`FIELDS`. Moments
that are conjugates of stored ones (for instance <b s1+> = conj(<b+ s1->))
are reconstructed on the fly. Pair moments refer to two distinct atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import IntegrationPolicy, OdeSystem, Trajectory, integrate
from .params import PhysParams

FIELDS = ("sm", "sz", "b", "bdb", "b2", "szb", "bdsm", "bsm", "spsm", "spsp", "szsm", "szsz")
IDX = {name: i for i, name in enumerate(FIELDS)}


def cumulant_factor3(x1x2, x2x3, x3x1, x1, x2, x3):
    """<X1 X2 X3> with the third-order cumulant set to zero."""
    return x1x2 * x3 + x2x3 * x1 + x3x1 * x2 - 2.0 * x1 * x2 * x3


@dataclass(frozen=True)
class CumulantState:
    sm: complex = 0.0
    sz: complex = -0.5
    b: complex = 0.0
    bdb: complex = 0.0
    b2: complex = 0.0
    szb: complex = 0.0
    bdsm: complex = 0.0
    bsm: complex = 0.0
    spsm: complex = 0.0
    spsp: complex = 0.0
    szsm: complex = 0.0
    szsz: complex = 0.25

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FIELDS], dtype=complex)

    @classmethod
    def from_vector(cls, y) -> "CumulantState":
        y = np.asarray(y, dtype=complex)
        return cls(*(complex(v) for v in y))

    @classmethod
    def product_state(cls, sz: float, sm: complex, b: complex = 0.0) -> "CumulantState":
        """Uncorrelated atoms (pair moments factorize) and a coherent cavity field."""
        sm = complex(sm)
        b = complex(b)
        return cls(
            sm=sm, sz=sz, b=b, bdb=abs(b) ** 2, b2=b * b, szb=sz * b,
            bdsm=b.conjugate() * sm, bsm=b * sm, spsm=abs(sm) ** 2,
            spsp=sm.conjugate() ** 2, szsm=sz * sm, szsz=sz * sz,
        )


def rhs_cumulant(y, params: PhysParams) -> np.ndarray:
    """Time derivative of the 12 moments; loading adds fresh excited, uncorrelated atoms.

    Spontaneous emission is not part of this system; ``params.gamma`` is ignored.
    """
    N = params.N
    if N < 2:
        raise ValueError("the cumulant system needs N >= 2")
    g = params.g
    k = params.kappa
    G = params.Gamma
    gr = params.Gamma_R
    pair = 2.0 * G / (N - 1.0)

    sm, sz, b, bdb, b2, szb, bdsm, bsm, spsm, spsp, szsm, szsz = (complex(v) for v in y)
    sp = sm.conjugate()
    bd = b.conjugate()
    spb = bdsm.conjugate()       # <s+ b>
    bdsz = szb.conjugate()       # <b+ sz>
    smsm = spsp.conjugate()      # <s1- s2->
    szsp = szsm.conjugate()      # <s1z s2+>
    bdsp = bsm.conjugate()       # <b+ s+>
    smsp = spsm.conjugate()      # <s1- s2+>

    d_sm = 2j * g * szb - gr * sm
    d_sz = 1j * g * (bdsm - spb) - gr * sz + 0.5 * gr
    d_b = -0.5 * k * b - 1j * g * N * sm
    d_bdb = -k * bdb - 1j * g * N * (bdsm - spb)
    d_b2 = -k * b2 - 2j * g * N * bsm
    d_szb = (
        -gr * szb + 0.5 * gr * b - 0.5 * k * szb - 1j * g * (N - 1.0) * szsm + 0.5j * g * sm
        + 1j * g * (bd * bsm + b * bdsm + sm * bdb - 2.0 * b * bd * sm - 2.0 * spb * b - sp * b2 + 2.0 * b * b * sp)
    )
    d_bdsm = (
        -gr * bdsm - 0.5 * k * bdsm + 1j * g * (N - 1.0) * smsp + 1j * g * (sz + 0.5)
        + 2j * g * (bdb * sz + szb * bd + bdsz * b - 2.0 * b * bd * sz)
    )
    d_bsm = (
        -gr * bsm - 0.5 * k * bsm - 1j * g * (N - 1.0) * smsm
        + 2j * g * (b2 * sz + 2.0 * szb * b - 2.0 * b * b * sz)
    )
    t1 = bdsm * sz + bdsz * sm + szsm * bd - 2.0 * bd * sm * sz
    t2 = szb * sp + spb * sz + szsp * b - 2.0 * b * sz * sp
    d_spsm = -pair * spsm - 2j * g * (t1 - t2)
    d_spsp = -pair * spsp - 2j * g * (
        bdsp * sz + bdsz * sp + szsp * bd - 2.0 * bd * sp * sz
        + bdsz * sp + bdsp * sz + szsp * bd - 2.0 * bd * sz * sp
    )
    d_szsm = -pair * szsm + 0.5 * G / (N - 1.0) * sm - 1j * g * (
        spsm * b + spb * sm + bsm * sp - 2.0 * sp * sm * b
        - smsm * bd - bdsm * sm - bdsm * sm + 2.0 * sm * sm * bd
        - 2.0 * szsz * b - 2.0 * szb * sz - 2.0 * szb * sz + 4.0 * sz * sz * b
    )
    d_szsz = -pair * szsz + G / (N - 1.0) * sz - 1j * g * (
        szsp * b + spb * sz + szb * sp - 2.0 * sp * sz * b
        - szsm * bd - bdsm * sz - bdsz * sm + 2.0 * sm * sz * bd
        + szsp * b + szb * sp + spb * sz - 2.0 * sz * sp * b
        - szsm * bd - bdsz * sm - bdsm * sz + 2.0 * sz * sm * bd
    )
    return np.array(
        [d_sm, d_sz, d_b, d_bdb, d_b2, d_szb, d_bdsm, d_bsm, d_spsm, d_spsp, d_szsm, d_szsz], dtype=complex
    )


def system(params: PhysParams) -> OdeSystem:
    if params.N < 2:
        raise ValueError("the cumulant system needs N >= 2")
    return OdeSystem(lambda t, y: rhs_cumulant(y, params), len(FIELDS))


def default_policy(params: PhysParams, **kw) -> IntegrationPolicy:
    """rk45 with dt_max = 0.05/kappa: the cavity field is always resolved here."""
    kw.setdefault("dt_max", 0.05 / params.kappa)
    kw.setdefault("rtol", 1e-8)
    kw.setdefault("atol", 1e-12)
    return IntegrationPolicy(method="rk45", **kw)


# derived observables ----------------------------------------------------------


def dipole_sq(N: float, spsm, spsp=0.0) -> float:
    """<Sx^2 + Sy^2> = N/2 + N(N-1) Re<s1+ s2->; ``spsp`` does not enter the sum."""
    return 0.5 * N + N * (N - 1.0) * float(np.real(spsm))


def sx_sq(N: float, spsm, spsp=0.0) -> float:
    """<Sx^2> = N/4 + N(N-1)/2 Re(<s1+ s2-> + <s1+ s2+>)."""
    return 0.25 * N + 0.5 * N * (N - 1.0) * float(np.real(spsm + spsp))


@dataclass(frozen=True)
class DerivedObservables:
    Sz_coll: float
    dipole_sq: float
    Sx_sq: float
    Nnu: float
    R: float
    sigma: float


def derived(state: CumulantState, params: PhysParams) -> DerivedObservables:
    N = params.N
    nnu = float(np.real(state.bdb))
    return DerivedObservables(
        Sz_coll=N * float(np.real(state.sz)),
        dipole_sq=dipole_sq(N, state.spsm),
        Sx_sq=sx_sq(N, state.spsm, state.spsp),
        Nnu=nnu,
        R=params.kappa * nnu,
        sigma=float(np.real(state.spsm)),
    )


@dataclass
class CumulantTrajectory:
    t: np.ndarray
    y: np.ndarray
    params: PhysParams

    def component(self, name: str) -> np.ndarray:
        return self.y[:, IDX[name]]

    @property
    def final(self) -> CumulantState:
        return CumulantState.from_vector(self.y[-1])

    @property
    def dipole_sq(self) -> np.ndarray:
        N = self.params.N
        return 0.5 * N + N * (N - 1.0) * self.component("spsm").real

    @property
    def Sz_coll(self) -> np.ndarray:
        return self.params.N * self.component("sz").real

    @property
    def Nnu(self) -> np.ndarray:
        return self.component("bdb").real


def run_cumulant(y0, params: PhysParams, duration: float, policy: IntegrationPolicy | None = None,
                 n_samples: int = 1000) -> CumulantTrajectory:
    """Integrate the moment equations for ``duration`` seconds, sampled uniformly."""
    if isinstance(y0, CumulantState):
        y0 = y0.to_vector()
    policy = policy or default_policy(params)
    if policy.sample_dt is None:
        policy = policy.with_(sample_dt=duration / n_samples)
    traj: Trajectory = integrate(system(params), y0, 0.0, duration, policy)
    return CumulantTrajectory(traj.t, traj.y, params)


# closed-form steady state -------------------------------------------------------


@dataclass(frozen=True)
class CumulantSteadyState:
    state: CumulantState
    below_threshold: bool

    @property
    def sz(self) -> float:
        return float(self.state.sz.real)

    @property
    def sigma(self) -> float:
        return float(self.state.spsm.real)

    def __getattr__(self, name):
        if name in FIELDS:
            return getattr(self.state, name)
        raise AttributeError(name)


def closed_form_sz(params: PhysParams) -> float:
    """Single-atom inversion <s^z> in the steady state."""
    N = params.N
    Cp = params.C_prime
    r = params.r
    den = 8.0 * Cp * (1.0 + N * (N + 2.0 * N * r - 2.0))
    lead = 1.0 + 2.0 * r + 2.0 * Cp * (1.0 + N * N * (1.0 + 2.0 * r))
    disc = (2.0 * Cp + (1.0 + 2.0 * Cp * N * N) * (1.0 + 2.0 * r)) ** 2 + 8.0 * Cp * (
        -1.0 + 4.0 * Cp * N - 2.0 * r
    ) * (1.0 + N * (N + 2.0 * N * r - 2.0))
    return (lead - math.sqrt(disc)) / den


def closed_form_sigma(params: PhysParams, sz: float) -> float:
    N = params.N
    Cp = params.C_prime
    r = params.r
    num = 1.0 - 4.0 * Cp * N + 2.0 * r - 2.0 * (1.0 + 2.0 * r + 4.0 * Cp * N * (1.0 + N * r)) * sz
    num += 16.0 * Cp * N * N * r * sz * sz
    return num / (8.0 * Cp * (N - 1.0) * N)


def steady_state_closed_form(params: PhysParams) -> CumulantSteadyState:
    """Phase-invariant steady state (all coherences zero).

    Below the collective threshold the same formulas are returned with
    ``below_threshold`` set; they are not clamped.
    """
    if params.N < 2:
        raise ValueError("the cumulant system needs N >= 2")
    if params.Gamma <= 0:
        raise ValueError("the cumulant steady state needs Gamma > 0")
    N = params.N
    sz = closed_form_sz(params)
    sigma = closed_form_sigma(params, sz)
    szsz = (sz + 2.0 * (N - 1.0) * sz * sz) / (2.0 * N)
    bdb = params.Gamma * (1.0 - 2.0 * sz) / (2.0 * params.kappa)
    bdsm = params.Gamma_R * (sz - 0.5) / (2j * params.g)
    state = CumulantState(sm=0.0, sz=sz, b=0.0, bdb=bdb, b2=0.0, szb=0.0, bdsm=bdsm, bsm=0.0,
                          spsm=sigma, spsp=0.0, szsm=0.0, szsz=szsz)
    return CumulantSteadyState(state, params.N2C_prime <= 0.5)


def state_scale(params: PhysParams) -> float:
    """Natural magnitude of the residual: rate times the largest moment."""
    return max(1.0, params.Gamma_R, params.kappa) * max(1.0, params.Gamma / params.kappa, params.N)


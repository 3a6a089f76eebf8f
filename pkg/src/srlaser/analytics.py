"""Closed-form steady states, thresholds, output power and linewidths.

Every formula is written in terms of rates (rad/s). The limit gamma = 0
(1/C = 0) is handled explicitly rather than by passing a tiny gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import PhysParams

#: Relative distance to N^2 C' = 1/2 below which results are flagged.
THRESHOLD_GUARD = 1e-6


class BelowThresholdError(ValueError):
    """Collective threshold N^2 C' > 1/2 not met."""


def _inv_C(p: PhysParams) -> float:
    return p.gamma / p.purcell


def _inv_C_prime(p: PhysParams) -> float:
    return p.Gamma / p.purcell


def _inv_NC_prime(p: PhysParams) -> float:
    return p.Gamma_R / p.purcell


@dataclass(frozen=True)
class SteadyStateMF:
    """Both families of mean-field fixed points.

    ``Sz`` and ``Splus_sq`` are the lasing-branch values (``Splus_sq`` may be
    negative, which means that branch does not exist). ``Sz_trivial`` is the
    non-lasing fixed point with zero dipole.
    """

    Sz: float
    Splus_sq: float
    Sz_trivial: float
    superradiant: bool

    @property
    def Sz_physical(self) -> float:
        return self.Sz if self.superradiant else self.Sz_trivial

    @property
    def Splus_sq_physical(self) -> float:
        return self.Splus_sq if self.superradiant else 0.0


def mf_steady_state(params: PhysParams) -> SteadyStateMF:
    """Fixed points of the continuous mean-field equations with free-space decay."""
    p = params
    ic = _inv_C(p)
    icp = _inv_C_prime(p)
    incp = _inv_NC_prime(p)
    sz = ic / 8.0 + incp / 4.0
    splus = icp / 8.0 - p.N * ic / 8.0 - (incp / 4.0 + ic / 4.0) * (ic / 8.0 + incp / 4.0)
    if p.Gamma_R + p.gamma > 0:
        triv = 0.5 * p.N * (p.Gamma_R - p.gamma) / (p.Gamma_R + p.gamma)
    else:
        triv = 0.5 * p.N
    return SteadyStateMF(Sz=sz, Splus_sq=splus, Sz_trivial=triv, superradiant=splus > 0)


def critical_inverse_C(N: float, inv_NC_prime: float) -> float:
    """Right-hand side of the lasing condition 1/C < (...), with u = 1/(N C')."""
    u = inv_NC_prime
    # rationalized form of (sqrt(u^2 + 40 N u + 16 N^2) - 3u - 4N) / 2, free of cancellation
    return 4.0 * u * (2.0 * N - u) / (math.sqrt(u * u + 40.0 * N * u + 16.0 * N * N) + 3.0 * u + 4.0 * N)


def threshold_boundary(params: PhysParams) -> float:
    """Critical spontaneous emission rate gamma_crit (rad/s).

    Lasing (positive |S+|^2) holds for gamma < gamma_crit. ``params.gamma``
    is ignored.

    Raises
    ------
    BelowThresholdError
        If N^2 C' <= 1/2, where no positive gamma_crit exists.
    """
    if params.Gamma <= 0:
        raise ValueError("threshold_boundary needs Gamma > 0")
    y = params.N2C_prime
    if y <= 0.5:
        raise BelowThresholdError(f"N^2 C' = {y:.6g} <= 1/2: no continuous lasing for any gamma")
    return params.purcell * critical_inverse_C(params.N, _inv_NC_prime(params))


def pulsed_limit_margin(N2C_prime: float) -> float:
    """Lower bound on Delta N * C - 1/4 at the lasing threshold, as a function of N^2 C'."""
    y = N2C_prime
    # 1 / (sqrt(1 + 40 y + 16 y^2) - 3 - 4y), rationalized
    return (math.sqrt(1.0 + 40.0 * y + 16.0 * y * y) + 3.0 + 4.0 * y) / (16.0 * y - 8.0)


def inversion_times_C(params: PhysParams) -> float:
    """Delta N * C with Delta N = 2 <S^z> on the lasing branch."""
    return 0.25 + params.C / (2.0 * params.N * params.C_prime) if params.gamma > 0 else math.inf


@dataclass(frozen=True)
class PowerMetrics:
    Splus_sq: float
    Nnu_over_N: float
    Nnu: float
    R: float


def power_metrics(params: PhysParams) -> PowerMetrics:
    """Dipole, intracavity photon number and output photon rate on the lasing branch."""
    p = params
    g2 = p.g * p.g
    k = p.kappa
    gam = p.gamma
    gr = p.Gamma_R
    splus = (k / (8.0 * g2)) * (
        (gr - gam) * p.N - gam * gam * k / (4.0 * g2) - k * gr * gr / (2.0 * g2) - 3.0 * gam * k * gr / (4.0 * g2)
    )
    nnu_n = (p.N * (gr - gam) / k - gam * gam / (4.0 * g2) - gr * gr / (2.0 * g2) - 3.0 * gam * gr / (4.0 * g2)) / (
        2.0 * p.N
    )
    nnu = nnu_n * p.N
    return PowerMetrics(Splus_sq=splus, Nnu_over_N=nnu_n, Nnu=nnu, R=k * nnu)


def _near_threshold(y: float) -> bool:
    return abs(y - 0.5) < THRESHOLD_GUARD * 0.5


@dataclass(frozen=True)
class MFLinewidth:
    D: float
    domega: float
    D_largeN: float
    domega_largeN: float
    near_threshold: bool


def linewidth_mf(params: PhysParams, Sx_sq: float | None = None) -> MFLinewidth:
    """Phase diffusion D = Gamma / (2 |S_x|^2) and its large-N form.

    |S_x|^2 defaults to the mean-field lasing value. HWHM = D / 2.

    Raises
    ------
    BelowThresholdError
        If N^2 C' <= 1/2 (the large-N form diverges there).
    """
    y = params.N2C_prime
    if params.Gamma <= 0 or y <= 0.5:
        raise BelowThresholdError(f"N^2 C' = {y:.6g} <= 1/2: mean-field linewidth diverges")
    if Sx_sq is None:
        Sx_sq = mf_steady_state(params).Splus_sq
    D = params.Gamma / (2.0 * Sx_sq) if Sx_sq > 0 else math.inf
    D_large = 4.0 * params.purcell * y / (y - 0.5)
    return MFLinewidth(D, 0.5 * D, D_large, 0.5 * D_large, _near_threshold(y))


def linewidth_heuristic(L: float, sigma: float, Gamma: float) -> float:
    """Phase drift from atom insertion, D'' = Gamma (1 - sigma) / (2 L^2)."""
    if not L > 0:
        raise ValueError("L must be > 0")
    return Gamma * (1.0 - sigma) / (2.0 * L * L)


def inverse_tau_c(N: float, Gamma_R: float, sz: float, sigma: float) -> float:
    """Inverse correlation time of S_x from single-atom and pair moments."""
    sx2 = N / 4.0 + 0.5 * N * (N - 1.0) * sigma
    return Gamma_R / sx2 * (sx2 + 0.5 * N * N * sz * (sz - 0.5))


@dataclass(frozen=True)
class CumulantLinewidth:
    tau_c: float
    domega: float
    domega_largeN: float
    sz: float
    sigma: float
    L_sq: float
    below_threshold: bool


def linewidth_cumulant(params: PhysParams) -> CumulantLinewidth:
    """HWHM 1/tau_c from the closed-form cumulant steady state.

    ``domega_largeN`` is Gamma (1 - 4 sigma) / (2 L^2) with L^2 the dipole length squared.
    """
    from .cumulant import steady_state_closed_form, dipole_sq

    ss = steady_state_closed_form(params)
    N = params.N
    inv = inverse_tau_c(N, params.Gamma_R, ss.sz, ss.sigma)
    L2 = dipole_sq(N, ss.sigma)
    large = params.Gamma * (1.0 - 4.0 * ss.sigma) / (2.0 * L2)
    tau = 1.0 / inv if inv > 0 else math.inf
    return CumulantLinewidth(tau, inv, large, ss.sz, ss.sigma, L2, ss.below_threshold)


@dataclass(frozen=True)
class LinewidthReport:
    D_mf: float
    domega_mf: float
    D_mf_largeN: float
    tau_c: float
    domega_cumulant: float
    domega_largeN: float
    domega_min: float
    D_heuristic: float
    flagged: bool


def linewidth_report(params: PhysParams) -> LinewidthReport:
    """All linewidth estimates side by side (rad/s)."""
    mf = linewidth_mf(params)
    cu = linewidth_cumulant(params)
    heur = linewidth_heuristic(math.sqrt(cu.L_sq), cu.sigma, params.Gamma)
    return LinewidthReport(
        D_mf=mf.D,
        domega_mf=mf.domega,
        D_mf_largeN=mf.D_largeN,
        tau_c=cu.tau_c,
        domega_cumulant=cu.domega,
        domega_largeN=cu.domega_largeN,
        domega_min=4.0 * params.purcell,
        D_heuristic=heur,
        flagged=mf.near_threshold or cu.below_threshold,
    )


def sigma_large_N(params: PhysParams) -> float:
    """Leading 1/N behaviour of the pair correlator <s1+ s2->."""
    p = params
    return p.kappa * (p.Gamma_R / (p.g * p.g) - 4.0 / (2.0 * p.Gamma_R + p.kappa)) / (8.0 * p.N)


def dipole_ratio_expansion(params: PhysParams) -> float:
    """<Sx^2 + Sy^2> / |S+_MF|^2 to first order in 1/N."""
    p = params
    g2 = p.g * p.g
    k = p.kappa
    gr = p.Gamma_R
    lead = (8.0 * g2 + 2.0 * gr * k + k * k) / (2.0 * gr * k + k * k)
    first = (4.0 * g2 + gr * k) * (4.0 * g2 - gr * (2.0 * gr + k)) / (2.0 * g2 * gr * (2.0 * gr + k))
    return lead + first / p.N

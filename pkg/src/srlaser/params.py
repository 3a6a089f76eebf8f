"""Physical parameters, unit conventions and regime checks.

All rates are stored as angular rates in s^-1 (rad/s). External interfaces
(config files, CLI flags, CSV columns ending in ``_hz``) use ordinary
frequencies nu = omega / 2pi, which is how cavity-QED parameters are usually
quoted ("g/2pi = 3 kHz").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

TWO_PI = 2.0 * math.pi

#: Margin above which a separation of time scales is treated as "much larger".
REGIME_FACTOR = 10.0


class ParameterError(ValueError):
    """Invalid physical parameter; ``field`` names the offending input."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _check(name: str, value: float, *, positive: bool = False, minimum: float | None = None) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(name, f"not a number ({value!r})") from None
    if not math.isfinite(value):
        raise ParameterError(name, "must be finite")
    if positive and value <= 0.0:
        raise ParameterError(name, f"must be > 0 (got {value})")
    if minimum is not None and value < minimum:
        raise ParameterError(name, f"must be >= {minimum} (got {value})")
    return value


@dataclass(frozen=True)
class PhysParams:
    """Rates of the atom-beam superradiant laser, all in rad/s.

    Parameters
    ----------
    g : float
        Single-atom coupling to the cavity mode.
    kappa : float
        Cavity field leakage rate.
    gamma : float
        Spontaneous emission rate into free space (may be 0).
    Gamma : float
        Atom loading rate (may be 0 for pulsed operation).
    N : float
        Steady-state intracavity atom number; real valued on purpose.
    """

    g: float
    kappa: float
    gamma: float = 0.0
    Gamma: float = 0.0
    N: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g", _check("g", self.g, positive=True))
        object.__setattr__(self, "kappa", _check("kappa", self.kappa, positive=True))
        object.__setattr__(self, "gamma", _check("gamma", self.gamma, minimum=0.0))
        object.__setattr__(self, "Gamma", _check("Gamma", self.Gamma, minimum=0.0))
        object.__setattr__(self, "N", _check("N", self.N, minimum=1.0))

    @classmethod
    def from_hz(
        cls,
        g_hz: float,
        kappa_hz: float,
        N: float,
        gamma_hz: float = 0.0,
        Gamma_hz: float | None = None,
        gammaR_hz: float | None = None,
    ) -> "PhysParams":
        """Build from ordinary frequencies; give at most one of ``Gamma_hz`` / ``gammaR_hz``."""
        if Gamma_hz is not None and gammaR_hz is not None:
            raise ParameterError("Gamma_hz", "give either Gamma_hz or gammaR_hz, not both")
        N = _check("N", N, minimum=1.0)
        if gammaR_hz is not None:
            Gamma = TWO_PI * _check("gammaR_hz", gammaR_hz, minimum=0.0) * N
        elif Gamma_hz is not None:
            Gamma = TWO_PI * _check("Gamma_hz", Gamma_hz, minimum=0.0)
        else:
            Gamma = 0.0
        return cls(
            g=TWO_PI * _check("g_hz", g_hz, positive=True),
            kappa=TWO_PI * _check("kappa_hz", kappa_hz, positive=True),
            gamma=TWO_PI * _check("gamma_hz", gamma_hz, minimum=0.0),
            Gamma=Gamma,
            N=N,
        )

    def replace(self, **changes) -> "PhysParams":
        return replace(self, **changes)

    # derived groups -----------------------------------------------------

    @property
    def Gamma_R(self) -> float:
        """Refreshing rate (inverse transit time) Gamma / N."""
        return self.Gamma / self.N

    @property
    def purcell(self) -> float:
        """Single-atom cavity-enhanced emission rate g^2/kappa."""
        return self.g * self.g / self.kappa

    @property
    def collective_rate(self) -> float:
        """Collective emission rate N g^2 / kappa."""
        return self.N * self.purcell

    @property
    def C(self) -> float:
        """Cooperativity g^2/(kappa gamma); ``inf`` when gamma = 0."""
        return self.purcell / self.gamma if self.gamma > 0 else math.inf

    @property
    def C_prime(self) -> float:
        """Loading-rate cooperativity g^2/(kappa Gamma); ``inf`` when Gamma = 0."""
        return self.purcell / self.Gamma if self.Gamma > 0 else math.inf

    @property
    def r(self) -> float:
        return self.Gamma_R / self.kappa

    @property
    def N2C_prime(self) -> float:
        """N^2 C' = N g^2/(kappa Gamma_R); continuous superradiance needs > 1/2."""
        return self.N * self.N * self.C_prime

    def as_hz(self) -> dict[str, float]:
        """Parameters in the external (Hz) convention, e.g. for CSV headers."""
        return {
            "g_hz": self.g / TWO_PI,
            "kappa_hz": self.kappa / TWO_PI,
            "gamma_hz": self.gamma / TWO_PI,
            "Gamma_hz": self.Gamma / TWO_PI,
            "N": self.N,
        }


@dataclass(frozen=True)
class RegimeReport:
    params: PhysParams
    adiabatic_margin: float
    adiabatic_ok: bool
    ergodic_margin: float
    ergodic_ok: bool
    superradiant: bool
    derived: dict = field(default_factory=dict)


def validate(params: PhysParams) -> RegimeReport:
    """Derived dimensionless groups and validity flags for ``params``.

    ``adiabatic_margin`` is kappa / (N g^2/kappa); the flag requires a factor
    10. ``ergodic_margin`` is (N g^2/kappa)/Gamma_R; the exit-atom assumption
    holds in either limit (margin >= 10 or <= 1/10).
    """
    from .analytics import mf_steady_state

    if not isinstance(params, PhysParams):
        raise TypeError("validate expects a PhysParams instance")
    adiabatic_margin = params.kappa / params.collective_rate
    if params.Gamma_R > 0:
        ergodic_margin = params.collective_rate / params.Gamma_R
    else:
        ergodic_margin = math.inf
    ergodic_ok = ergodic_margin >= REGIME_FACTOR or ergodic_margin <= 1.0 / REGIME_FACTOR
    superradiant = params.Gamma > 0 and mf_steady_state(params).superradiant
    derived = {
        "Gamma_R": params.Gamma_R,
        "C": params.C,
        "C_prime": params.C_prime,
        "r": params.r,
        "N2C_prime": params.N2C_prime,
        "collective_rate": params.collective_rate,
    }
    return RegimeReport(
        params=params,
        adiabatic_margin=adiabatic_margin,
        adiabatic_ok=adiabatic_margin >= REGIME_FACTOR,
        ergodic_margin=ergodic_margin,
        ergodic_ok=ergodic_ok,
        superradiant=superradiant,
        derived=derived,
    )


def from_experiment(
    v: float,
    w0: float,
    N: float,
    g_hz: float,
    kappa_hz: float,
    gamma_hz: float = 0.0,
) -> PhysParams:
    """Parameters for an atomic beam of transverse velocity ``v`` (m/s)
    crossing a mode of waist ``w0`` (m).

    The inverse transit time v/w0 is already a rate in s^-1 and is used as
    Gamma_R without a 2pi factor.
    """
    v = _check("v", v, positive=True)
    w0 = _check("w0", w0, positive=True)
    N = _check("N", N, minimum=1.0)
    base = PhysParams.from_hz(g_hz=g_hz, kappa_hz=kappa_hz, gamma_hz=gamma_hz, N=N)
    return base.replace(Gamma=N * v / w0)


# config files ---------------------------------------------------------------

PARAM_KEYS = ("g_hz", "kappa_hz", "gamma_hz", "gammaR_hz", "Gamma_hz", "N")


def read_config(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` (or ``key: value``) UTF-8 file. ``#`` starts a comment."""
    entries: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise ParameterError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        entries[key.strip()] = value.strip()
    return entries


def params_from_mapping(values: Mapping[str, object]) -> PhysParams:
    """PhysParams from Hz-convention keys; exactly one of gammaR_hz / Gamma_hz."""
    for key in ("g_hz", "kappa_hz", "N"):
        if values.get(key) is None:
            raise ParameterError(key, "missing")
    has_rate = [k for k in ("gammaR_hz", "Gamma_hz") if values.get(k) is not None]
    if len(has_rate) != 1:
        raise ParameterError("Gamma_hz", "exactly one of gammaR_hz or Gamma_hz is required")
    return PhysParams.from_hz(
        g_hz=values["g_hz"],
        kappa_hz=values["kappa_hz"],
        N=values["N"],
        gamma_hz=values.get("gamma_hz") or 0.0,
        Gamma_hz=values.get("Gamma_hz"),
        gammaR_hz=values.get("gammaR_hz"),
    )

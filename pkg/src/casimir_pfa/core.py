"""Dimensionless configuration records and unit conversion.

Everything downstream works in the two ratios ``x = L/R`` and
``tau = L/lambda_T``.  Energies are reported in units of ``k_B T``
(``per_kBT``) or ``hbar c / L`` (``per_hbar_c_over_L``); since
``k_B T = tau * hbar c / L`` the two differ by a factor ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

# CODATA 2018, 12 significant digits
HBAR = 1.05457181765e-34  # J s
C_LIGHT = 299792458.0  # m / s
K_BOLTZMANN = 1.380649e-23  # J / K

#: Aspect ratios below this are considered inside the asymptotic regime.
ASYMPTOTIC_X_BOUND = 0.2


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (names the offending field)."""


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach the requested accuracy."""


class Unit(str, Enum):
    per_kBT = "per_kBT"
    per_hbar_c_over_L = "per_hbar_c_over_L"


@dataclass(frozen=True)
class Geometry:
    """Plane-sphere geometry: closest distance ``L`` and sphere radius ``R``."""

    L: float
    R: float

    @property
    def x(self) -> float:
        return self.L / self.R

    @property
    def asymptotic(self) -> bool:
        return self.x < ASYMPTOTIC_X_BOUND


@dataclass(frozen=True)
class Thermal:
    """Temperature data.  ``T`` is ``None`` when only ``tau`` was given."""

    tau: float
    lambda_T: float
    T: float | None = None


@dataclass(frozen=True)
class SpectralPoint:
    """Matsubara index ``n`` at reduced temperature ``tau`` and round trip ``r``.

    ``q = 4 pi tau n`` is the reduced frequency ``2 L xi_n / c`` and
    ``u = q r`` the exponent appearing in the round-trip traces.
    """

    n: int
    tau: float
    r: int = 1

    @classmethod
    def from_u(cls, u: float, r: int = 1, n: int = 1) -> "SpectralPoint":
        if n == 0:
            if u != 0:
                raise ConfigurationError("n: u must vanish for n = 0")
            return cls(0, 0.0, r)
        return cls(n, u / (4 * math.pi * n * r), r)

    @property
    def q(self) -> float:
        return 4 * math.pi * self.tau * self.n

    @property
    def u(self) -> float:
        return self.q * self.r


def _check_length(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: not a number ({value!r})") from None
    if not math.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name}: must be finite and positive, got {value!r}")
    return value


def make_config(L: float, R: float, T: float | None = None, *, tau: float | None = None):
    """Build ``(Geometry, Thermal)`` from lengths and a temperature.

    Either ``T`` (kelvin, with ``L`` and ``R`` in meters) or the reduced
    temperature ``tau`` may be passed, not both.  Passing neither means
    zero temperature.
    """
    L = _check_length("L", L)
    R = _check_length("R", R)
    if T is not None and tau is not None:
        raise ConfigurationError("T/tau: pass only one of them")
    if tau is not None:
        tau = float(tau)
        if not math.isfinite(tau) or tau < 0:
            raise ConfigurationError(f"tau: must be finite and >= 0, got {tau!r}")
        lam = L / tau if tau > 0 else math.inf
        return Geometry(L, R), Thermal(tau=tau, lambda_T=lam)
    T = 0.0 if T is None else float(T)
    if not math.isfinite(T) or T < 0:
        raise ConfigurationError(f"T: must be finite and >= 0, got {T!r}")
    lam = HBAR * C_LIGHT / (K_BOLTZMANN * T) if T > 0 else math.inf
    return Geometry(L, R), Thermal(tau=L / lam, lambda_T=lam, T=T)


def convert_energy(E: float, from_unit: Unit | str, to_unit: Unit | str, tau: float) -> float:
    """Convert between ``k_B T`` and ``hbar c / L`` units (``k_B T = tau hbar c / L``)."""
    from_unit, to_unit = Unit(from_unit), Unit(to_unit)
    if from_unit is to_unit:
        return E
    if from_unit is Unit.per_kBT:
        return E * tau
    if tau == 0:
        raise ZeroDivisionError("cannot express energies in units of k_B T at tau = 0")
    return E / tau


@dataclass(frozen=True)
class EnergyBreakdown:
    """Additive ledger of free-energy pieces in a single unit."""

    pfa: float = 0.0
    d_te: float = 0.0
    d_tm: float = 0.0
    go: float = 0.0
    zero_freq: float = 0.0
    unit: Unit = Unit.per_kBT

    def total(self) -> float:
        return self.pfa + self.d_te + self.d_tm + self.go + self.zero_freq

    def to(self, unit: Unit | str, tau: float) -> "EnergyBreakdown":
        unit = Unit(unit)

        def conv(v):
            return convert_energy(v, self.unit, unit, tau)

        return EnergyBreakdown(conv(self.pfa), conv(self.d_te), conv(self.d_tm),
                               conv(self.go), conv(self.zero_freq), unit)

"""Per-Matsubara-frequency traces and free energies beyond PFA (``n >= 1``).

Conventions
-----------
Lengths are measured in units of ``L`` and frequencies enter only
through ``q = 2 L xi_n / c = 4 pi tau n`` and ``u = q r``.  Free energies
returned here are in units of ``k_B T`` for a single Matsubara term
(no primed-sum weight).  The geometric-optics piece is reported
summed over both polarizations (``go_total``); the two polarizations
contribute equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .core import DomainError, NumericError, SpectralPoint, Unit
from .specfun import exp_int_e1, trilog_exp

#: Fresnel coefficients of a perfect reflector.
R_TM = 1.0
R_TE = -1.0

QUAD_RTOL = 1e-12
_TAIL_TOL = 1e-14
_R_CAP = 10 ** 6


class TraceNTLO(NamedTuple):
    d_te: float
    d_tm: float
    go_per_pol: float

    @property
    def total(self) -> float:
        return self.d_te + self.d_tm + 2.0 * self.go_per_pol


@dataclass(frozen=True)
class PerFrequencyNTLO:
    d_te: float
    d_tm: float
    go_total: float
    unit: Unit = Unit.per_kBT

    @property
    def go_per_pol(self) -> float:
        return 0.5 * self.go_total

    def total(self) -> float:
        return self.d_te + self.d_tm + self.go_total


@dataclass(frozen=True)
class IntegrandSample:
    kappa_sp: float
    F0: float
    F1: float


def _quad(fun, a, b, what, **kw):
    with np.errstate(all="ignore"):
        val, err, *_ = integrate.quad(fun, a, b, epsabs=0.0, epsrel=QUAD_RTOL,
                                      limit=400, full_output=1, **kw)
    if err > 1e-8 * abs(val) and err > 1e-300:
        raise NumericError(f"{what}: quadrature reached only {err:.3g} (value {val:.6g})")
    return val


def _semi_infinite(fun, lower, what):
    """``int_lower^inf fun(w) dw`` for integrands decaying like ``exp(-w)``.

    Below ``w = 1`` the integral is done in ``log w`` to resolve the
    algebraic behaviour at small ``lower``.
    """
    total = 0.0
    if lower < 1.0:
        total += _quad(lambda v: fun(math.exp(v)) * math.exp(v), math.log(lower), 0.0, what)
        lower = 1.0
    return total + _quad(fun, lower, math.inf, what)


# --- traces per round trip ------------------------------------------------

def trace_pfa(pt: SpectralPoint, x: float) -> float:
    """Leading (PFA) trace ``exp(-u) / (2 r^2 x)``, both polarizations."""
    return math.exp(-pt.u) / (2.0 * pt.r ** 2 * x)


def trace_ntlo(pt: SpectralPoint) -> TraceNTLO:
    """Diffraction (TE, TM) and per-polarization geometric-optics NTLO traces."""
    u, r = pt.u, pt.r
    if r < 1:
        raise DomainError("round-trip count r must be >= 1")
    if not u > 0:
        raise DomainError(f"diffraction traces need u > 0, got u={u}")
    e1 = exp_int_e1(u)
    eu = math.exp(-u)
    d_te = 0.125 * ((u * u - 4.0) * e1 - (u - 1.0) * eu)
    d_tm = -0.125 * (u * u * e1 - (u - 1.0) * eu)
    go = -(r * r - 1.0) * eu / (12.0 * r * r)
    return TraceNTLO(d_te, d_tm, go)


def r_max(q: float) -> int:
    """Smallest ``r`` with ``exp(-q r) (1 + r^2) < 1e-14``, capped at 10^6."""
    r = 1
    while math.exp(-q * r) * (1.0 + r * r) >= _TAIL_TOL:
        r = r * 2 if r < 64 else r + max(1, r // 8)
        if r >= _R_CAP:
            return _R_CAP
    lo = max(1, r // 2)
    while lo < r and math.exp(-q * lo) * (1.0 + lo * lo) >= _TAIL_TOL:
        lo += 1
    return lo


def roundtrip_free_energy_ntlo(q: float) -> TraceNTLO:
    """``-sum_r trace_ntlo / r`` by explicit round-trip summation (oracle path)."""
    if not q > 0:
        raise DomainError("q must be positive")
    parts = np.zeros(3)
    for r in range(1, r_max(q) + 1):
        t = trace_ntlo(SpectralPoint.from_u(q * r, r))
        parts -= np.array(t) / r
    return TraceNTLO(*parts)


# --- closed forms per Matsubara frequency ---------------------------------

def _log1m_exp(q):
    """``log(1 - exp(-q))``."""
    if q > 0.6931471805599453:
        return math.log1p(-math.exp(-q))
    return math.log(-math.expm1(-q))


def te_log_integral(q: float) -> float:
    """``int_1^inf -log(1 - exp(-q t)) / t dt``."""
    return _semi_infinite(lambda w: -_log1m_exp(w) / w, q, "TE diffraction integral")


def tm_integral(q: float) -> float:
    """``q^2 int_1^inf exp(-q t) / (t (1 - exp(-q t))^2) dt``."""
    def fun(w):
        if w > 700:
            return 0.0
        s = math.sinh(0.5 * w)
        return 1.0 / (4.0 * w * s * s)
    return q * q * _semi_infinite(fun, q, "TM diffraction integral")


def go_per_pol_closed(q: float) -> float:
    """``-(1/12) [Li3(exp(-q)) + log(1 - exp(-q))]`` without cancellation at large ``q``."""
    if q < math.log(2.0):
        return -(trilog_exp(q) + _log1m_exp(q)) / 12.0
    z = math.exp(-q)
    total = 0.0
    zk = z
    k = 1
    while True:
        k += 1
        zk *= z
        term = zk * (1.0 / k ** 3 - 1.0 / k)
        total += term
        if abs(term) < 1e-17 * abs(total) or zk == 0.0:
            break
    return -total / 12.0


def d_tm_closed(q: float) -> float:
    return 0.125 * (tm_integral(q) - q / math.expm1(q) - _log1m_exp(q))


def ntlo_components(q: float) -> PerFrequencyNTLO:
    """NTLO free-energy components at continuous reduced frequency ``q > 0``."""
    q = float(q)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if q > 700:
        return PerFrequencyNTLO(0.0, 0.0, 0.0)
    d_tm = d_tm_closed(q)
    d_te = -d_tm + 0.5 * te_log_integral(q)
    return PerFrequencyNTLO(d_te, d_tm, 2.0 * go_per_pol_closed(q))


def free_energy_ntlo(n: int, tau: float) -> PerFrequencyNTLO:
    """NTLO free energy of the ``n``-th Matsubara term in units of ``k_B T``."""
    if int(n) != n or n < 1:
        raise DomainError(f"free_energy_ntlo needs an integer n >= 1, got {n!r}")
    if not tau > 0:
        raise DomainError(f"free_energy_ntlo needs tau > 0, got {tau!r}")
    return ntlo_components(4.0 * math.pi * tau * n)


# --- integrand level --------------------------------------------------------

def g_lo(kappa, r, L):
    """Leading value of one polarization's ``g`` at the saddle point."""
    return math.exp(-2.0 * r * kappa * L) / kappa ** r


def diffraction_coeff_te(kappa, k0, r):
    """``R`` times the relative diffraction correction of ``g_TE``."""
    return r * (k0 * k0 - 2.0 * kappa * kappa) / (2.0 * kappa ** 3)


def diffraction_coeff_tm(kappa, k0, r):
    return -r * k0 * k0 / (2.0 * kappa ** 3)


def g_te(kappa, k0, r, L, R):
    """``g_TE`` at the saddle point; ``k0 = xi_n / c``."""
    return g_lo(kappa, r, L) * (1.0 + diffraction_coeff_te(kappa, k0, r) / R)


def g_tm(kappa, k0, r, L, R):
    return g_lo(kappa, r, L) * (1.0 + diffraction_coeff_tm(kappa, k0, r) / R)


def f1_per_pol(kappa, k0, r, L):
    """Geometric-optics NTLO integrand of a single polarization."""
    num = (r * r - 1.0) * (r * L * kappa * (kappa * kappa + k0 * k0) + k0 * k0)
    return -num / (6.0 * r * kappa ** 3) * g_lo(kappa, r, L)


def integrand_sample(kappa, pt: SpectralPoint, x: float) -> IntegrandSample:
    """``F0`` and ``F1`` at one saddle-point wave number (``L = 1``, ``R = 1/x``)."""
    k0 = pt.q / 2.0
    R = 1.0 / x
    F0 = g_te(kappa, k0, pt.r, 1.0, R) + g_tm(kappa, k0, pt.r, 1.0, R)
    return IntegrandSample(kappa, F0, 2.0 * f1_per_pol(kappa, k0, pt.r, 1.0))


def trace_via_integrand(pt: SpectralPoint, x: float, part: str = "ntlo") -> float:
    """Round-trip trace from quadrature of the saddle-point integrand.

    ``part="ntlo"`` returns the ``R``-independent correction (diffraction
    plus geometric optics, both polarizations); ``part="pfa"`` the
    leading term.  Lengths in units of ``L``.
    """
    r = pt.r
    k0 = pt.q / 2.0  # xi_n / c in units of 1/L
    R = 1.0 / x
    if part == "pfa":
        def fun(kappa):
            return R / (2 * r) * kappa ** r * 2.0 * g_lo(kappa, r, 1.0)
        lower = k0
    elif part == "ntlo":
        if not k0 > 0:
            raise DomainError("the NTLO integrand needs u > 0")

        def fun(kappa):
            g0 = g_lo(kappa, r, 1.0)
            corr = (diffraction_coeff_te(kappa, k0, r) + diffraction_coeff_tm(kappa, k0, r)) * g0
            return kappa ** r / (2 * r) * (corr + 2.0 * f1_per_pol(kappa, k0, r, 1.0))
        lower = k0
    else:
        raise DomainError(f"unknown part {part!r}")
    scale = 1.0 / (2.0 * r)  # decay length of exp(-2 r kappa)
    mid = lower + 40.0 * scale
    if lower == 0.0:
        return _quad(fun, 0.0, mid, "integrand trace") + _quad(fun, mid, math.inf, "integrand trace")
    return (_quad(fun, lower, mid, "integrand trace", points=[lower + scale])
            + _quad(fun, mid, math.inf, "integrand trace"))


# --- zero temperature -------------------------------------------------------

def zero_temp_ntlo(x: float | None = None) -> float:
    """Zero-temperature NTLO free energy in units of ``hbar c / L``.

    The Matsubara sum becomes ``(1/4 pi) int_0^inf dq`` of the per-frequency
    NTLO free energy.  In these units the result does not depend on ``x``
    (it is the ``x``-relative correction to a PFA term scaling as ``1/x``).
    """
    def density(q):
        return ntlo_components(q).total()

    val = _quad(density, 0.0, 1.0, "zero-temperature NTLO") \
        + _quad(density, 1.0, 60.0, "zero-temperature NTLO") \
        + _quad(density, 60.0, math.inf, "zero-temperature NTLO")
    return val / (4.0 * math.pi)


def pfa_zero_temp(x: float) -> float:
    """``F_PFA(T=0) = -pi^3 / (720 x)`` in units of ``hbar c / L``."""
    return -math.pi ** 3 / (720.0 * x)


def zero_temp_components() -> PerFrequencyNTLO:
    """:func:`zero_temp_ntlo` split into TE/TM diffraction and geometric optics."""
    def part(name):
        def density(q):
            return getattr(ntlo_components(q), name)
        return sum(_quad(density, a, b, "zero-temperature NTLO")
                   for a, b in ((0.0, 1.0), (1.0, 60.0), (60.0, math.inf))) / (4.0 * math.pi)

    return PerFrequencyNTLO(part("d_te"), part("d_tm"), part("go_total"),
                            unit=Unit.per_hbar_c_over_L)

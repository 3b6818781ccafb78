"""Matsubara summation and thermal corrections beyond PFA.

This is the only module that applies the weight ``1/2`` of the ``n = 0``
Matsubara term; :mod:`casimir_pfa.zerofreq` returns the full term.
Unless stated otherwise, energies are in units of ``hbar c / L``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy import integrate

from . import _fd
from .core import ConfigurationError, EnergyBreakdown, NumericError, Unit
from .perfreq import ntlo_components, pfa_zero_temp, zero_temp_components, zero_temp_ntlo
from .specfun import ZETA3, bernoulli_2m, trilog_exp
from .zerofreq import f0_total_beyond_pfa

LN2 = math.log(2.0)
EM_ORDER = 5
_SUM_TOL = 1e-14


class OutsideRegimeWarning(UserWarning):
    """Parameters lie outside the intermediate regime ``x << tau << 1``."""


@dataclass(frozen=True)
class EMResult:
    value: float
    error: float


@dataclass(frozen=True)
class DeltaResult:
    """Relative thermal correction beyond PFA at one ``(x, tau)``.

    ``delta_formula`` is the closed intermediate-temperature form.
    ``delta_assembled`` adds the zero-frequency term (weight 1/2) and the
    thermal part of the ``n >= 1`` sum, both divided by the zero-temperature
    PFA free energy.  ``delta_n_positive`` is the ``n >= 1`` part alone.
    ``parts`` lists the thermal pieces in units of ``hbar c / L``.
    """

    x: float
    tau: float
    delta_formula: float
    delta_assembled: float
    delta_n_positive: float
    parts: EnergyBreakdown


# --- Euler-Maclaurin summation -----------------------------------------------

def euler_maclaurin(seq, M: int = EM_ORDER, start: int = 1, n_direct: int = 0) -> EMResult:
    """``sum_{n >= start} seq(n)`` by the Euler-Maclaurin formula.

    The first ``n_direct`` terms are added explicitly and the formula is
    applied from ``a = start + n_direct`` on: the tail integral, ``seq(a)/2``
    and ``M`` Bernoulli corrections with odd derivatives at ``a`` taken by
    extrapolated central differences.  ``seq`` must accept real ``n`` in a
    neighbourhood of ``a`` and decay with all derivatives.

    Returns
    -------
    EMResult
        Value and the magnitude of the last correction kept as error estimate.
    """
    if isinstance(M, bool) or int(M) != M or not 1 <= M <= 8:
        raise ConfigurationError(f"M: must be an integer in [1, 8], got {M!r}")
    if int(n_direct) != n_direct or n_direct < 0:
        raise ConfigurationError(f"n_direct: must be a non-negative integer, got {n_direct!r}")
    head = math.fsum(float(seq(n)) for n in range(start, start + n_direct))
    a = float(start + n_direct)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            tail, err = integrate.quad(lambda t: float(seq(t)), a, math.inf,
                                       epsabs=1e-15, epsrel=1e-12, limit=400)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"tail integral of the Euler-Maclaurin formula failed: {exc}") from None
    if not math.isfinite(tail):
        raise NumericError("tail integral of the Euler-Maclaurin formula diverges")

    f_a = float(seq(a))
    total = head + tail + 0.5 * f_a
    last = 0.0
    for m in range(1, M + 1):
        order = 2 * m - 1
        h0 = min(1.0, 0.5 * a / order)
        deriv, _ = _fd.derivative(seq, a, order, h0)
        last = -bernoulli_2m(m) / math.factorial(2 * m) * deriv
        total += last
    return EMResult(total, abs(last))


# --- PFA ------------------------------------------------------------------------

def pfa_free_energy(x: float, tau: float, unit: Unit | str | None = None) -> float:
    """PFA free energy of the plane-sphere system.

    Returned per ``k_B T`` for ``tau > 0`` and per ``hbar c / L`` for
    ``tau = 0`` unless ``unit`` is given.
    """
    if not x > 0:
        raise ConfigurationError(f"x: must be positive, got {x!r}")
    if not tau >= 0:
        raise ConfigurationError(f"tau: must be >= 0, got {tau!r}")
    if tau == 0:
        val = pfa_zero_temp(x)
        if unit is not None and Unit(unit) is Unit.per_kBT:
            raise ZeroDivisionError("cannot express energies in units of k_B T at tau = 0")
        return val
    terms = [0.5 * ZETA3]
    n = 0
    q1 = 4.0 * math.pi * tau
    while True:
        n += 1
        t = trilog_exp(q1 * n)
        terms.append(t)
        if t < _SUM_TOL * terms[0] or t == 0.0:
            break
    val = -math.fsum(terms) / (2.0 * x)
    if unit is not None and Unit(unit) is Unit.per_hbar_c_over_L:
        return val * tau
    return val


# --- n >= 1 NTLO sum -------------------------------------------------------------

def _check_tau(tau):
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau: must lie in (0, 1), got {tau!r}")
    return tau


def _ntlo_terms(tau):
    """Per-frequency NTLO components (``hbar c / L``) until the terms are negligible."""
    q1 = 4.0 * math.pi * tau
    terms = []
    n = 0
    running = 0.0
    while True:
        n += 1
        c = ntlo_components(q1 * n)
        tot = c.total()
        terms.append(c)
        running += tot
        if abs(tot) < _SUM_TOL * abs(running) or tot == 0.0:
            return terms


def ntlo_matsubara_sum(tau: float, method: str = "direct", n_direct: int = 10) -> float:
    """``sum_{n >= 1} [F_n]_NTLO`` in units of ``hbar c / L``."""
    tau = _check_tau(tau)
    if method == "direct":
        return tau * math.fsum(c.total() for c in _ntlo_terms(tau))
    if method == "euler_maclaurin":
        q1 = 4.0 * math.pi * tau
        res = euler_maclaurin(lambda n: tau * ntlo_components(q1 * n).total(), n_direct=n_direct)
        return res.value
    raise ConfigurationError(f"method: must be direct or euler_maclaurin, got {method!r}")


def thermal_ntlo_positive(x: float, tau: float, mode: str = "full_sum") -> float:
    """Thermal part of the ``n >= 1`` NTLO free energy in units of ``hbar c / L``.

    ``leading_log`` returns ``-(tau/8) log^2 tau``; ``full_sum`` sums the
    per-frequency terms and subtracts the zero-temperature integral.  In
    these units neither depends on ``x``.
    """
    tau = _check_tau(tau)
    if mode == "leading_log":
        return -0.125 * tau * math.log(tau) ** 2
    if mode == "full_sum":
        return ntlo_matsubara_sum(tau) - zero_temp_ntlo(x)
    raise ConfigurationError(f"mode: must be leading_log or full_sum, got {mode!r}")


def _thermal_components(tau):
    zt = zero_temp_components()
    terms = _ntlo_terms(tau)
    d_te = tau * math.fsum(c.d_te for c in terms) - zt.d_te
    d_tm = tau * math.fsum(c.d_tm for c in terms) - zt.d_tm
    go = tau * math.fsum(c.go_total for c in terms) - zt.go_total
    return d_te, d_tm, go


# --- relative correction -----------------------------------------------------------

def _check_regime(x, tau):
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ConfigurationError(f"x: must lie in (0, 1), got {x!r}")
    tau = _check_tau(tau)
    if not x < tau:
        warnings.warn(f"x={x} is not small compared with tau={tau}; the "
                      "intermediate-temperature forms may be inaccurate", OutsideRegimeWarning,
                      stacklevel=3)
    return x, tau


def delta_formula(x: float, tau: float) -> float:
    """Closed intermediate-temperature form of the relative correction."""
    lx, lt = math.log(x), math.log(tau)
    return 45.0 / math.pi ** 3 * x * tau * (-lx * lx + 2.0 * (1.0 - LN2) * lx + 2.0 * lt * lt)


def delta(x: float, tau: float, mode: str = "assembled") -> DeltaResult:
    """Relative thermal correction beyond PFA.

    Parameters
    ----------
    x, tau : float
        Aspect ratio ``L/R`` and reduced temperature ``L/lambda_T``.
    mode : {"assembled", "formula"}
        How the ``n >= 1`` thermal part enters ``delta_assembled`` and
        ``delta_n_positive``: full Matsubara sum or leading logarithm.
        With ``"formula"`` the assembly reproduces ``delta_formula``.
    """
    x, tau = _check_regime(x, tau)
    if mode == "assembled":
        d_te, d_tm, go = _thermal_components(tau)
    elif mode == "formula":
        d_te, d_tm, go = thermal_ntlo_positive(x, tau, "leading_log"), 0.0, 0.0
    else:
        raise ConfigurationError(f"mode: must be assembled or formula, got {mode!r}")
    zero = 0.5 * tau * f0_total_beyond_pfa(x)
    parts = EnergyBreakdown(pfa=0.0, d_te=d_te, d_tm=d_tm, go=go, zero_freq=zero,
                            unit=Unit.per_hbar_c_over_L)
    f_pfa0 = pfa_zero_temp(x)
    return DeltaResult(x, tau, delta_formula(x, tau), parts.total() / f_pfa0,
                       (d_te + d_tm + go) / f_pfa0, parts)


def beyond_pfa_ratio(x: float, tau: float) -> float:
    """Beyond-PFA free energy at ``tau`` over its zero-temperature value (assembled)."""
    res = delta(x, tau, "assembled")
    zt = zero_temp_ntlo(x)
    return (zt + res.parts.total()) / zt


def entropy_ntlo(x: float, tau: float) -> float:
    """Intermediate-temperature NTLO Casimir entropy in units of ``k_B``."""
    x, tau = _check_regime(x, tau)
    lx, lt = math.log(x), math.log(tau)
    return (2.0 * lt * lt - lx * lx + 2.0 * (1.0 - LN2) * lx) / 16.0


def ntlo_free_energy(x: float, tau: float) -> float:
    """Assembled NTLO free energy (``hbar c / L``): zero temperature plus thermal parts."""
    res = delta(x, tau, "assembled")
    return zero_temp_ntlo(x) + res.parts.total()


def entropy_fd(x: float, tau: float, step: float = 1e-3) -> float:
    """``-dF/dT`` of :func:`ntlo_free_energy` in units of ``k_B`` by a central difference in ``tau``."""
    h = step * tau
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideRegimeWarning)
        fp = ntlo_free_energy(x, tau + h)
        fm = ntlo_free_energy(x, tau - h)
    return -(fp - fm) / (2.0 * h)

"""Zero-frequency (``n = 0``) contributions.

All free energies here are in units of ``k_B T`` and carry the full
weight of the ``n = 0`` term.  The factor ``1/2`` of the primed
Matsubara sum is applied by :mod:`casimir_pfa.thermo` only.

The exact TE value is obtained from a Nystrom discretization of the
round-trip operator.  Azimuthal symmetry splits the operator into
sectors ``m``; each sector is an ``N x N`` symmetric matrix on radial
quadrature nodes, and the free energy is ``sum_m' log det(1 - M_m)``
with sector ``0`` counted once and every ``m >= 1`` twice.  Lengths are
measured in units of ``L`` so that ``R = 1/x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy import integrate

from .core import DomainError, Geometry, NumericError
from .specfun import ZETA3, bessel_k1, multipole_sum_A

LN2 = math.log(2.0)

#: Upper end of the radial variable ``k L``; the kernel carries ``exp(-2 k L)``.
DEFAULT_K_SCALE = 20.0
#: Byte budget for one block of stored sector matrices.
SECTOR_MEMORY = 256 * 2 ** 20
_MIN_NODES = 20
_MIN_PHI = 256
_QUAD_RTOL = 1e-11


@dataclass(frozen=True)
class NystromConfig:
    """Discretization of the zero-frequency TE round-trip operator.

    Parameters
    ----------
    n_nodes : int or None
        Radial Gauss-Legendre nodes of the coarse run.  ``None`` picks
        ``max(40, 12/sqrt(x))``.  The result is computed again with twice
        as many nodes (and twice the azimuthal samples); the finer value is
        returned and the change is the convergence estimate.
    m_max : int or None
        Hard cap on the azimuthal index.  ``None`` lets the sum extend up
        to the Nyquist index of the azimuthal grid.
    k_scale : float
        Radial cutoff in units of ``1/L``.
    det_tol : float
        The ``m`` sum stops once three consecutive sectors each contribute
        less than ``det_tol`` times the running total.
    n_phi : int or None
        Azimuthal samples per radial pair; ``None`` chooses a power of two
        resolving the angular peak of the kernel.
    rel_tol : float
        Required relative agreement between the coarse and fine runs.
    check_convergence : bool
        Skip the fine run when ``False`` (estimate reported as ``nan``).
    """

    n_nodes: int | None = None
    m_max: int | None = None
    k_scale: float = DEFAULT_K_SCALE
    det_tol: float = 1e-10
    n_phi: int | None = None
    rel_tol: float = 1e-6
    check_convergence: bool = True

    def __post_init__(self):
        if self.n_nodes is not None and (int(self.n_nodes) != self.n_nodes or self.n_nodes < _MIN_NODES):
            raise DomainError(f"n_nodes must be an integer >= {_MIN_NODES}, got {self.n_nodes!r}")
        if self.m_max is not None and (int(self.m_max) != self.m_max or self.m_max < 1):
            raise DomainError(f"m_max must be a positive integer, got {self.m_max!r}")
        if not self.k_scale > 0:
            raise DomainError("k_scale must be positive")
        if not 0 < self.det_tol < 1:
            raise DomainError("det_tol must lie in (0, 1)")
        if self.n_phi is not None and (int(self.n_phi) != self.n_phi or self.n_phi < 8):
            raise DomainError("n_phi must be an integer >= 8")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")

    def resolved(self, x: float) -> "NystromConfig":
        """Copy with ``n_nodes`` and ``n_phi`` filled in for aspect ratio ``x``."""
        n = self.n_nodes or max(40, math.ceil(12.0 / math.sqrt(x)))
        n_phi = self.n_phi
        if n_phi is None:
            # angular peak width of exp(y - R(k+k')) at the radial cutoff
            width = math.sqrt(2.0 * x / self.k_scale)
            n_phi = max(_MIN_PHI, 2 ** math.ceil(math.log2(6.0 * math.pi / width)))
        return replace(self, n_nodes=int(n), n_phi=int(n_phi))

    def doubled(self) -> "NystromConfig":
        return replace(self, n_nodes=2 * self.n_nodes, n_phi=2 * self.n_phi,
                       m_max=None if self.m_max is None else 2 * self.m_max)


@dataclass(frozen=True)
class AngularSectorMatrix:
    m: int
    entries: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[-1])


@dataclass(frozen=True)
class ExactResult:
    """Exact TE zero-frequency free energy with its convergence record."""

    value: float
    coarse: float
    rel_change: float
    n_nodes: int
    n_phi: int
    m_used: int
    trace: tuple = ()
    logdets: tuple = ()

    def __float__(self):
        return float(self.value)


def _as_x(geom) -> float:
    x = geom.x if isinstance(geom, Geometry) else float(geom)
    if not x > 0:
        raise DomainError(f"x = L/R must be positive, got {x}")
    return x


def radial_nodes(cfg: NystromConfig):
    """Nodes ``k_i`` and weights ``w_i`` for ``int_0^k_scale dk``.

    Gauss-Legendre in ``sigma = sqrt(k)`` resolves the ``sqrt(k)``
    behaviour of the kernel at the origin.
    """
    s, w = np.polynomial.legendre.leggauss(cfg.n_nodes)
    smax = math.sqrt(cfg.k_scale)
    sigma = 0.5 * smax * (s + 1.0)
    return sigma ** 2, smax * w * sigma


def _sector_blocks(x: float, cfg: NystromConfig) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(m, M_m)`` in ascending ``m`` up to the Nyquist index.

    Sectors are produced in blocks limited by :data:`SECTOR_MEMORY`; each
    block repeats the azimuthal sweep over the stored radial pairs.
    """
    R = 1.0 / x
    k, w = radial_nodes(cfg)
    n, n_phi = cfg.n_nodes, cfg.n_phi
    m_top = n_phi // 2
    if cfg.m_max is not None:
        m_top = min(m_top, cfg.m_max)
    per_block = max(1, int(SECTOR_MEMORY // (8 * n * n)))
    c = np.abs(np.cos(np.pi * np.arange(n_phi) / n_phi))
    scale = np.sqrt(w)
    pref = np.outer(scale, scale) * (R / (2.0 * np.pi))
    m_lo = 0
    while m_lo <= m_top:
        m_hi = min(m_top, m_lo + per_block - 1)
        a = np.empty((m_hi - m_lo + 1, n, n))
        for i in range(n):
            kj = k[i:]
            y = 2.0 * R * np.sqrt(k[i] * kj)[:, None] * c[None, :]
            expo = y - (k[i] + kj)[:, None] * (1.0 + R)
            if np.any(expo > 0.0):
                j, p = np.unravel_index(np.argmax(expo), expo.shape)
                raise NumericError(f"kernel exponent overflow guard violated at "
                                   f"(k, k', phi) = ({k[i]}, {kj[j]}, {2 * np.pi * p / n_phi})")
            val = multipole_sum_A(np.maximum(y, 1e-300), scaled=True) * np.exp(expo)
            coef = np.fft.rfft(val, axis=1).real[:, m_lo:m_hi + 1] * (2.0 * np.pi / n_phi)
            a[:, i, i:] = coef.T
            a[:, i:, i] = coef.T
        for m in range(m_lo, m_hi + 1):
            yield m, pref * a[m - m_lo]
        m_lo = m_hi + 1


def build_sector(m: int, geom, cfg: NystromConfig | None = None) -> AngularSectorMatrix:
    """Sector ``m`` of the discretized TE round-trip operator.

    Raises :class:`NumericError` if the sector is not a contraction.
    """
    x = _as_x(geom)
    if int(m) != m or m < 0:
        raise DomainError(f"sector index must be a non-negative integer, got {m!r}")
    cfg = (cfg or NystromConfig()).resolved(x)
    if m > cfg.n_phi // 2:
        raise DomainError(f"m={m} exceeds the Nyquist index {cfg.n_phi // 2} of the azimuthal grid")
    for mm, mat in _sector_blocks(x, replace(cfg, m_max=max(1, int(m)))):
        if mm == m:
            k, w = radial_nodes(cfg)
            sec = AngularSectorMatrix(int(m), mat, k, w)
            lam = sec.max_eigenvalue()
            if not 0.0 < lam < 1.0:
                raise NumericError(f"sector m={m}: largest eigenvalue {lam} outside (0, 1)")
            return sec
    raise AssertionError("unreachable")


def _logdet_sum(x: float, cfg: NystromConfig):
    total = 0.0
    small = 0
    trace = []
    for m, mat in _sector_blocks(x, cfg):
        try:
            chol = np.linalg.cholesky(np.eye(cfg.n_nodes) - mat)
        except np.linalg.LinAlgError:
            raise NumericError(f"sector m={m}: 1 - M is not positive definite "
                               "(round-trip operator is not a contraction)") from None
        ld = 2.0 * float(np.sum(np.log(np.diag(chol))))
        total += ld if m == 0 else 2.0 * ld
        trace.append(ld)
        small = small + 1 if abs(ld) < cfg.det_tol * abs(total) else 0
        if small >= 3:
            return total, m, tuple(trace)
    raise NumericError(f"azimuthal sum not converged up to m={len(trace) - 1} "
                       f"(last sector log-dets {trace[-3:]}); increase n_phi or m_max")


def f0_te_exact(geom, cfg: NystromConfig | None = None) -> ExactResult:
    """Exact TE zero-frequency free energy in units of ``k_B T`` (full ``n = 0`` weight).

    Parameters
    ----------
    geom : Geometry or float
        Geometry, or the aspect ratio ``x = L/R`` directly.
    cfg : NystromConfig, optional

    Returns
    -------
    ExactResult
        ``value`` is the result of the fine discretization; ``rel_change``
        its relative distance to the coarse one; ``logdets`` lists
        ``log det(1 - M_m)`` per sector of the fine run.

    Raises
    ------
    NumericError
        If the azimuthal sum does not terminate or the coarse and fine
        runs differ by more than ``cfg.rel_tol``.
    """
    x = _as_x(geom)
    cfg = (cfg or NystromConfig()).resolved(x)
    coarse, m_used, lds = _logdet_sum(x, cfg)
    hist = [(cfg.n_nodes, cfg.n_phi, coarse)]
    if not cfg.check_convergence:
        return ExactResult(coarse, coarse, math.nan, cfg.n_nodes, cfg.n_phi, m_used, tuple(hist), lds)
    fine_cfg = cfg.doubled()
    fine, m_used, lds = _logdet_sum(x, fine_cfg)
    hist.append((fine_cfg.n_nodes, fine_cfg.n_phi, fine))
    change = abs(fine - coarse) / abs(fine)
    if change > cfg.rel_tol:
        raise NumericError(f"Nystrom discretization not converged at x={x}: "
                           f"(n_nodes, n_phi, value) history {hist}")
    return ExactResult(fine, coarse, change, fine_cfg.n_nodes, fine_cfg.n_phi, m_used, tuple(hist), lds)


def roundtrip_traces(geom, cfg: NystromConfig | None = None, r_max: int = 4) -> np.ndarray:
    """``sum_m' tr(M_m^r)`` for ``r = 1..r_max`` (coarse discretization only)."""
    x = _as_x(geom)
    cfg = (cfg or NystromConfig()).resolved(x)
    out = np.zeros(r_max)
    small = 0
    for m, mat in _sector_blocks(x, cfg):
        p = np.eye(cfg.n_nodes)
        contrib = np.empty(r_max)
        for r in range(r_max):
            p = p @ mat
            contrib[r] = np.trace(p)
        out += contrib if m == 0 else 2.0 * contrib
        small = small + 1 if contrib[0] < cfg.det_tol * out[0] else 0
        if small >= 3:
            return out
    raise NumericError("trace sum over sectors did not terminate")


def trace_identity_oracle(geom) -> float:
    """Single round-trip trace from the diagonal of the kernel, ``R int e^{-2k(1+R)} A(2Rk) dk``."""
    x = _as_x(geom)
    R = 1.0 / x

    def fun(k):
        return R * math.exp(-2.0 * k) * multipole_sum_A(2.0 * R * k, scaled=True) if k > 0 else 0.0

    return integrate.quad(fun, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=500)[0]


# --- saddle-point traces -----------------------------------------------------

def _check_r_x(r, x):
    if int(r) != r or r < 1:
        raise DomainError(f"r must be a positive integer, got {r!r}")
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    return int(r), float(x)


def _ratio_integral(fun, r, x):
    # structure at t ~ x from t/(t+x); decay like exp(-2 r t) beyond
    scale = 1.0 / (2.0 * r)
    pts = [0.0] + [c * x for c in (1.0, 10.0, 100.0) if c * x < scale] + [scale, 40.0 * scale, np.inf]
    return sum(integrate.quad(fun, a, b, epsabs=0.0, epsrel=_QUAD_RTOL, limit=400)[0]
               for a, b in zip(pts, pts[1:]))


def lo_spa_trace_te0(r: int, x: float, method: str = "bessel") -> float:
    """Leading saddle-point trace over ``r`` TE round trips at zero frequency."""
    r, x = _check_r_x(r, x)
    if method == "bessel":
        s = math.sqrt(2.0 * x)
        return bessel_k1(2.0 * r * s) / (r * s)
    if method == "integral":
        def fun(t):
            return (t / (t + x)) ** r * math.exp(-2.0 * r * t)
        return _ratio_integral(fun, r, x) / (2.0 * r * x)
    raise DomainError(f"unknown method {method!r}")


def ntlo_spa_trace_te0(r: int, x: float, method: str = "bessel") -> float:
    """Next-to-leading saddle-point trace over ``r`` TE round trips at zero frequency."""
    r, x = _check_r_x(r, x)
    if r == 1:
        return 0.0
    if method == "bessel":
        s = math.sqrt(2.0 * x)
        return -(r * r - 1.0) / (6.0 * r) * s * bessel_k1(2.0 * r * s)
    if method == "integral":
        def fun(t):
            if t == 0.0:
                return 0.0
            br = r + 1.0 + x * (3.0 * x + (r + 1.0) * t) / (2.0 * t * (x + t) ** 2)
            return br * (t / (t + x)) ** r * math.exp(-2.0 * r * t)
        return -(r - 1.0) / (12.0 * r) * _ratio_integral(fun, r, x)
    raise DomainError(f"unknown method {method!r}")


def _bessel_rsum(x: float, weight) -> float:
    """``-sum_r weight(r, s) e^{-2 r s} K1e(2 r s) / r`` with ``s = sqrt(2x)``, summed to convergence."""
    s = math.sqrt(2.0 * x)
    r_top = int(math.ceil(20.0 / s)) + 10
    r = np.arange(1, r_top + 1, dtype=float)
    z = 2.0 * r * s
    k1e = np.array([bessel_k1(v, scaled=True) for v in z])
    terms = weight(r, s) * k1e * np.exp(-z) / r
    return -math.fsum(terms[::-1])


def lo_rsum(x: float) -> float:
    """LO zero-frequency TE free energy from the Bessel round-trip sum."""
    return _bessel_rsum(x, lambda r, s: 1.0 / (r * s))


def ntlo_rsum(x: float) -> float:
    """NTLO zero-frequency TE free energy from the Bessel round-trip sum."""
    return _bessel_rsum(x, lambda r, s: -(r * r - 1.0) / (6.0 * r) * s)


def fit_log_coefficients(xs, values, powers=(2, 1, 0)):
    """Least-squares coefficients of ``values`` in powers of ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    design = np.stack([lx ** p for p in powers], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    return dict(zip(powers, coef))


# --- asymptotic forms ---------------------------------------------------------

def _check_unit_interval(x):
    x = float(x)
    if not 0.0 < x:
        raise DomainError(f"x must be positive, got {x}")
    return x


def f0_te_asympt(x: float, order: str = "full") -> float:
    """Small-``x`` TE zero-frequency free energy per ``k_B T`` (full ``n = 0`` weight)."""
    x = _check_unit_interval(x)
    lx = math.log(x)
    if order == "LO":
        return -0.25 * (ZETA3 / x - 0.5 * lx * lx + (1.0 - LN2) * lx)
    if order == "NTLO":
        return -lx / 24.0
    if order == "full":
        return -0.25 * (ZETA3 / x - 0.5 * lx * lx + (7.0 / 6.0 - LN2) * lx)
    raise DomainError(f"order must be LO, NTLO or full, got {order!r}")


def f0_tm_asympt(x: float) -> float:
    """Small-``x`` TM zero-frequency free energy per ``k_B T`` (full ``n = 0`` weight)."""
    x = _check_unit_interval(x)
    return -0.25 * (ZETA3 / x - math.log(x) / 6.0)


def f0_total_asympt(x: float) -> float:
    """Combined TE + TM zero-frequency free energy per ``k_B T`` (full ``n = 0`` weight)."""
    x = _check_unit_interval(x)
    lx = math.log(x)
    return -0.25 * (2.0 * ZETA3 / x - 0.5 * lx * lx + (1.0 - LN2) * lx)


def f0_total_beyond_pfa(x: float) -> float:
    """:func:`f0_total_asympt` without its ``1/x`` term."""
    x = _check_unit_interval(x)
    lx = math.log(x)
    return -0.25 * (-0.5 * lx * lx + (1.0 - LN2) * lx)


@dataclass(frozen=True)
class LogCoefficient:
    """``rational + log2_mult * log 2``, kept exact."""

    rational: Fraction
    log2_mult: Fraction = Fraction(0)

    def __add__(self, other):
        return LogCoefficient(self.rational + other.rational, self.log2_mult + other.log2_mult)

    def __float__(self):
        return float(self.rational) + float(self.log2_mult) * LN2

    def __str__(self):
        if self.log2_mult == 0:
            return str(self.rational)
        sign = "-" if self.log2_mult < 0 else "+"
        mult = abs(self.log2_mult)
        return f"{self.rational} {sign} {'' if mult == 1 else str(mult) + '*'}log2"


# Bracket coefficients of -(1/4)[a/x + b log^2 x + c log x]
_TE_BRACKET = (Fraction(1), Fraction(-1, 2), LogCoefficient(Fraction(7, 6), Fraction(-1)))
_TM_BRACKET = (Fraction(1), Fraction(0), LogCoefficient(Fraction(-1, 6)))
_TOTAL_BRACKET = (Fraction(2), Fraction(-1, 2), LogCoefficient(Fraction(1), Fraction(-1)))


def coefficient_audit() -> dict:
    """Compare the combined asymptotic form with the sum of its TE and TM parts.

    Brackets are those of ``-(1/4)[a zeta(3)/x + b log^2 x + c log x]``.
    """
    summed = tuple(a + b for a, b in zip(_TE_BRACKET, _TM_BRACKET))
    names = ("zeta3_over_x", "log2_x", "log_x")
    rows = {}
    for name, te, tm, s, tot in zip(names, _TE_BRACKET, _TM_BRACKET, summed, _TOTAL_BRACKET):
        rows[name] = {"te": str(te), "tm": str(tm), "te_plus_tm": str(s),
                      "combined": str(tot), "match": s == tot}
    consistent = all(r["match"] for r in rows.values())
    return {
        "coefficients": rows,
        "consistent": consistent,
        "outcome": ("TE + TM brackets reproduce the combined form exactly"
                    if consistent else "TE + TM brackets differ from the combined form"),
    }

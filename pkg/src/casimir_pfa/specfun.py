"""Special functions needed by the asymptotic formulas.

Each function is evaluated by two algorithms on either side of a
switchover point; the ``*_series`` / ``*_cf`` helpers are exposed so the
overlap can be tested.  Only real arguments and the ranges actually used
by the package are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import DomainError

EULER_GAMMA = 0.57721566490153286061
ZETA3 = 1.2020569031595942854

E1_SWITCH = 1.5
K1_SWITCH = 2.0
LI3_SWITCH = 0.5
A_SERIES_BELOW = 1.0


@dataclass(frozen=True)
class Accuracy:
    rel_tol: float = 1e-12
    abs_floor: float = 1e-300

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-6:
            raise DomainError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if self.abs_floor <= 0:
            raise DomainError("abs_floor must be positive")


DEFAULT_ACCURACY = Accuracy()
_EPS = 2.0 ** -53


# --- exponential integral -------------------------------------------------

def e1_series(u: float) -> float:
    """E1 from the ascending series ``-gamma - ln u - sum (-u)^k / (k k!)``."""
    term = 1.0
    total = 0.0
    k = 0
    while True:
        k += 1
        term *= -u / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total) * 0.1 or k > 200:
            break
    return -EULER_GAMMA - math.log(u) - total


def e1_cf(u: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """E1 from its continued fraction, modified Lentz algorithm."""
    tiny = 1e-300
    b = u + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-u)
    raise ArithmeticError(f"E1 continued fraction did not converge at u={u}")


def exp_int_e1(u: float) -> float:
    """Exponential integral ``E1(u) = int_1^inf exp(-u t)/t dt`` for ``u > 0``."""
    u = float(u)
    if not u > 0:
        raise DomainError(f"E1 requires u > 0, got {u}")
    if u < E1_SWITCH:
        return e1_series(u)
    if u > 745.0:
        return 0.0
    return e1_cf(u)


# --- modified Bessel K1 ---------------------------------------------------

def k1_series(z: float) -> float:
    """K1 from the ascending series with logarithmic term."""
    y = 0.25 * z * z
    # I1 and the digamma sum share the same power terms
    term = 0.5 * z
    i1 = term
    psi_a = -EULER_GAMMA  # psi(k+1)
    psi_b = 1.0 - EULER_GAMMA  # psi(k+2)
    s = term * (psi_a + psi_b)
    k = 0
    while True:
        k += 1
        term *= y / (k * (k + 1))
        psi_a += 1.0 / k
        psi_b += 1.0 / (k + 1)
        i1 += term
        contrib = term * (psi_a + psi_b)
        s += contrib
        if abs(contrib) < _EPS * abs(s) * 0.1 and term < _EPS * i1:
            break
    return 1.0 / z + math.log(0.5 * z) * i1 - 0.5 * s


def k1e_cf(z: float) -> float:
    """Scaled ``exp(z) K1(z)`` from Steed's continued fraction (Temme CF2)."""
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 10000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise ArithmeticError(f"K1 continued fraction did not converge at z={z}")
    h = a1 * h
    k0e = math.sqrt(math.pi / (2.0 * z)) / s
    return k0e * (z + 0.5 - h) / z


def bessel_k1(z: float, scaled: bool = False) -> float:
    """Modified Bessel function ``K1(z)``, or ``exp(z) K1(z)`` if ``scaled``."""
    z = float(z)
    if not z > 0:
        raise DomainError(f"K1 requires z > 0, got {z}")
    if z < K1_SWITCH:
        v = k1_series(z)
        return v * math.exp(z) if scaled else v
    ve = k1e_cf(z)
    if scaled:
        return ve
    return ve * math.exp(-z) if z < 745.0 else 0.0


def bessel_k1e(z: float) -> float:
    return bessel_k1(z, scaled=True)


# --- trilogarithm ---------------------------------------------------------

def li3_series(z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Direct series ``sum z^k / k^3``."""
    total = 0.0
    zk = 1.0
    k = 0
    while True:
        k += 1
        zk *= z
        term = zk / k ** 3
        total += term
        if term <= acc.rel_tol * 1e-3 * total or zk < acc.abs_floor:
            return total


@lru_cache(maxsize=None)
def _zeta_negative(n: int) -> float:
    """zeta(-n) for n >= 0."""
    if n == 0:
        return -0.5
    if n % 2 == 0:
        return 0.0
    return float(-_bernoulli(n + 1) / (n + 1))


def li3_log_series(q: float) -> float:
    """``Li3(exp(-q))`` from the expansion around ``q = 0`` (valid for ``q < 2 pi``)."""
    if q == 0:
        return ZETA3
    total = ZETA3 - math.pi ** 2 / 6 * q + 0.5 * q * q * (1.5 - math.log(q))
    fact = 2.0
    power = q * q
    for k in range(3, 80):
        fact *= k
        power *= -q
        zeta = _zeta_negative(k - 3)
        if zeta == 0.0:
            continue
        term = zeta * power / fact
        total += term
        if abs(term) < _EPS * 1e-2 * abs(total):
            break
    return total


def trilog_exp(q: float) -> float:
    """``Li3(exp(-q))`` for ``q >= 0``, accurate also for tiny ``q``."""
    q = float(q)
    if q < 0:
        raise DomainError(f"trilog_exp requires q >= 0, got {q}")
    if q < math.log(1.0 / LI3_SWITCH):
        return li3_log_series(q)
    return li3_series(math.exp(-q))


def trilog(z: float) -> float:
    """Trilogarithm ``Li3(z)`` for ``0 <= z <= 1``."""
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"trilog is implemented on [0, 1] only, got {z}")
    if z == 0.0:
        return 0.0
    if z <= LI3_SWITCH:
        return li3_series(z)
    return li3_log_series(-math.log(z))


def zeta3() -> float:
    return ZETA3


# --- Bernoulli numbers ----------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli(n: int) -> Fraction:
    """B_n from ``sum_{k<=n} C(n+1, k) B_k = 0`` with ``B_0 = 1`` (so ``B_1 = -1/2``)."""
    if n == 0:
        return Fraction(1)
    acc = sum(math.comb(n + 1, k) * _bernoulli(k) for k in range(n))
    return -acc / (n + 1)


def bernoulli_2m(m: int) -> float:
    """Even Bernoulli number ``B_{2m}`` for ``1 <= m <= 20``."""
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= 20:
        raise DomainError(f"bernoulli_2m needs an integer 1 <= m <= 20, got {m!r}")
    return float(_bernoulli(2 * int(m)))


# --- zero-frequency multipole sum -----------------------------------------

def multipole_sum_series(y, lmax: int | None = None):
    """Literal ``sum_{l>=1} l/(l+1) y^(2l)/(2l)!``; truncated at ``lmax`` if given."""
    y = np.asarray(y, dtype=float)
    y2 = y * y
    term = np.ones_like(y)
    total = np.zeros_like(y)
    l = 0
    while True:
        l += 1
        term = term * y2 / ((2 * l - 1) * (2 * l))
        contrib = term * (l / (l + 1))
        total = total + contrib
        if lmax is not None:
            if l >= lmax:
                break
        elif np.all(contrib <= _EPS * 1e-2 * total):
            break
    return total


def multipole_sum_closed(y, scaled: bool = False):
    """Closed form ``cosh y - 2 sinh(y)/y + 2 (cosh y - 1)/y^2`` (large-y branch)."""
    y = np.asarray(y, dtype=float)
    if scaled:
        em = np.exp(-y)
        e2 = em * em
        return 0.5 * (1.0 + e2) - (1.0 - e2) / y + ((1.0 - em) / y) ** 2
    return np.cosh(y) - 2.0 * np.sinh(y) / y + (2.0 * np.sinh(0.5 * y) / y) ** 2


def multipole_sum_A(y, scaled: bool = False):
    """Stabilized multipole sum ``A(y)``; ``scaled`` returns ``exp(-y) A(y)``.

    Accepts scalars or arrays.  The scaled form is safe for very large ``y``.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(~(y_arr > 0)):
        raise DomainError("multipole_sum_A requires y > 0")
    small = y_arr < A_SERIES_BELOW
    out = np.empty_like(y_arr)
    if np.any(small):
        ys = y_arr[small]
        val = multipole_sum_series(ys)
        out[small] = val * np.exp(-ys) if scaled else val
    if np.any(~small):
        out[~small] = multipole_sum_closed(y_arr[~small], scaled=scaled)
    return out if out.ndim else float(out)


def _self_test():
    ys = np.array([0.5, 3.0, 10.0, 30.0])
    ref = multipole_sum_series(ys)
    err = np.abs(multipole_sum_closed(ys) / ref - 1.0)
    if np.any(err > 1e-13):
        raise RuntimeError(f"closed form of the multipole sum failed its self-test: {err}")


_self_test()

"""Oracle pairs run by ``casimir-pfa validate``.

Each check returns a :class:`Check` with the achieved deviation and the
tolerance it was held to.  The fast set finishes in well under a minute.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import perfreq, spa, specfun, thermo, zerofreq
from .core import SpectralPoint


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    achieved: float
    tolerance: float
    detail: str = ""

    def as_dict(self):
        d = asdict(self)
        d["passed"] = bool(self.passed)
        d["achieved"] = float(self.achieved)
        return d


def _rel(a, b):
    return abs(a - b) / abs(b)


def _max_check(name, pairs, tol, detail=""):
    worst = max(_rel(a, b) for a, b in pairs)
    return Check(name, bool(worst <= tol), worst, tol, detail)


# --- saddle-point model families ---------------------------------------------

def gamma_family(R: float, step_scale: float = spa.DEFAULT_STEP):
    """``int_0^inf exp(-R (t - log t)) dt``; returns ``(lo, bracket, quad)``."""
    p = spa.SaddleProblem(1, lambda v: v[0] - math.log(v[0]), lambda v: 1.0, [1.0], R)
    t = spa.derivative_tensors(p, step_scale)
    lo = spa.lo_spa(p, t)
    br = spa.ntlo_bracket(t)

    # quadrature with the saddle factor exp(-R) removed
    def fun(s):
        return math.exp(-R * (s - math.log(s) - 1.0)) if s > 0 else 0.0

    width = 1.0 / math.sqrt(R)
    pts = [max(1e-12, 1.0 - 40 * width), 1.0, 1.0 + 60 * width]
    quad = sum(integrate.quad(fun, a, b, epsabs=0.0, epsrel=1e-13, limit=400)[0]
               for a, b in ((0.0, pts[0]), (pts[0], pts[1]), (pts[1], pts[2]), (pts[2], np.inf)))
    return lo * math.exp(R), br, quad


def quartic_family(R: float, alpha: float, step_scale: float = spa.DEFAULT_STEP):
    """``int exp(-R (t^2/2 + alpha t^4)) dt``; returns ``(lo, bracket, quad)``."""
    p = spa.SaddleProblem(1, lambda v: 0.5 * v[0] ** 2 + alpha * v[0] ** 4, lambda v: 1.0, [0.0], R)
    t = spa.derivative_tensors(p, step_scale)
    lo = spa.lo_spa(p, t)

    def fun(s):
        return math.exp(-R * (0.5 * s * s + alpha * s ** 4))

    cut = 40.0 / math.sqrt(R)
    quad = 2.0 * sum(integrate.quad(fun, a, b, epsabs=0.0, epsrel=1e-13, limit=400)[0]
                     for a, b in ((0.0, cut), (cut, np.inf)))
    return lo, spa.ntlo_bracket(t), quad


def quartic_coefficient_from_quadrature(alpha: float, Rs=(2000.0, 4000.0, 8000.0)) -> float:
    """``lim R (I/I_LO - 1)`` by Richardson extrapolation in ``1/R``."""
    est = []
    for R in Rs:
        lo, _, quad = quartic_family(R, alpha)
        est.append(R * (quad / lo - 1.0))
    # successive halving of 1/R: eliminate 1/R and 1/R^2 terms
    a = [2 * est[i + 1] - est[i] for i in range(len(est) - 1)]
    return (4 * a[1] - a[0]) / 3 if len(a) > 1 else a[0]


def gaussian_bracket() -> float:
    p = spa.SaddleProblem(2, lambda v: 0.5 * (v[0] ** 2 + 2.0 * v[1] ** 2), lambda v: 1.0,
                          [0.0, 0.0], 10.0)
    return spa.ntlo_bracket(spa.derivative_tensors(p))


# --- individual checks -------------------------------------------------------

def check_specfun():
    pairs = []
    for u in (1.2, 1.5, 1.8):
        pairs.append((specfun.e1_series(u), specfun.e1_cf(u)))
    for z in (1.5, 2.0, 2.5):
        pairs.append((specfun.k1_series(z) * math.exp(z), specfun.k1e_cf(z)))
    for z in (0.4, 0.5, 0.6):
        pairs.append((specfun.li3_series(z), specfun.li3_log_series(-math.log(z))))
    return _max_check("specfun switchover agreement", pairs, 1e-11, "E1, K1, Li3 on both sides of each switch")


def check_trilog_identity():
    q = 0.6
    return _max_check("trilog identity Li3(exp(-q)) series vs log expansion",
                      [(specfun.trilog_exp(q), specfun.li3_series(math.exp(-q)))], 1e-12)


def check_multipole_sum():
    ys = np.array([0.5, 3.0, 10.0, 30.0])
    pairs = list(zip(specfun.multipole_sum_closed(ys), specfun.multipole_sum_series(ys)))
    return _max_check("multipole sum closed form vs series", pairs, 1e-13)


def check_perfreq_closed_forms():
    pairs = []
    for q in (0.3, 1.0, 3.0):
        c = perfreq.ntlo_components(q)
        rt = perfreq.roundtrip_free_energy_ntlo(q)
        pairs += [(c.d_te, rt.d_te), (c.d_tm, rt.d_tm), (c.go_per_pol, rt.go_per_pol)]
    return _max_check("per-frequency closed forms vs round-trip sums", pairs, 1e-9)


def check_integrand_traces():
    pairs = []
    for r, u in ((1, 1.0), (2, 0.5), (3, 2.0)):
        pt = SpectralPoint.from_u(u, r)
        pairs.append((perfreq.trace_via_integrand(pt, 1e-3), perfreq.trace_ntlo(pt).total))
    return _max_check("saddle-point integrand vs NTLO traces", pairs, 1e-8)


def check_zero_temperature():
    x = 1e-3
    ratio = perfreq.zero_temp_ntlo(x) / perfreq.pfa_zero_temp(x)
    return _max_check("zero-temperature NTLO coefficient", [(ratio, (1 / 3 - 20 / math.pi ** 2) * x)], 1e-3)


def check_spa():
    gauss = abs(gaussian_bracket())
    _, br_gamma, _ = gamma_family(20.0)
    _, br_q, _ = quartic_family(20.0, 0.1)
    ach = max(gauss, abs(br_gamma - 1 / 12), abs(br_q + 0.3))
    return Check("saddle-point NTLO brackets (Gaussian, Gamma, quartic)", ach <= 1e-6, ach, 1e-6)


def check_trace_identity():
    x = 0.05
    tr = zerofreq.roundtrip_traces(x, r_max=1)[0]
    return _max_check("Nystrom single round-trip trace vs radial integral",
                      [(tr, zerofreq.trace_identity_oracle(x))], 1e-8)


def check_fig2_trend():
    xs = (0.1, 0.05, 0.02)
    res = [f - zerofreq.f0_te_asympt(x) for x, f in
           ((x, zerofreq.f0_te_exact(x).value) for x in xs)]
    ok = all(r > 0 for r in res) and all(a > b for a, b in zip(res, res[1:]))
    return Check("exact minus asymptotic TE residual decreasing", ok, max(res), 0.5,
                 "residuals " + ", ".join(f"{r:.6f}" for r in res))


def check_log_slopes():
    xs = np.logspace(-6, -4, 9)
    nt = zerofreq.fit_log_coefficients(xs, [zerofreq.ntlo_rsum(x) for x in xs], (1, 0))[1]
    lo = zerofreq.fit_log_coefficients(
        xs, [zerofreq.lo_rsum(x) + specfun.ZETA3 / (4 * x) for x in xs])[2]
    ach = max(_rel(nt, -1 / 24), _rel(lo, 1 / 8))
    return Check("round-trip sum log coefficients", ach <= 0.05, ach, 0.05,
                 f"NTLO log slope {nt:.6f}, LO log^2 coefficient {lo:.6f}")


def check_euler_maclaurin():
    pairs = [(thermo.euler_maclaurin(lambda n: math.exp(-n), M=4).value, 1 / (math.e - 1)),
             (thermo.euler_maclaurin(lambda n: 1 / n ** 2, M=5, n_direct=9).value, math.pi ** 2 / 6)]
    worst = max(abs(a - b) for a, b in pairs)
    return Check("Euler-Maclaurin vs closed sums (absolute)", worst <= 1e-8, worst, 1e-8)


def check_delta():
    d = thermo.delta(1e-3, 0.1)
    gap = _rel(d.delta_assembled, d.delta_formula)
    val = thermo.delta_formula(1e-3, 3e-2)
    ok = gap <= 0.1 and abs(val + 1.191e-3) <= 1e-6
    return Check("relative thermal correction: formula value and assembly", ok, gap, 0.1,
                 f"formula at (1e-3, 3e-2) = {val:.6e}")


def check_coefficients():
    audit = zerofreq.coefficient_audit()
    return Check("zero-frequency coefficient audit", audit["consistent"], 0.0, 0.0, audit["outcome"])


CHECKS: tuple[Callable[[], Check], ...] = (
    check_specfun, check_trilog_identity, check_multipole_sum, check_perfreq_closed_forms,
    check_integrand_traces, check_zero_temperature, check_spa, check_trace_identity,
    check_fig2_trend, check_log_slopes, check_euler_maclaurin, check_delta, check_coefficients,
)


def run_all(checks=CHECKS) -> dict:
    results = []
    for fn in checks:
        try:
            results.append(fn())
        except Exception as exc:  # keep the report going
            results.append(Check(fn.__name__, False, math.nan, math.nan,
                                 f"{type(exc).__name__}: {exc}"))
    return {
        "passed": bool(all(c.passed for c in results)),
        "checks": [c.as_dict() for c in results],
        "coefficient_audit": zerofreq.coefficient_audit(),
    }

"""Laplace-type (saddle-point) approximation of ``int g exp(-R f) d^d x``.

For large ``R`` the integral behaves as ``I_LO + I_NTLO / R + O(R^-2)``.
:func:`lo_spa` and :func:`ntlo_spa` evaluate the two terms from the
derivative tensors of ``f`` and ``g`` at a non-degenerate minimum of ``f``.
Problems with a degenerate saddle manifold are refused; the physics
modules work with already-reduced one-dimensional integrals instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import _fd
from .core import DomainError, NumericError

DEFAULT_STEP = 0.1


class SingularHessianError(DomainError):
    """Hessian at the saddle point is singular or not positive definite."""


@dataclass(frozen=True)
class SaddleProblem:
    """Integral ``int g(x) exp(-R f(x)) d^d x`` with a saddle point at ``sp``.

    ``f`` and ``g`` take a length-``dim`` numpy array and return a float.
    """

    dim: int
    f: Callable[[np.ndarray], float]
    g: Callable[[np.ndarray], float]
    sp: Sequence[float]
    large_param: float
    grad_tol: float = 1e-6

    def __post_init__(self):
        if self.dim < 1 or len(self.sp) != self.dim:
            raise DomainError("sp must have exactly dim components")
        if not self.large_param > 0:
            raise DomainError("large_param must be positive")


@dataclass(frozen=True)
class DerivativeTensors:
    f_val: float
    hessian: np.ndarray
    third: np.ndarray
    fourth: np.ndarray
    g_val: float
    g_grad: np.ndarray
    g_hess: np.ndarray


def _symmetric_tensor(fun, point, steps, order):
    d = len(point)
    out = np.zeros((d,) * order)
    for idx in itertools.combinations_with_replacement(range(d), order):
        counts = [idx.count(i) for i in range(d)]
        val, _ = _fd.mixed_partial(fun, point, counts, steps)
        for perm in set(itertools.permutations(idx)):
            out[perm] = val
    return out


def derivative_tensors(p: SaddleProblem, step_scale: float = DEFAULT_STEP) -> DerivativeTensors:
    """Numerical derivative tensors of ``f`` (orders 1-4) and ``g`` (0-2) at ``p.sp``.

    Central stencils start from ``h_i = step_scale * max(1, |sp_i|)`` and
    are refined by Richardson extrapolation.  Raises :class:`DomainError`
    if the gradient of ``f`` does not vanish at ``sp``.
    """
    sp = np.asarray(p.sp, dtype=float)
    steps = step_scale * np.maximum(1.0, np.abs(sp))

    def checked(fun, name):
        def wrapped(x):
            v = float(fun(x))
            if not math.isfinite(v):
                raise NumericError(f"{name} is not finite at {x.tolist()}")
            return v
        return wrapped

    f = checked(p.f, "f")
    g = checked(p.g, "g")

    grad = _symmetric_tensor(f, sp, steps, 1)
    if np.max(np.abs(grad)) > p.grad_tol * max(1.0, abs(f(sp))):
        raise DomainError(f"gradient of f does not vanish at sp: {grad.tolist()}")

    return DerivativeTensors(
        f_val=f(sp),
        hessian=_symmetric_tensor(f, sp, steps, 2),
        third=_symmetric_tensor(f, sp, steps, 3),
        fourth=_symmetric_tensor(f, sp, steps, 4),
        g_val=g(sp),
        g_grad=_symmetric_tensor(g, sp, steps, 1),
        g_hess=_symmetric_tensor(g, sp, steps, 2),
    )


def _inverse_hessian(hess):
    hess = np.atleast_2d(hess)
    det = np.linalg.det(hess)
    scale = np.max(np.abs(hess)) ** hess.shape[0]
    if abs(det) < 1e-14 * scale:
        raise SingularHessianError(
            "singular Hessian: the saddle point is degenerate (a saddle manifold); "
            "reduce the integral over the manifold before applying the approximation")
    if np.min(np.linalg.eigvalsh(hess)) <= 0:
        raise SingularHessianError("Hessian is not positive definite at the saddle point")
    return det, np.linalg.inv(hess)


def lo_spa(p: SaddleProblem, t: DerivativeTensors) -> float:
    """Leading term ``(2 pi/R)^(d/2) exp(-R f_sp) g_sp / sqrt(det H)``."""
    det, _ = _inverse_hessian(t.hessian)
    R = p.large_param
    return (2 * math.pi / R) ** (p.dim / 2) * math.exp(-R * t.f_val) * t.g_val / math.sqrt(det)


def ntlo_bracket(t: DerivativeTensors) -> float:
    """Relative next-to-leading coefficient, ``I_NTLO / I_LO``."""
    _, Hi = _inverse_hessian(t.hessian)
    f3, f4 = t.third, t.fourth
    g0, g1, g2 = t.g_val, t.g_grad, t.g_hess
    term_g2 = 0.5 * np.einsum("ij,ij->", g2, Hi) / g0
    term_g1 = -0.5 * np.einsum("ijk,l,ij,kl->", f3, g1, Hi, Hi) / g0
    term_f4 = -0.125 * np.einsum("ijkl,ij,kl->", f4, Hi, Hi)
    term_f3 = (3 * np.einsum("ijk,lmn,ij,kl,mn->", f3, f3, Hi, Hi, Hi)
               + 2 * np.einsum("ijk,lmn,il,jm,kn->", f3, f3, Hi, Hi, Hi)) / 24
    return float(term_g2 + term_g1 + term_f4 + term_f3)


def ntlo_spa(p: SaddleProblem, t: DerivativeTensors) -> float:
    """Next-to-leading term ``I_NTLO`` with ``I ~ I_LO + I_NTLO / R``."""
    return lo_spa(p, t) * ntlo_bracket(t)


def ntlo_bracket_1d(f2: float, f3: float, f4: float, g0: float, g1: float, g2: float) -> float:
    """One-dimensional form of :func:`ntlo_bracket` written out term by term."""
    return (0.5 * g2 / (g0 * f2)
            - 0.5 * g1 * f3 / (g0 * f2 ** 2)
            - 0.125 * f4 / f2 ** 2
            + 5.0 / 24.0 * f3 ** 2 / f2 ** 3)


def gamma_matrix(r: int) -> np.ndarray:
    """Circulant second-difference matrix of the round-trip Hessian (``Gamma_r``)."""
    if r < 2:
        raise DomainError("gamma_matrix needs r >= 2")
    if r == 2:
        return np.array([[2.0, -2.0], [-2.0, 2.0]])
    m = 2.0 * np.eye(r)
    for j in range(r):
        m[j, (j + 1) % r] = m[j, (j - 1) % r] = -1.0
    return m


def circulant_eigenvalues(r: int, kappa: float) -> np.ndarray:
    """Eigenvalues ``(2/kappa) sin^2(pi j / r)``, ``j = 0..r-1``, of ``Gamma_r / (2 kappa)``."""
    if r < 2:
        raise DomainError("circulant_eigenvalues needs r >= 2")
    j = np.arange(r)
    return 2.0 / kappa * np.sin(np.pi * j / r) ** 2


def locate_saddle(f, x0, tol: float = 1e-12) -> np.ndarray:
    """Local minimizer of ``f`` near ``x0`` (a convenience for building problems)."""
    res = optimize.minimize(lambda x: f(np.asarray(x)), np.asarray(x0, dtype=float),
                            method="BFGS", options={"gtol": tol})
    return res.x

import math

import numpy as np
import pytest

from casimir_pfa import spa, validation
from casimir_pfa._fd import central_weights, derivative, mixed_partial
from casimir_pfa.core import DomainError


def test_central_weights_reproduce_polynomials():
    for order in range(1, 7):
        offs, w = central_weights(order)
        # exact on t^order
        val = sum(wk * o ** order for o, wk in zip(offs, w))
        assert val == pytest.approx(math.factorial(order))


def test_derivative_of_exponential():
    for order in range(1, 10):
        val, err = derivative(math.exp, 0.3, order, 1.0)
        assert val == pytest.approx(math.exp(0.3), rel=1e-6)


def test_mixed_partial():
    f = lambda v: math.sin(v[0]) * math.exp(2 * v[1])
    val, _ = mixed_partial(f, [0.4, 0.1], [1, 2], [0.1, 0.1])
    assert val == pytest.approx(4 * math.cos(0.4) * math.exp(0.2), rel=1e-8)


def test_gaussian_bracket_vanishes():
    assert abs(validation.gaussian_bracket()) < 1e-10


def test_gaussian_lo_is_exact():
    p = spa.SaddleProblem(2, lambda v: 0.5 * (v[0] ** 2 + 2 * v[1] ** 2), lambda v: 3.0, [0, 0], 5.0)
    t = spa.derivative_tensors(p)
    assert spa.lo_spa(p, t) == pytest.approx(3.0 * 2 * math.pi / 5.0 / math.sqrt(2.0), rel=1e-10)


def test_gamma_family_bracket():
    _, br, _ = validation.gamma_family(10.0)
    assert br == pytest.approx(1 / 12, rel=1e-6)


def test_gamma_family_remainder_is_second_order():
    scaled = []
    for R in (10.0, 20.0, 40.0, 80.0):
        lo, br, quad = validation.gamma_family(R)
        scaled.append(R * R * abs(quad / lo - 1 - br / R))
    # the next Stirling coefficient is 1/288
    assert max(scaled) < 2 / 288
    assert scaled[-1] == pytest.approx(1 / 288, rel=0.02)


@pytest.mark.parametrize("alpha", [0.02, 0.1, 0.25])
def test_quartic_family(alpha):
    _, br, _ = validation.quartic_family(20.0, alpha)
    assert br == pytest.approx(-3 * alpha, abs=1e-6)
    assert validation.quartic_coefficient_from_quadrature(alpha) == pytest.approx(-3 * alpha, abs=1e-6)


def test_cubic_terms_and_g_derivatives_match_1d_formula():
    # f = t - log(1 + t) around 0, g = exp(t) (1 + t^2)
    f = lambda v: v[0] - math.log1p(v[0])
    g = lambda v: math.exp(v[0]) * (1 + v[0] ** 2)
    t = spa.derivative_tensors(spa.SaddleProblem(1, f, g, [0.0], 30.0))
    ref = spa.ntlo_bracket_1d(1.0, -2.0, 6.0, 1.0, 1.0, 3.0)
    assert spa.ntlo_bracket(t) == pytest.approx(ref, rel=1e-7)


def test_two_dimensional_mixed_third_derivative():
    f = lambda v: 0.5 * (v[0] ** 2 + v[1] ** 2) + v[0] ** 2 * v[1]
    t = spa.derivative_tensors(spa.SaddleProblem(2, f, lambda v: 1.0, [0.0, 0.0], 10.0))
    assert t.third[0, 0, 1] == pytest.approx(2.0, abs=1e-7)
    assert t.third[1, 0, 0] == t.third[0, 0, 1]
    # two-dimensional f3 f3 contraction: (3 * 4 + 2 * 12) / 24 with H = 1
    assert spa.ntlo_bracket(t) == pytest.approx((3 * 4 + 2 * 12) / 24, rel=1e-6)


def test_degenerate_saddle_refused():
    p = spa.SaddleProblem(2, lambda v: (v[0] - v[1]) ** 2, lambda v: 1.0, [0.0, 0.0], 10.0)
    with pytest.raises(spa.SingularHessianError, match="saddle manifold"):
        spa.lo_spa(p, spa.derivative_tensors(p))


def test_nonzero_gradient_refused():
    p = spa.SaddleProblem(1, lambda v: (v[0] - 1) ** 2, lambda v: 1.0, [0.5], 10.0)
    with pytest.raises(DomainError, match="gradient"):
        spa.derivative_tensors(p)


def test_problem_validation():
    with pytest.raises(DomainError):
        spa.SaddleProblem(2, lambda v: 0.0, lambda v: 1.0, [0.0], 1.0)
    with pytest.raises(DomainError):
        spa.SaddleProblem(1, lambda v: 0.0, lambda v: 1.0, [0.0], 0.0)


@pytest.mark.parametrize("r", [2, 3, 5, 8])
def test_gamma_matrix_spectrum(r):
    kappa = 1.7
    ev = np.sort(np.linalg.eigvalsh(spa.gamma_matrix(r) / (2 * kappa)))
    if r == 2:
        # the two-round-trip matrix carries both neighbour couplings on one entry
        assert np.allclose(ev, [0.0, 2.0 / kappa])
    else:
        assert np.allclose(ev, np.sort(spa.circulant_eigenvalues(r, kappa)))
    assert abs(ev[0]) < 1e-12


def test_gamma_matrix_domain():
    with pytest.raises(DomainError):
        spa.gamma_matrix(1)
    with pytest.raises(DomainError):
        spa.circulant_eigenvalues(1, 1.0)


def test_locate_saddle():
    x = spa.locate_saddle(lambda v: (v[0] - 2) ** 2 + (v[1] + 1) ** 2 + 0.1 * v[0] ** 4, [0, 0])
    p = spa.SaddleProblem(2, lambda v: (v[0] - 2) ** 2 + (v[1] + 1) ** 2 + 0.1 * v[0] ** 4,
                          lambda v: 1.0, x, 10.0)
    spa.derivative_tensors(p)

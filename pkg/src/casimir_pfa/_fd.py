"""Central finite differences with Richardson (Ridders) extrapolation."""

from __future__ import annotations

import itertools
import math

import numpy as np


def central_weights(order: int):
    """Offsets (in units of h) and weights of the binomial central stencil.

    ``sum w_k f(x + o_k h) / h**order = f^(order)(x) + O(h^2)``; the error
    expansion is even in ``h`` for every order.
    """
    offsets = [order / 2 - k for k in range(order + 1)]
    weights = [(-1) ** k * math.comb(order, k) for k in range(order + 1)]
    return offsets, weights


def ridders(estimate, h0: float, shrink: float = 1.6, levels: int = 10):
    """Extrapolate ``estimate(h)`` (error even in ``h``) to ``h -> 0``.

    Returns ``(value, error_estimate)``.
    """
    fac = shrink * shrink
    h = h0
    table = [[estimate(h)]]
    best, err = table[0][0], math.inf
    for i in range(1, levels):
        h /= shrink
        row = [estimate(h)]
        factor = fac
        for j in range(1, i + 1):
            row.append((row[j - 1] * factor - table[i - 1][j - 1]) / (factor - 1.0))
            factor *= fac
            e = max(abs(row[j] - row[j - 1]), abs(row[j] - table[i - 1][j - 1]))
            if e <= err:
                err, best = e, row[j]
        table.append(row)
        if abs(row[i] - table[i - 1][i - 1]) >= 2.0 * err:
            break
    return best, err


def derivative(fun, x: float, order: int, h0: float):
    """``order``-th derivative of a scalar function of one variable."""
    offsets, weights = central_weights(order)
    x = float(x)

    def est(h):
        return math.fsum(w * fun(x + o * h) for o, w in zip(offsets, weights)) / h ** order

    return ridders(est, h0)


def mixed_partial(fun, point, counts, steps):
    """Mixed partial derivative ``d^|counts| fun / prod dx_i^counts[i]`` at ``point``.

    ``steps`` holds the initial per-axis step; all axes shrink together.
    """
    point = np.asarray(point, dtype=float)
    axes = [i for i, c in enumerate(counts) if c]
    stencils = [central_weights(counts[i]) for i in axes]

    def est(s):
        acc = []
        for combo in itertools.product(*[list(zip(*st)) for st in stencils]):
            p = point.copy()
            w = 1.0
            for ax, (o, wk) in zip(axes, combo):
                p[ax] += o * s * steps[ax]
                w *= wk
            acc.append(w * fun(p))
        scale = 1.0
        for ax in axes:
            scale *= (s * steps[ax]) ** counts[ax]
        return math.fsum(acc) / scale

    return ridders(est, 1.0)

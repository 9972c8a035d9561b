"""Quadrature helpers used for cross-checks against closed forms."""

import numpy as np
from scipy.integrate import simpson

DEFAULT_NODES = 2**12 + 1


def simpson_integral(f, a, b, nodes=DEFAULT_NODES):
    """Composite Simpson rule for a vectorized smooth integrand on [a, b]."""
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("nodes must be odd and >= 3")
    x = np.linspace(a, b, nodes)
    return float(simpson(f(x), x=x))


def piecewise_gauss(f, breakpoints, a, b, order=16):
    """Integrate ``f`` over [a, b], treating each gap between breakpoints as a
    separate smooth piece (Gauss-Legendre of the given order on each piece).

    Suited to step functions whose jumps sit at ``breakpoints``.
    """
    cuts = np.unique(np.clip(np.asarray(breakpoints, dtype=float), a, b))
    edges = np.concatenate(([a], cuts, [b]))
    edges = edges[np.concatenate(([True], np.diff(edges) > 0))]
    lo, hi = edges[:-1], edges[1:]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    # evaluate at interior nodes only, so the value at a jump point never matters
    x = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return float(np.sum(half[:, None] * weights[None, :] * vals))

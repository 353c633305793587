"""
Quadrature rules and Chebyshev collocation points on sub-intervals of the line.
"""
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


@lru_cache(maxsize=64)
def _leggauss(npts):
    x, w = legendre.leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_nodes(lo, hi, npts):
    """Gauss–Legendre nodes and weights on [lo, hi]."""
    x, w = _leggauss(int(npts))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def panel_nodes(breaks, npts):
    """Gauss–Legendre rule with `npts` nodes on every panel between consecutive breaks."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(int(npts))
    lo = breaks[:-1, None]
    half = 0.5 * np.diff(breaks)[:, None]
    points = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return points.ravel(), weights.ravel()


def panel_count(kernel_degree, panel_nodes_setting=None):
    """Nodes per panel exact for a degree-d kernel times a cubic: ceil((d + 4) / 2)."""
    if panel_nodes_setting:
        return int(panel_nodes_setting)
    return max(2, math.ceil((kernel_degree + 4) / 2))


@lru_cache(maxsize=64)
def _cgl_unit(M):
    # Chebyshev–Gauss–Lobatto points on [-1, 1], ascending.
    x = -np.cos(np.pi * np.arange(M) / (M - 1))
    x.setflags(write=False)
    return x


def cgl_nodes(M, lo=-1.0, hi=0.0):
    """M Chebyshev–Gauss–Lobatto nodes mapped onto [lo, hi], ascending."""
    if M < 2:
        raise ValueError(f'need at least 2 collocation nodes, got {M}')
    x = _cgl_unit(M)
    return lo + 0.5 * (hi - lo) * (x + 1.0)


def barycentric_weights(M):
    """Barycentric weights for CGL nodes (scale-free)."""
    w = (-1.0) ** np.arange(M)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def interpolation_matrix(nodes, weights, points):
    """Matrix L with L[q, j] = l_j(points[q]) for the Lagrange basis on `nodes`."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    diff = points[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-14)
    diff[exact] = 1.0
    terms = weights[None, :] / diff
    L = terms / terms.sum(axis=1, keepdims=True)
    rows = np.flatnonzero(exact.any(axis=1))
    for q in rows:
        L[q] = exact[q].astype(float)
    return L

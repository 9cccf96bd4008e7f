"""Small quadrature helpers shared by the model and window modules."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [a, b]."""
    nodes, weights = _leggauss(int(n))
    half = 0.5 * (b - a)
    return half * nodes + 0.5 * (a + b), half * weights


def composite_gauss_legendre(n_per_panel: int, edges):
    """Gauss-Legendre rule applied panel by panel over consecutive ``edges``."""
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(n_per_panel, lo, hi)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)

"""Numerical consistency checks used by the tests, the acceptance runner and the CLI."""

from __future__ import annotations

import numpy as np

from .pt_model import HALF_PI


def fd_second_derivative(fn, x, h):
    """Fourth-order central difference of ``fn`` at ``x``."""
    x = np.asarray(x, dtype=float)
    f = [fn(x + k * h) for k in (-2, -1, 0, 1, 2)]
    return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)


def eigen_residual(fn, potential, energy, *, margin=0.05, points=2001, h=1e-3):
    """Relative L2 residual ||(-1/2 d^2 + V - E) psi|| / ||E psi|| on an interior grid."""
    x = np.linspace(margin, HALF_PI - margin, points)
    psi = fn(x)
    res = -0.5 * fd_second_derivative(fn, x, h) + (potential(x) - energy) * psi
    return float(np.linalg.norm(res) / np.linalg.norm(energy * psi))


def gram_defect(table, weights):
    """max |<psi_n, psi_m> - delta_nm| for rows of ``table``."""
    gram = (table * weights) @ table.T
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

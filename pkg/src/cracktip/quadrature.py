"""Quadrature rules for integrands with crack-tip singularities.

Integrals over ``B_R`` minus the slit are taken in polar coordinates. The
radial direction is split into geometric annuli ``[R q^(m+1), R q^m]`` so that
powers ``r^p`` and ``r^p ln r`` are resolved uniformly down to the tip; each
annulus and the angular interval ``(-pi, pi)`` use Gauss-Legendre nodes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-1, 1]``."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def interval_rule(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=32)
def _annular_nodes(radius: float, n_rings: int, ratio: float, order: int):
    edges = radius * ratio ** np.arange(n_rings + 1)
    x, w = gauss_legendre(order)
    lo, hi = edges[1:], edges[:-1]
    half = 0.5 * (hi - lo)
    r = (lo[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wr = (half[:, None] * w[None, :]).ravel()
    return r, wr


def angular_rule(n_phi: int = 96, panels: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``(-pi, pi)``."""
    edges = np.linspace(-np.pi, np.pi, panels + 1)
    nodes, weights = [], []
    per = max(n_phi // panels, 4)
    for a, b in zip(edges[:-1], edges[1:]):
        p, w = interval_rule(a, b, per)
        nodes.append(p)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def slit_disk_integral(func, radius: float = 1.0, n_rings: int = 60, ratio: float = 0.5, order: int = 20, n_phi: int = 96):
    """Integrate ``func(r, phi)`` over the slit disk of the given radius.

    ``func`` must accept broadcast arrays and return values without the
    polar Jacobian; the factor ``r`` is applied here. The innermost disk of
    radius ``radius * ratio**n_rings`` is dropped.
    """
    r, wr = _annular_nodes(float(radius), int(n_rings), float(ratio), int(order))
    p, wp = angular_rule(n_phi)
    vals = func(r[:, None], p[None, :])
    return float(np.einsum("i,ij,j->", wr * r, vals, wp))


def annulus_integral(func, r_in: float, r_out: float, n_rings: int = 8, order: int = 20, n_phi: int = 96):
    """Integrate ``func(r, phi)`` over ``r_in < r < r_out`` minus the slit."""
    edges = np.geomspace(r_in, r_out, n_rings + 1) if r_in > 0 else np.linspace(0.0, r_out, n_rings + 1)
    p, wp = angular_rule(n_phi)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        r, wr = interval_rule(a, b, order)
        total += float(np.einsum("i,ij,j->", wr * r, func(r[:, None], p[None, :]), wp))
    return total

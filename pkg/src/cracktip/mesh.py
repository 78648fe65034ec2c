"""Graded polar meshes of the unit disk slit along a crack graph.

Reference coordinates ``(s, theta)`` with ``s in [0, 1]`` and
``theta in [-pi, pi]`` are mapped to

    x = c + s R(th) (cos th, sin th),   th = theta + psi(s) - pi,

where ``c`` is the crack tip, ``R(th)`` the distance from ``c`` to the unit
circle in direction ``th`` and ``psi(s)`` the angle (seen from the tip) of the
crack point on the ring ``s``. The rays ``theta = -pi`` and ``theta = pi`` both
land on the crack and carry separate nodes, which gives two-sided traces.
Rings are spaced geometrically toward the tip so that element size is
proportional to the distance from the tip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .crack import CrackGeometryError, CrackGraph

DEFAULT_H = 0.05
DEFAULT_S_MIN = 1e-6


def _ray_to_circle(c: np.ndarray, th):
    """Distance from ``c`` (inside the unit disk) to the unit circle along ``th``."""
    ex, ey = np.cos(th), np.sin(th)
    b = c[0] * ex + c[1] * ey
    cc = c[0] ** 2 + c[1] ** 2 - 1.0
    return -b + np.sqrt(b * b - cc)


@dataclass
class SlitDiskMesh:
    nodes: np.ndarray
    tris: np.ndarray
    s: np.ndarray  # ring radii in reference coordinates, s[0] = 0
    n_theta: int
    tip: np.ndarray
    psi: np.ndarray  # crack angle per ring seen from the tip
    node_s: np.ndarray
    node_theta: np.ndarray
    crack: CrackGraph = field(repr=False)
    h: float = DEFAULT_H

    @property
    def n_rings(self) -> int:
        return self.s.size - 1

    def node_index(self, ring: int, j: int) -> int:
        if ring == 0:
            return 0
        return 1 + (ring - 1) * (self.n_theta + 1) + j

    @property
    def boundary(self) -> np.ndarray:
        i = self.n_rings
        return np.arange(self.node_index(i, 0), self.node_index(i, self.n_theta) + 1)

    @property
    def upper_face(self) -> np.ndarray:
        """Nodes on the upper crack face, from the tip outward (tip included)."""
        return np.array([0] + [self.node_index(i, self.n_theta) for i in range(1, self.n_rings + 1)])

    @property
    def lower_face(self) -> np.ndarray:
        return np.array([0] + [self.node_index(i, 0) for i in range(1, self.n_rings + 1)])

    def tip_polar(self):
        """Distance and angle about the tip, angle continuous off the crack.

        The angle lies in ``(psi - 2 pi, psi]`` on each ring so that the cut
        runs along the crack.
        """
        d = self.nodes - self.tip
        rho = np.hypot(d[:, 0], d[:, 1])
        psi = np.interp(self.node_s, self.s, self.psi)
        ang = self.node_theta + psi - np.pi
        return rho, ang

    def origin_polar(self):
        """Distance and angle about the origin with the cut along the crack.

        Only meaningful when the crack separates the angle range, i.e. for
        cracks running from the tip to the boundary on the left.
        """
        rho = np.hypot(self.nodes[:, 0], self.nodes[:, 1])
        ang = np.arctan2(self.nodes[:, 1], self.nodes[:, 0])
        _, tip_ang = self.tip_polar()
        # choose the 2 pi branch closest to the tip-centered angle
        ang = ang + 2.0 * np.pi * np.round((tip_ang - ang) / (2.0 * np.pi))
        return rho, ang

    def boundary_angles(self) -> np.ndarray:
        """Polar angle about the origin of the boundary nodes, cut at the crack exit."""
        b = self.boundary
        xy = self.nodes[b]
        ang = np.arctan2(xy[:, 1], xy[:, 0])
        exit_ang = math.atan2(*self.crack_exit()[::-1])
        # the exit sits near phi = pi; keep that branch even when it dips below the axis
        exit_ang += 2.0 * math.pi * round((math.pi - exit_ang) / (2.0 * math.pi))
        # unwrap into (exit - 2 pi, exit]
        ang = exit_ang - np.mod(exit_ang - ang, 2.0 * np.pi)
        ang[0] = exit_ang - 2.0 * np.pi
        ang[-1] = exit_ang
        return ang

    def crack_exit(self) -> np.ndarray:
        return self.nodes[self.upper_face[-1]]


def ring_radii(h: float = DEFAULT_H, s_min: float = DEFAULT_S_MIN) -> np.ndarray:
    """Geometric ring radii ``1, 1/(1+h), ...`` down to ``s_min``, with 0 prepended."""
    n = int(math.ceil(math.log(1.0 / s_min) / math.log1p(h)))
    s = (1.0 + h) ** -np.arange(n, -1, -1, dtype=np.float64)
    s[-1] = 1.0
    return np.concatenate([[0.0], s])


def n_theta_for(h: float) -> int:
    n = int(math.ceil(2.0 * math.pi / h))
    return n + (n % 4 and 4 - n % 4)


def _crack_psi(crack: CrackGraph, tip: np.ndarray, s_rings: np.ndarray) -> np.ndarray:
    x_exit = crack.circle_crossing(1.0)
    pts = crack.polyline(refine=8)
    keep = pts[:, 0] > x_exit
    pts = np.vstack([pts[keep], [[x_exit, float(crack(x_exit))]]])
    d = pts[1:] - tip
    rho = np.hypot(d[:, 0], d[:, 1])
    ang = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    # continue around pi
    ang += 2.0 * np.pi * np.round((np.pi - ang[0]) / (2.0 * np.pi))
    s_pts = rho / _ray_to_circle(tip, ang)
    if np.any(np.diff(s_pts) <= 0.0):
        raise CrackGeometryError("crack is not star-shaped about its tip; mesh generation failed")
    s_pts[-1] = 1.0
    s_pts = np.concatenate([[0.0], s_pts])
    ang = np.concatenate([[ang[0]], ang])
    return np.interp(s_rings, s_pts, ang)


def build_mesh(crack: CrackGraph, h: float = DEFAULT_H, s_min: float = DEFAULT_S_MIN) -> SlitDiskMesh:
    """Triangulate the unit disk minus the crack.

    Parameters
    ----------
    crack : CrackGraph
    h : float
        Relative element size: about ``h`` times the distance to the tip.
    s_min : float
        Radius (relative) of the innermost ring.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    tip = crack.tip
    if tip[0] ** 2 + tip[1] ** 2 >= 1.0:
        raise CrackGeometryError("tip must lie inside the unit disk")
    s = ring_radii(h, s_min)
    nt = n_theta_for(h)
    psi = _crack_psi(crack, tip, s)
    theta = np.linspace(-np.pi, np.pi, nt + 1)

    n_r = s.size - 1
    ss = np.repeat(s[1:], nt + 1)
    tt = np.tile(theta, n_r)
    th = tt + np.repeat(psi[1:], nt + 1) - np.pi
    rr = ss * _ray_to_circle(tip, th)
    xy = np.stack([tip[0] + rr * np.cos(th), tip[1] + rr * np.sin(th)], axis=1)
    nodes = np.vstack([tip[None, :], xy])
    node_s = np.concatenate([[0.0], ss])
    node_theta = np.concatenate([[0.0], tt])

    # fan around the tip
    j = np.arange(nt)
    fan = np.stack([np.zeros(nt, dtype=np.int64), 1 + j, 2 + j], axis=1)
    # quads between rings; diagonals mirrored about theta = 0
    i = np.arange(1, n_r)
    base_in = (1 + (i - 1) * (nt + 1))[:, None] + j[None, :]
    base_out = base_in + (nt + 1)
    a, b, c, d = base_in, base_out, base_out + 1, base_in + 1
    left = (j < nt // 2)[None, :]
    t1 = np.where(left[..., None], np.stack([a, b, c], -1), np.stack([a, b, d], -1))
    t2 = np.where(left[..., None], np.stack([a, c, d], -1), np.stack([b, c, d], -1))
    tris = np.vstack([fan, t1.reshape(-1, 3), t2.reshape(-1, 3)]).astype(np.int64)
    # orient counter-clockwise
    p = nodes[tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    if np.any(det == 0.0) or (np.any(det > 0.0) and np.any(det < 0.0)):
        raise CrackGeometryError("tangled or degenerate elements; mesh generation failed")
    if det[0] < 0.0:
        tris = tris[:, [0, 2, 1]]
    return SlitDiskMesh(
        nodes=nodes,
        tris=tris,
        s=s,
        n_theta=nt,
        tip=tip,
        psi=psi,
        node_s=node_s,
        node_theta=node_theta,
        crack=crack,
        h=h,
    )

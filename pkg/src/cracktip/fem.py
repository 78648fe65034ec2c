"""P1 finite elements on the slit disk.

Crack faces carry duplicated nodes, so the natural (zero-flux) condition on
both faces is built into the variational form and only the outer circle
carries Dirichlet data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .crack import CrackGraph
from .mesh import DEFAULT_H, DEFAULT_S_MIN, SlitDiskMesh, build_mesh

SOLVER_TOL = 1e-9


class SolverError(RuntimeError):
    pass


def stiffness_matrix(mesh: SlitDiskMesh) -> sp.csr_matrix:
    rows, cols, vals = _kernels.stiffness(mesh.nodes, mesh.tris)
    n = mesh.nodes.shape[0]
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def triangle_areas(mesh: SlitDiskMesh) -> np.ndarray:
    p = mesh.nodes[mesh.tris]
    return 0.5 * np.abs(
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )


@dataclass(eq=False)
class DiscreteHarmonicField:
    """Nodal P1 field on a slit-disk mesh.

    Attributes
    ----------
    mesh : SlitDiskMesh
    values : ndarray
        Nodal values (two values at each crack point, one per face).
    boundary_data : ndarray
        Values prescribed on the boundary nodes.
    solver_residual : float
        Max-norm residual of the interior equations after the solve.
    """

    mesh: SlitDiskMesh
    values: np.ndarray
    boundary_data: np.ndarray
    solver_residual: float = 0.0
    _K: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def crack(self) -> CrackGraph:
        return self.mesh.crack

    @property
    def stiffness(self) -> sp.csr_matrix:
        if self._K is None:
            self._K = stiffness_matrix(self.mesh)
        return self._K

    @cached_property
    def gradients(self) -> np.ndarray:
        return _kernels.gradients(self.mesh.nodes, self.mesh.tris, self.values)

    @cached_property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.mesh)

    def dirichlet(self, radius: float = 1.0, center=(0.0, 0.0)) -> float:
        """``int |grad u|^2`` over ``B_radius(center)`` minus the crack."""
        g2 = np.einsum("ij,ij->i", self.gradients, self.gradients)
        if radius >= 1.0 and center[0] == 0.0 and center[1] == 0.0:
            return float(np.dot(self.areas, g2))
        clip = clipped_areas(self.mesh, radius, center)
        return float(np.dot(clip, g2))

    def recovered_gradients(self) -> np.ndarray:
        """Area-weighted average of element gradients at each node."""
        return _node_average(self.mesh, self.areas, self.gradients)

    def face_energy_densities(self):
        """``|grad u|^2`` on the upper and lower faces at the ring nodes.

        Returns ``(points, upper, lower)`` from the first ring to the
        boundary; the tip node is excluded.
        """
        grad = self.recovered_gradients()
        up = self.mesh.upper_face[1:]
        lo = self.mesh.lower_face[1:]
        gu = np.einsum("ij,ij->i", grad[up], grad[up])
        gl = np.einsum("ij,ij->i", grad[lo], grad[lo])
        return self.mesh.nodes[up], gu, gl

    def energy_form(self, other: "DiscreteHarmonicField | np.ndarray", weights: np.ndarray | None = None) -> float:
        """``sum_T w_T grad u . grad v`` with ``w`` element areas by default."""
        gv = other.gradients if isinstance(other, DiscreteHarmonicField) else _kernels.gradients(
            self.mesh.nodes, self.mesh.tris, np.asarray(other, dtype=np.float64)
        )
        w = self.areas if weights is None else weights
        return float(np.dot(w, np.einsum("ij,ij->i", self.gradients, gv)))


def _node_average(mesh: SlitDiskMesh, areas: np.ndarray, elem: np.ndarray) -> np.ndarray:
    nt = mesh.tris.shape[0]
    n = mesh.nodes.shape[0]
    inc = sp.coo_matrix(
        (np.repeat(areas, 3), (mesh.tris.ravel(), np.repeat(np.arange(nt), 3))),
        shape=(n, nt),
    ).tocsr()
    total = np.asarray(inc.sum(axis=1)).ravel()
    return (inc @ elem) / total[:, None]


def clipped_areas(mesh: SlitDiskMesh, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    return _kernels.disk_clip_areas(mesh.nodes, mesh.tris, float(center[0]), float(center[1]), float(radius))


def boundary_values(mesh: SlitDiskMesh, g: Callable) -> np.ndarray:
    phi = mesh.boundary_angles()
    return np.asarray(g(phi), dtype=np.float64) * np.ones_like(phi)


def solve_on_mesh(mesh: SlitDiskMesh, g: Callable) -> DiscreteHarmonicField:
    """Discrete harmonic extension of the trace ``g(phi)`` on the given mesh."""
    K = stiffness_matrix(mesh)
    n = mesh.nodes.shape[0]
    bnd = mesh.boundary
    gb = boundary_values(mesh, g)
    free = np.ones(n, dtype=bool)
    free[bnd] = False
    u = np.zeros(n)
    u[bnd] = gb
    Kff = K[free][:, free]
    rhs = -(K[free][:, bnd] @ gb)
    if np.any(gb != 0.0):
        lu = splu(Kff.tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        u[free] = lu.solve(rhs)
    res = float(np.max(np.abs(Kff @ u[free] - rhs))) if free.any() else 0.0
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 1.0)
    if not np.isfinite(res) or res > SOLVER_TOL * scale:
        raise SolverError(f"linear solve did not converge (residual {res:.3e})")
    return DiscreteHarmonicField(mesh=mesh, values=u, boundary_data=gb, solver_residual=res, _K=K)


def solve_harmonic(
    crack: CrackGraph, g: Callable, h: float = DEFAULT_H, s_min: float = DEFAULT_S_MIN
) -> DiscreteHarmonicField:
    """Minimize ``int |grad u|^2`` over P1 functions with ``u = g`` on the circle.

    Parameters
    ----------
    crack : CrackGraph
    g : callable
        Boundary trace as a function of the polar angle about the origin,
        taken in ``(phi_e - 2 pi, phi_e]`` where ``phi_e`` is the angle at
        which the crack meets the circle.
    h : float
        Relative mesh size.
    """
    return solve_on_mesh(build_mesh(crack, h, s_min), g)


def interpolate(mesh: SlitDiskMesh, func: Callable, about: str = "tip") -> DiscreteHarmonicField:
    """Nodal interpolant of ``func(rho, ang)`` in polar coordinates.

    ``about`` selects the tip or the origin as the pole; in both cases the
    angle is cut along the crack.
    """
    rho, ang = mesh.tip_polar() if about == "tip" else mesh.origin_polar()
    vals = np.asarray(func(rho, ang), dtype=np.float64) * np.ones_like(rho)
    return DiscreteHarmonicField(mesh=mesh, values=vals, boundary_data=vals[mesh.boundary])

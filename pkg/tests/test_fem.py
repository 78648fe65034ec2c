import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cracktip.crack import CrackGeometryError, CrackGraph
from cracktip.fem import interpolate, solve_harmonic, solve_on_mesh, triangle_areas
from cracktip.mesh import build_mesh, n_theta_for, ring_radii

SQ = math.sqrt(2.0 / math.pi)


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(CrackGraph.straight(65), 0.1)


# -- crack graphs --------------------------------------------------------


def test_straight_crack_length():
    c = CrackGraph.straight(65)
    assert c.length() == pytest.approx(1.0)
    assert c.length(0.5) == pytest.approx(0.5)
    assert c.circle_crossing(1.0) == pytest.approx(-1.0)


def test_cubic_length_against_quadrature():
    f = lambda x: 0.2 * x**2
    c = CrackGraph.from_function(f, 33, x_end=-1.2, interpolation="cubic")
    x_exit = c.circle_crossing(1.0)
    ref = integrate.quad(lambda x: math.sqrt(1 + (0.4 * x) ** 2), x_exit, 0.0)[0]
    assert c.length(1.0) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize(
    "knots,values,kw",
    [
        ([0.0, 0.5], [0.0, 0.0], {}),
        ([0.0, -1.0], [0.0, 3.0], {}),
        ([0.0, -1.0, -2.0], [0.0, 0.0], {}),
        ([0.0, -1.0], [0.0, np.nan], {}),
        ([0.0, -1.0], [0.0, 0.0], {"interpolation": "quintic"}),
    ],
)
def test_crack_validation(knots, values, kw):
    with pytest.raises(CrackGeometryError):
        CrackGraph(np.array(knots), np.array(values), **kw)


def test_crack_round_trip_and_unknown_keys():
    c = CrackGraph.from_function(lambda x: 0.1 * x * x, 9)
    back = CrackGraph.from_dict(c.to_dict())
    np.testing.assert_array_equal(back.values, c.values)
    with pytest.raises(CrackGeometryError):
        CrackGraph.from_dict({**c.to_dict(), "colour": 1})


def test_crack_must_reach_circle():
    with pytest.raises(CrackGeometryError):
        CrackGraph(np.linspace(0.0, -0.5, 5), np.zeros(5)).circle_crossing()


# -- meshes ----------------------------------------------------------------


def test_mesh_is_oriented_and_fills_disk(mesh):
    p = mesh.nodes[mesh.tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    assert np.all(det > 0)
    # inscribed polygon area: pi * sinc-type deficit of order (2 pi / n)^2
    n = mesh.n_theta
    polygon = 0.5 * n * math.sin(2 * math.pi / n)
    assert triangle_areas(mesh).sum() == pytest.approx(polygon, rel=1e-12)


def test_mesh_faces_share_coordinates(mesh):
    np.testing.assert_allclose(mesh.nodes[mesh.upper_face], mesh.nodes[mesh.lower_face], atol=1e-15)
    assert len(set(mesh.upper_face[1:]) & set(mesh.lower_face[1:])) == 0


def test_mesh_grading():
    s = ring_radii(0.1, 1e-3)
    assert s[0] == 0.0 and s[-1] == 1.0
    np.testing.assert_allclose(s[2:] / s[1:-1], 1.1)
    assert n_theta_for(0.1) % 4 == 0


def test_mesh_rejects_outside_tip():
    with pytest.raises(CrackGeometryError):
        build_mesh(CrackGraph(np.array([1.2, -1.0]), np.zeros(2)), 0.2)
    with pytest.raises(ValueError):
        build_mesh(CrackGraph.straight(9), 0.0)


def test_boundary_angles_cut_at_exit(mesh):
    ang = mesh.boundary_angles()
    assert ang[0] == pytest.approx(-math.pi) and ang[-1] == pytest.approx(math.pi)
    assert np.all(np.diff(ang) > 0)


# -- solver ----------------------------------------------------------------


def test_linear_field_is_exact(mesh):
    # u = x1 has zero flux through the slit and is reproduced by P1 elements
    fld = solve_on_mesh(mesh, np.cos)
    np.testing.assert_allclose(fld.values, mesh.nodes[:, 0], atol=1e-10)
    assert fld.dirichlet() == pytest.approx(triangle_areas(mesh).sum(), rel=1e-10)


def test_tip_field_energy(mesh):
    fld = solve_on_mesh(mesh, lambda p: SQ * np.sin(p / 2))
    assert fld.dirichlet() == pytest.approx(1.0, rel=1e-2)


@pytest.mark.parametrize("k", [2, 3])
def test_odd_mode_energy(mesh, k):
    beta = k - 0.5
    fld = solve_on_mesh(mesh, lambda p: np.sin(beta * p))
    assert fld.dirichlet() == pytest.approx(math.pi * beta, rel=1e-2)


def test_energy_converges_under_refinement():
    g = lambda p: SQ * np.sin(p / 2)
    errs = [abs(solve_harmonic(CrackGraph.straight(65), g, h).dirichlet() - 1.0) for h in (0.2, 0.1)]
    assert errs[1] < errs[0]


@given(st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=-2.0, max_value=2.0))
def test_solver_is_linear_in_data(a, b):
    m = build_mesh(CrackGraph.straight(17), 0.3)
    f1 = solve_on_mesh(m, np.cos).values
    f2 = solve_on_mesh(m, lambda p: np.sin(p / 2)).values
    f12 = solve_on_mesh(m, lambda p: a * np.cos(p) + b * np.sin(p / 2)).values
    np.testing.assert_allclose(f12, a * f1 + b * f2, atol=1e-10)


def test_energy_form_and_clipping(mesh):
    fld = interpolate(mesh, lambda r, p: SQ * np.sqrt(r) * np.sin(p / 2))
    assert fld.energy_form(fld) == pytest.approx(fld.dirichlet())
    # the tip field carries energy proportional to the radius
    assert fld.dirichlet(0.5, tuple(mesh.tip)) == pytest.approx(0.5, rel=2e-2)


def test_curved_crack_mesh_and_solve():
    crack = CrackGraph.from_function(lambda x: 0.15 * x * x, 33, x_end=-1.1)
    fld = solve_harmonic(crack, lambda p: SQ * np.sin(p / 2), 0.2)
    assert np.isfinite(fld.dirichlet()) and fld.solver_residual < 1e-9

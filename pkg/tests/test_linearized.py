import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cracktip.homogeneity import table
from cracktip.linearized import (
    GrowthBudget,
    ResidualGrid,
    SeriesSolution,
    eval_f,
    eval_v,
    f_derivs,
    flatness_factor,
    flatness_ratio,
    growth_profile,
    mode_energy,
    quadrature_energy,
    residual,
    rotate_normalize,
    rotation_shift,
    satisfies_growth,
    solve_bvp,
    v_derivs,
)

coef = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def random_solution(a_k, b_k, a0=0.0, a=0.0):
    return SeriesSolution(a=a, a0=a0, a_k=np.array(a_k), b_k=np.array(b_k))


@given(st.lists(coef, min_size=1, max_size=8), st.lists(coef, min_size=1, max_size=8), coef, coef)
def test_linear_combinations_solve_system(a_k, b_k, a0, a):
    sol = random_solution(a_k, b_k, a0, a)
    assert residual(sol).max() <= 1e-10


def test_wrong_curvature_sign_is_detected():
    sol = SeriesSolution.mode("a", 2)
    assert residual(sol).max() <= 1e-10
    assert residual(sol, f_sign=-1.0).curvature > 1e-2


def test_z_mode_needs_curvature_pairing():
    sol = SeriesSolution.mode("a0")
    res = residual(sol)
    assert res.max() <= 1e-10
    assert residual(sol, f_sign=-1.0).curvature > 1e-2


@pytest.mark.parametrize("kind,k", [("a", 1), ("a", 3), ("b", 2), ("a0", 1)])
def test_laplacian_against_finite_differences(kind, k):
    sol = SeriesSolution.mode(kind, k)
    h = 1e-4
    for x, y in [(0.3, 0.2), (-0.4, 0.5), (0.1, -0.6), (-0.5, -0.3)]:
        def v(xx, yy):
            return float(eval_v(sol, math.hypot(xx, yy), math.atan2(yy, xx)))

        lap = (v(x + h, y) + v(x - h, y) + v(x, y + h) + v(x, y - h) - 4.0 * v(x, y)) / h**2
        assert abs(lap) < 1e-5


@given(st.floats(min_value=0.05, max_value=1.0), st.floats(min_value=-3.0, max_value=3.0))
def test_polar_derivatives_against_finite_differences(r, p):
    sol = random_solution([0.3, -0.7, 0.2], [0.5, 0.1, -0.4], a0=0.6)
    _, v_r, v_p, v_rr, v_pp = v_derivs(sol, r, p)
    h = 1e-5
    fd_r = (eval_v(sol, r + h, p) - eval_v(sol, r - h, p)) / (2 * h)
    fd_p = (eval_v(sol, r, p + h) - eval_v(sol, r, p - h)) / (2 * h)
    assert v_r == pytest.approx(fd_r, abs=1e-6 / r)
    assert v_p == pytest.approx(fd_p, abs=1e-6)


def test_f_derivatives_against_finite_differences():
    sol = random_solution([0.3, -0.7, 0.2], [0.0], a0=0.6)
    x = np.linspace(-0.9, -0.1, 9)
    h = 1e-5
    f, fp, fpp = f_derivs(sol, x)
    np.testing.assert_allclose(fp, (eval_f(sol, x + h) - eval_f(sol, x - h)) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(fpp, (eval_f(sol, x + h) - 2 * f + eval_f(sol, x - h)) / h**2, atol=1e-3)


def test_odd_modes_leave_crack_flat():
    sol = SeriesSolution.mode("b", 3)
    np.testing.assert_array_equal(eval_f(sol, np.linspace(-1, -0.01, 20)), 0.0)


def test_evaluation_domain_errors():
    sol = SeriesSolution.mode("a", 1)
    with pytest.raises(ValueError):
        eval_v(sol, 0.0, 0.0)
    with pytest.raises(ValueError):
        eval_f(sol, 0.1)
    with pytest.raises(ValueError):
        SeriesSolution.mode("c")


@given(st.lists(coef, min_size=2, max_size=6), st.lists(coef, min_size=2, max_size=6), st.floats(0.2, 1.0))
def test_closed_form_energy_matches_quadrature(a_k, b_k, s):
    sol = random_solution(a_k, b_k)
    assert mode_energy(sol, s) == pytest.approx(quadrature_energy(sol, s), rel=1e-8, abs=1e-12)


def test_mode_energy_excludes_z():
    with pytest.raises(ValueError):
        mode_energy(SeriesSolution.mode("a0"))


def test_single_odd_mode_flatness_exponent():
    sol = SeriesSolution.mode("b", 2)
    for s in (0.5, 0.1):
        assert flatness_ratio(sol, s) == pytest.approx(s**1.5, rel=1e-12)


def test_flatness_rejects_low_modes():
    with pytest.raises(ValueError, match="low modes"):
        flatness_factor(SeriesSolution.mode("a", 1), 0.5, 1.4)
    with pytest.raises(ValueError):
        flatness_factor(SeriesSolution.mode("a", 2), 0.5, 1.5)


@given(st.lists(coef, min_size=3, max_size=10), st.lists(coef, min_size=3, max_size=10), st.sampled_from([0.5, 0.25, 0.1]))
def test_flatness_property(a_k, b_k, s):
    a_k[0] = b_k[0] = 0.0
    sol = random_solution(a_k, b_k)
    if not np.any(sol.a_k) and not np.any(sol.b_k):
        return
    assert flatness_factor(sol, s, 1.4)


def test_bvp_reproduces_span_elements():
    a2 = float(table().alpha[1])
    target = SeriesSolution(a=0.2, a_k=np.array([0.0, 1.0, -0.3]), b_k=np.array([0.0, 0.4, 0.0]))
    g = lambda p: eval_v(target, 1.0, p)
    t = float(eval_f(target, -1.0))
    res = solve_bvp(g, t=t, n_modes=6)
    assert res.l2_error < 1e-8
    assert abs(res.correction) < 1e-8
    np.testing.assert_allclose(res.solution.a_k[:3], target.a_k, atol=1e-8)
    np.testing.assert_allclose(res.solution.b_k[:3], target.b_k, atol=1e-10)
    assert a2 == pytest.approx(1.889350969048749)


@given(st.floats(min_value=-0.5, max_value=0.5))
def test_bvp_pins_crack_end(t):
    res = solve_bvp(lambda p: np.cos(p) + 0.2 * np.sin(p / 2), t=t, n_modes=12)
    assert float(eval_f(res.solution, -1.0)) == pytest.approx(t, abs=1e-13)
    assert residual(res.solution).max() <= 1e-10


def test_bvp_error_decreases_with_modes():
    errs = [solve_bvp(np.cos, 0.0, n).l2_error for n in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]


@given(st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=1e-4, max_value=0.3))
def test_rotation_shift_against_quadrature(c, eps):
    lam = 1.3
    rotated = lambda p: math.sqrt(2 / math.pi) * lam * math.sin((p + c * eps) / 2)
    coeff = integrate.quad(lambda p: rotated(p) * math.cos(p / 2), -math.pi, math.pi)[0] / math.pi
    assert rotation_shift(c, lam, eps) == pytest.approx(coeff / eps, rel=1e-9, abs=1e-12)


def test_rotate_normalize_removes_first_mode():
    sol = SeriesSolution(a_k=np.array([0.05, 0.2]), b_k=np.array([0.0, 0.1]))
    out, theta = rotate_normalize(sol)
    assert out.a_k[0] == 0.0 and out.a_k[1] == 0.2
    assert rotation_shift(theta, 1.0) == pytest.approx(-0.05)
    out, theta = rotate_normalize(sol, eps=0.1)
    assert rotation_shift(theta, 1.0, 0.1) == pytest.approx(-0.05)
    with pytest.raises(ValueError):
        rotate_normalize(SeriesSolution(a_k=np.array([50.0])), eps=0.5)


def test_growth_profile_of_regular_mode():
    sol = SeriesSolution.mode("b", 2)
    prof = growth_profile(sol, kappa=0.25, j_max=10)
    assert np.all(np.diff(prof["v"]) < 0)
    assert satisfies_growth(sol, GrowthBudget(kappa=0.25, C_v=10.0, C_f=10.0), j_max=10)


def test_growth_budget_validation():
    with pytest.raises(ValueError):
        GrowthBudget(kappa=0.5, C_v=1.0, C_f=1.0)
    with pytest.raises(ValueError):
        GrowthBudget(kappa=0.1, C_v=0.0, C_f=1.0)


def test_serialization_round_trip():
    sol = SeriesSolution(a=0.1, a0=-0.2, a_k=np.array([1.0, 2.0]), b_k=np.array([3.0]))
    d = json.loads(sol.to_json())
    assert d["n_modes"] == 2 and len(d["alpha_table_sha256"]) == 64
    back = SeriesSolution.from_dict(d)
    np.testing.assert_array_equal(back.a_k, sol.a_k)
    np.testing.assert_array_equal(back.b_k, [3.0, 0.0])
    twice = sol + sol
    np.testing.assert_array_equal(twice.a_k, sol.scaled(2.0).a_k)


def test_residual_grid_default_size():
    g = ResidualGrid.default()
    assert g.r.size == 1000 and g.x1.size == 1000

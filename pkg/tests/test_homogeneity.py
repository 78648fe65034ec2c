import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize

from cracktip.homogeneity import (
    alphas,
    build_table,
    compute_alpha,
    compute_gamma,
    compute_t,
    equation_residual,
    sinc,
    table,
)


def oracle_alpha(k):
    """Root of ``sin(a pi)(a^2 - 1/4) + (2/pi) a cos(a pi)`` in ``(k - 1/2, k)``.

    Multiplying through by the cosine removes the tangent's poles.
    """
    f = lambda a: math.sin(a * math.pi) * (a * a - 0.25) + (2.0 / math.pi) * a * math.cos(a * math.pi)
    return optimize.brentq(f, k - 0.5 + 1e-9, k, xtol=1e-15, rtol=1e-15)


def oracle_t(k, alpha):
    num = integrate.quad(lambda p: math.cos(alpha * p) * math.cos(k * p), -math.pi, math.pi, limit=400)[0]
    den = integrate.quad(lambda p: math.cos(alpha * p) ** 2, -math.pi, math.pi, limit=400)[0]
    return num / den


@pytest.mark.parametrize("k", [2, 3, 5, 10, 40])
def test_alpha_matches_independent_root(k):
    assert compute_alpha(k) == pytest.approx(oracle_alpha(k), abs=1e-12)


def test_alpha2_value():
    assert compute_alpha(2) == pytest.approx(1.889350969048749, abs=1e-13)


def test_first_mode_conventions():
    assert compute_alpha(1) == 0.5
    assert compute_gamma(1) == 0.5
    assert compute_t(1) == pytest.approx(4.0 / (3.0 * math.pi), abs=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3, 7, 20])
def test_t_matches_quadrature(k):
    a = compute_alpha(k)
    assert compute_t(k) == pytest.approx(oracle_t(k, a), abs=1e-10)


@given(st.integers(min_value=2, max_value=10_000))
def test_gap_bounds_and_residual(k):
    tab = table(10_000)
    g = tab.gamma[k - 1]
    assert 0.0 < g < 1.0 / (4.0 * k)
    assert abs(tab.residual[k - 1]) < 1e-12
    # the unreduced form cannot beat the rounding of alpha itself
    a = tab.alpha[k - 1]
    assert abs(equation_residual(a)) < 1e-12 + 4.0 * math.pi * np.spacing(a)


@given(st.integers(min_value=2, max_value=5000))
def test_gap_asymptotics(k):
    # gamma_k ~ 2/(pi^2 k) to leading order
    g = table(5000).gamma[k - 1]
    lead = 2.0 / (math.pi**2 * k)
    assert abs(g - lead) <= 2.0 / k**2


def test_alphas_increasing_and_interlaced():
    a = alphas(200)
    assert np.all(np.diff(a) > 0)
    k = np.arange(2, 201)
    assert np.all((a[1:] > k - 0.5) & (a[1:] < k))


def test_invalid_k():
    with pytest.raises(ValueError):
        compute_alpha(0)
    with pytest.raises(ValueError):
        compute_gamma(-3)
    with pytest.raises(ValueError):
        build_table(0)


def test_table_serialization():
    tab = build_table(8)
    payload = json.loads(tab.to_json())
    assert payload["k_max"] == 8
    assert [r["k"] for r in payload["rows"]] == list(range(1, 9))
    assert payload["rows"][1]["alpha"] == tab.alpha[1]
    lines = tab.to_csv().splitlines()
    assert lines[0] == "k,alpha,gamma,t,residual"
    assert float(lines[2].split(",")[1]) == tab.alpha[1]


def test_table_is_deterministic():
    assert build_table(50).to_json() == build_table(50).to_json()


@given(st.floats(min_value=-1e-3, max_value=1e-3, allow_nan=False))
def test_sinc_small_branch(x):
    ref = math.sin(x) / x if x != 0.0 else 1.0
    assert sinc(x) == pytest.approx(ref, rel=1e-15, abs=1e-16)

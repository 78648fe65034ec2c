"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (printed, and repeated in the terminal
summary). Criteria 4 and 8 are known to fail; the reasons are in the README.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from cracktip import _kernels
from cracktip.certificate import certify, mode_deficit, pair_series_check, tail_sums
from cracktip.cli import RunConfig, run
from cracktip.crack import CrackGraph
from cracktip.crack_domain import (
    blowup_coefficient,
    bonnet_profile,
    decay_fit,
    fit_margin_constant,
    homogeneous_energy,
    minimize,
    monotonicity_defect,
)
from cracktip.fem import solve_harmonic
from cracktip.homogeneity import build_table, compute_alpha, equation_residual, table
from cracktip.linearized import ResidualGrid, SeriesSolution, eval_f, flatness_factor, residual, solve_bvp
from cracktip.variations import claim_quadratures, orthogonal_ledger

SQ = math.sqrt(2.0 / math.pi)


def tip_trace(p):
    return SQ * np.sin(p / 2.0)


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    # compile the numba kernels once so that runtimes measure the work only
    _kernels.solve_gamma(np.array([2.0, 3.0]))
    _kernels.pair_series(10)


def test_criterion_1_eigenvalues(acceptance_record):
    t0 = time.perf_counter()
    a2 = compute_alpha(2)
    res = abs(equation_residual(a2))
    tab = build_table(10_000)
    elapsed = time.perf_counter() - t0
    k = tab.k[1:]
    gap_ok = bool(np.all(tab.gamma[1:] < 1.0 / (4.0 * k)) and np.all(tab.gamma[1:] > 0.0))
    ok = 1.8885 <= a2 <= 1.8895 and res < 1e-12 and gap_ok and elapsed < 1.0
    acceptance_record(1, ok, f"alpha_2={a2:.12f} residual={res:.1e} gaps_ok={gap_ok} runtime={elapsed:.3f}s")
    assert 1.8885 <= a2 <= 1.8895
    assert res < 1e-12
    assert gap_ok
    assert elapsed < 1.0


def test_criterion_2_certificate(acceptance_record):
    t0 = time.perf_counter()
    d1 = mode_deficit(1)
    s = tail_sums()
    rep = certify()
    est, bound = pair_series_check(1_000_000)
    elapsed = time.perf_counter() - t0
    checks = {
        "d1": abs(d1 - (1.0 - 16.0 / (9.0 * math.pi**2))) < 1e-12 and d1 <= 0.820,
        "T1": s[0] <= 0.133,
        "T2": s[1] <= 0.164,
        "T3": s[2] == -1.0 / 6.0,
        "T4": s[3] <= 0.010,
        "T5": s[4] <= 0.011,
        "total": rep.ledger_total < 1.0,
        "partial_sum": abs(est - s[1]) < 1e-9 + bound,
        "runtime": elapsed < 5.0,
    }
    ok = all(checks.values())
    acceptance_record(
        2, ok, f"deficit_1={d1:.10f} sums={tuple(round(x, 6) for x in s)} total={rep.ledger_total:.6f} runtime={elapsed:.2f}s"
    )
    assert ok, {k: v for k, v in checks.items() if not v}


def test_criterion_3_linearized_residuals(acceptance_record):
    grid = ResidualGrid.default()
    assert grid.r.size == 1000 and grid.x1.size == 1000
    t0 = time.perf_counter()
    sols = [SeriesSolution.mode("a", k) for k in range(1, 11)]
    sols += [SeriesSolution.mode("b", k) for k in range(1, 11)]
    sols.append(SeriesSolution.mode("a0"))
    worst = max(residual(s, grid).max() for s in sols)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    acceptance_record(3, ok, f"max residual over 20 homogeneous pairs and (z, h) = {worst:.1e} runtime={elapsed:.3f}s")
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_4_bvp_round_trip(acceptance_record):
    res = solve_bvp(np.cos, t=0.0, n_modes=32)
    f_end = float(eval_f(res.solution, -1.0))
    ok = res.l2_error < 1e-6 and abs(f_end) <= 1e-13
    acceptance_record(4, ok, f"L2 error={res.l2_error:.2e} (needs < 1e-6) f(-1)={f_end:.1e}")
    assert abs(f_end) <= 1e-13
    assert res.l2_error < 1e-6


def test_criterion_5_flatness(acceptance_record):
    rng = np.random.default_rng(20240501)
    failures = 0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        a_k = rng.standard_normal(n)
        b_k = rng.standard_normal(n)
        a_k[0] = b_k[0] = 0.0
        sol = SeriesSolution(a_k=a_k, b_k=b_k)
        for s in (0.5, 0.25, 0.1):
            failures += not flatness_factor(sol, s, 1.4)
    acceptance_record(5, failures == 0, f"failures={failures} of 300 (100 draws x 3 radii)")
    assert failures == 0


def test_criterion_6_slit_disk_solver(acceptance_record):
    crack = CrackGraph.straight(65)
    coarse = solve_harmonic(crack, tip_trace)
    fine = solve_harmonic(crack, tip_trace, h=0.025)
    e0, e1 = coarse.dirichlet(), fine.dirichlet()
    prof = bonnet_profile(coarse)
    spread = float(prof.max() - prof.min())
    alpha2 = float(table().alpha[1])
    defects = []
    for c in (-0.3, -0.1, 0.1, 0.3):
        fld = solve_harmonic(crack, lambda p, c=c: tip_trace(p) + c * np.cos(alpha2 * p))
        defects.append(monotonicity_defect(bonnet_profile(fld)))
    checks = {
        "default": abs(e0 - 1.0) < 1e-2,
        "refined": abs(e1 - 1.0) < 2.5e-3,
        "bonnet_const": spread <= 1e-3,
        "bonnet_mono": max(defects) <= 1e-3,
    }
    ok = all(checks.values())
    acceptance_record(
        6, ok, f"E(h=0.05)={e0:.6f} E(h=0.025)={e1:.6f} bonnet spread={spread:.1e} a2 defect={max(defects):.1e}"
    )
    assert ok, checks


def test_criterion_7_minimizer_calibration(acceptance_record):
    crack0 = CrackGraph.straight(65)
    base = minimize(tip_trace, crack0)
    J0 = base.report.total
    lam = blowup_coefficient(base.field, 0.1)
    margins = {}
    for eps in (0.025, 0.05, 0.1):
        g = lambda p, e=eps: (1.0 + e) * tip_trace(p)
        res = minimize(g, crack0)
        margins[eps] = homogeneous_energy(g) - res.report.total
    c0, r2 = fit_margin_constant(list(margins), list(margins.values()))
    checks = {
        "J": 1.98 <= J0 <= 2.02,
        "lambda": 0.95 <= lam <= 1.05,
        "below_homogeneous": margins[0.05] > 0.0,
        "C0": c0 > 0.0,
        "R2": r2 > 0.95,
    }
    ok = all(checks.values())
    ms = ", ".join(f"{m:.2e}" for m in margins.values())
    acceptance_record(7, ok, f"J={J0:.6f} lambda(0.1)={lam:.4f} margins=({ms}) C0={c0:.3f} R2={r2:.4f}")
    assert ok, checks


def test_criterion_8_orthogonal_ledger(acceptance_record):
    q = claim_quadratures()
    quad_ok = [abs(q[0]) < 1e-8, abs(q[1]) < 1e-8, abs(q[2] - math.pi / 2.0) < 1e-8]
    a = orthogonal_ledger(1e-2, 1e-3)
    b = orthogonal_ledger(1e-2, 1e-4)
    r3a, r4a = a.ratios["competitor_over_3scale"], a.ratios["shell_over_scale"]
    r3b, r4b = b.ratios["competitor_over_3scale"], b.ratios["shell_over_scale"]
    coarse_ok = 0.8 <= r3a <= 1.2 and 0.8 <= r4a <= 1.2
    fine_ok = 0.95 <= r3b <= 1.05 and 0.95 <= r4b <= 1.05
    sign_ok = math.copysign(1.0, a.total_dJ) == -math.copysign(1.0, a.eps * a.delta)
    ok = all(quad_ok) and coarse_ok and fine_ok and sign_ok
    acceptance_record(
        8,
        ok,
        f"quadratures=({q[0]:.1e}, {q[1]:.1e}, {q[2]:.6f}) "
        f"competitor/shell ratios at 1e-3: {r3a:.4f}/{r4a:.4f}, at 1e-4: {r3b:.4f}/{r4b:.4f} "
        f"dJ/(-eps delta sqrt(pi/2))={a.ratios['total_over_minus_scale']:.3f}",
    )
    assert all(quad_ok), q
    assert coarse_ok and fine_ok, (r3a, r4a, r3b, r4b)
    assert sign_ok, a.total_dJ


def _power_crack(expo, n=400):
    # geometric knots with ratio 4^(1/8) so that every cutoff c 4^-j is a knot
    xi = 4.0 ** (-np.arange(n) / 8.0)
    knots = np.concatenate([[0.0], -np.sort(xi)])
    return CrackGraph(knots, np.abs(knots) ** expo, slope_cap=3.0)


def test_criterion_9_decay_envelopes(acceptance_record):
    alpha2 = compute_alpha(2)
    crack = _power_crack(alpha2 + 0.5)
    cuts = [4.0**-j for j in range(1, 9)]
    c_low = [decay_fit(crack, 2, 0.3, c) for c in cuts]
    c_high = [decay_fit(crack, 2, 0.45, c) for c in cuts]
    bounded = max(c_low) <= c_low[0] * (1.0 + 1e-12)
    growth = [c_high[i + 1] / c_high[i] for i in range(len(cuts) - 1)]
    grows = min(growth) > 1.0 and c_high[-1] / c_high[0] > 1.5
    ok = bounded and grows
    acceptance_record(
        9,
        ok,
        f"alpha=0.3: C in [{min(c_low):.4f}, {max(c_low):.4f}]; alpha=0.45: C ratio per 4x = {np.mean(growth):.4f} "
        f"(threshold alpha_2 - 3/2 = {alpha2 - 1.5:.4f})",
    )
    assert bounded
    assert grows


DETERMINISM_CONFIGS = [
    ("eigen", {}),
    ("certify", {}),
    ("linear.solve", {}),
    ("linear.residual", {}),
    ("minimize", {"h": 0.1}),
    ("vary.tangential", {}),
    ("vary.orthogonal", {}),
    ("vary.stationarity", {"h": 0.1}),
]


def _snapshot(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_10_determinism(tmp_path, acceptance_record):
    differing = []
    for command, params in DETERMINISM_CONFIGS:
        snaps = []
        for rep in ("a", "b"):
            out = tmp_path / f"{command}-{rep}"
            run(RunConfig(command, dict(params), seed=7, output_dir=str(out)))
            snaps.append(_snapshot(out))
        if snaps[0] != snaps[1]:
            differing.append(command)
    ok = not differing
    acceptance_record(10, ok, f"{len(DETERMINISM_CONFIGS)} commands run twice; differing: {differing or 'none'}")
    assert ok

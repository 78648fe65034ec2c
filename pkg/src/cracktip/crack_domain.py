"""Mumford-Shah energies, projections and a desk-scale crack minimizer.

The discrete inner product used throughout is

    <u, v>_s = sum_T |T cap B_s(c)| grad u_T . grad v_T

for P1 fields, with ``c`` the crack tip. Reference fields (tip profiles,
linearized modes) are nodally interpolated on the same mesh with the angle
cut along the crack, so least-squares fits are exact in this inner product.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .crack import CrackGeometryError, CrackGraph
from .fem import DiscreteHarmonicField, clipped_areas, solve_harmonic
from .homogeneity import table
from .linearized import SeriesSolution, z_derivs
from .mesh import DEFAULT_H, DEFAULT_S_MIN

log = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
GRAM_COND_LIMIT = 1e10
TOL_MONO = 1e-3


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


@dataclass
class EnergyReport:
    dirichlet: float
    length: float
    total: float
    pi_lambda: float = float("nan")
    pi_phi0: float = float("nan")
    closeness_eps: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def ms_energy(field: DiscreteHarmonicField, crack: CrackGraph | None = None, radius: float = 1.0, with_pi: bool = True) -> EnergyReport:
    """Dirichlet energy, crack length and their sum inside ``B_radius``."""
    crack = crack or field.crack
    d = field.dirichlet(radius)
    ln = crack.length(radius)
    rep = EnergyReport(dirichlet=d, length=ln, total=d + ln)
    if with_pi:
        lam, phi0, eps = project_pi(field, crack, min(radius, 1.0))
        rep.pi_lambda, rep.pi_phi0, rep.closeness_eps = lam, phi0, eps
    return rep


def total_energy(field: DiscreteHarmonicField) -> float:
    return field.dirichlet() + field.crack.length(1.0)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def _tip_weights(field: DiscreteHarmonicField, s: float) -> np.ndarray:
    if s >= 2.0:
        return field.areas
    return clipped_areas(field.mesh, s, field.mesh.tip)


def _basis_gradients(field: DiscreteHarmonicField, funcs: Sequence[Callable]) -> np.ndarray:
    """Element gradients of interpolated basis functions, shape ``(m, nt, 2)``."""
    from . import _kernels

    rho, ang = field.mesh.tip_polar()
    out = []
    for fn in funcs:
        vals = np.zeros_like(rho)
        pos = rho > 0.0
        vals[pos] = fn(rho[pos], ang[pos])
        out.append(_kernels.gradients(field.mesh.nodes, field.mesh.tris, vals))
    return np.array(out)


def _tip_sin(r, p):
    return SQRT_2_OVER_PI * np.sqrt(r) * np.sin(p / 2.0)


def _tip_cos(r, p):
    return SQRT_2_OVER_PI * np.sqrt(r) * np.cos(p / 2.0)


def _weighted_lstsq(grads: np.ndarray, target: np.ndarray, w: np.ndarray):
    """Minimize ``sum_T w_T |target_T - sum_m c_m grads[m]_T|^2``."""
    keep = w > 0.0
    sw = np.sqrt(w[keep])[:, None]
    A = (grads[:, keep, :] * sw[None]).reshape(grads.shape[0], -1).T
    b = (target[keep] * sw).ravel()
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0.0] = 1.0
    As = A / norms
    coef, *_ = np.linalg.lstsq(As, b, rcond=None)
    sv = np.linalg.svd(As, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    resid = b - As @ coef
    return coef / norms, float(np.sqrt(np.dot(resid, resid))), cond


def project_pi(field: DiscreteHarmonicField, crack: CrackGraph | None = None, s: float = 1.0):
    """Best fit by ``sqrt(2/pi) lam r^(1/2) sin(phi/2 + phi0)`` on ``B_s`` about the tip.

    Returns
    -------
    lam, phi0, closeness_eps
        ``lam >= 0``, ``phi0 in (-pi, pi]`` and the root energy of the misfit.
    """
    w = _tip_weights(field, s)
    energy = float(np.dot(w, np.einsum("ij,ij->i", field.gradients, field.gradients)))
    if energy == 0.0:
        return 0.0, 0.0, 0.0
    grads = _basis_gradients(field, [_tip_sin, _tip_cos])
    coef, resid, _ = _weighted_lstsq(grads, field.gradients, w)
    A, B = coef
    lam = math.hypot(A, B)
    phi0 = math.atan2(B, A) if lam > 0 else 0.0
    return lam, phi0, resid


def pi_residual_values(field: DiscreteHarmonicField, s: float = 1.0) -> np.ndarray:
    """Nodal values of ``u - Pi(u, s)``."""
    lam, phi0, _ = project_pi(field, s=s)
    rho, ang = field.mesh.tip_polar()
    return field.values - SQRT_2_OVER_PI * lam * np.sqrt(rho) * np.sin(ang / 2.0 + phi0)


@dataclass
class ProjectionP:
    solution: SeriesSolution
    fit_residual: float
    condition: float


def _linear_basis(n_modes: int):
    alpha = table(max(n_modes, 64)).alpha[:n_modes]
    funcs = [lambda r, p: z_derivs(r, p)[0]]
    labels = [("a0", 0)]
    for k in range(1, n_modes + 1):
        a = alpha[k - 1]
        funcs.append(lambda r, p, a=a: r**a * np.cos(a * p))
        labels.append(("a", k))
    for k in range(2, n_modes + 1):
        b = k - 0.5
        funcs.append(lambda r, p, b=b: r**b * np.sin(b * p))
        labels.append(("b", k))
    return funcs, labels


def project_p(field: DiscreteHarmonicField, crack: CrackGraph | None = None, n_modes: int = 6, s: float = 1.0) -> ProjectionP:
    """Fit the post-projection residual by a linearized-system solution.

    The residual ``u - Pi(u)`` is fitted in the gradient inner product by
    ``a0 z + sum_{k>=1} a_k r^alpha_k cos + sum_{k>=2} b_k r^(k-1/2) sin``;
    the constant ``a`` is the residual's value at the tip.
    """
    res_vals = pi_residual_values(field, 1.0)
    from . import _kernels

    res_grad = _kernels.gradients(field.mesh.nodes, field.mesh.tris, res_vals)
    funcs, labels = _linear_basis(n_modes)
    grads = _basis_gradients(field, funcs)
    w = _tip_weights(field, s)
    coef, resid, cond = _weighted_lstsq(grads, res_grad, w)
    if cond > GRAM_COND_LIMIT:
        raise ValueError("Gram matrix ill-conditioned; reduce n_modes")
    a_k = np.zeros(n_modes)
    b_k = np.zeros(n_modes)
    a0 = 0.0
    for (kind, k), c in zip(labels, coef):
        if kind == "a0":
            a0 = float(c)
        elif kind == "a":
            a_k[k - 1] = c
        else:
            b_k[k - 1] = c
    sol = SeriesSolution(a=float(res_vals[0]), a0=a0, a_k=a_k, b_k=b_k)
    return ProjectionP(solution=sol, fit_residual=resid, condition=cond)


# ---------------------------------------------------------------------------
# monotonicity and blow-ups
# ---------------------------------------------------------------------------


def default_radii(n: int = 9, r_min: float = 1e-2, r_max: float = 1.0) -> np.ndarray:
    return np.geomspace(r_max, r_min, n)


def bonnet_profile(field: DiscreteHarmonicField, radii: Sequence[float] | None = None) -> np.ndarray:
    """``(1/r) int_{B_r(tip)} |grad u|^2`` for decreasing radii."""
    if radii is None:
        # largest ball about the tip that stays inside the unit disk
        radii = default_radii(r_max=1.0 - float(np.hypot(*field.mesh.tip)))
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(np.diff(radii) >= 0.0):
        raise ValueError("radii must be strictly decreasing")
    if np.any(radii <= 0.0) or np.any(radii > 1.0):
        raise ValueError("radii must lie in (0, 1]")
    g2 = np.einsum("ij,ij->i", field.gradients, field.gradients)
    tip = field.mesh.tip
    return np.array([float(np.dot(clipped_areas(field.mesh, r, tip), g2)) / r for r in radii])


def monotonicity_defect(profile: np.ndarray) -> float:
    """Largest increase of the profile as the radius decreases (0 if monotone)."""
    return float(max(0.0, np.max(np.diff(profile)))) if profile.size > 1 else 0.0


def blowup_coefficient(field: DiscreteHarmonicField, r: float) -> float:
    """``lam`` of the projection of ``u(r x)/sqrt(r)``; equals that of ``Pi`` on ``B_r``."""
    return project_pi(field, s=r)[0]


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


@dataclass
class GeometryReport:
    excess_length: float
    chord_distance: float
    C_H: float
    C: float
    chord_angle: float


def geometry_checks(crack: CrackGraph, eps: float, samples: int = 2001) -> GeometryReport:
    """Excess length over one and distance to the best chord through the tip."""
    excess = crack.length() - 1.0
    x = np.linspace(crack.knots[0], crack.knots[-1], samples)
    d = np.stack([x, np.asarray(crack(x))], axis=1) - crack.tip
    # principal direction of the points about the tip
    m = d.T @ d
    evals, evecs = np.linalg.eigh(m)
    u = evecs[:, -1]
    dist = np.abs(d[:, 0] * u[1] - d[:, 1] * u[0])
    chord = float(dist.max())
    return GeometryReport(
        excess_length=float(excess),
        chord_distance=chord,
        C_H=float(excess / eps) if eps > 0 else float("nan"),
        C=float(chord / math.sqrt(eps)) if eps > 0 else float("nan"),
        chord_angle=float(math.atan2(u[1], u[0])),
    )


def decay_fit(crack: CrackGraph, order: int, alpha: float, cutoff: float | None = None) -> float:
    """Smallest ``C`` with ``|f - f_tip| <= C |x1 - x_tip|^(order + alpha)`` on the knots.

    Knots closer to the tip than ``cutoff`` are excluded; by default only the
    tip knot itself is dropped.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    xi = crack.knots[0] - crack.knots
    df = np.abs(crack.values - crack.values[0])
    keep = xi > (0.0 if cutoff is None else cutoff)
    if not np.any(keep):
        return 0.0
    return float(np.max(df[keep] / xi[keep] ** (order + alpha)))


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


class SlopeCapError(RuntimeError):
    pass


@dataclass
class MinimizeOptions:
    h: float = DEFAULT_H
    s_min: float = DEFAULT_S_MIN
    tol_J: float = 1e-7
    max_iter: int = 60
    damping: float = 0.25
    min_damping: float = 1.0 / 64.0
    tip_step: float | None = None
    min_tip_step: float = 1e-3
    max_tip_step: float = 0.125
    curvature: bool = True
    tip: bool = True
    min_length: float = 0.05

    @classmethod
    def from_dict(cls, d: dict) -> "MinimizeOptions":
        names = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown minimize options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class MinimizeResult:
    field: DiscreteHarmonicField
    crack: CrackGraph
    report: EnergyReport
    history: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    iterations: int = 0


def _solve(crack, g, opts):
    return solve_harmonic(crack, g, opts.h, opts.s_min)


def curvature_target(field: DiscreteHarmonicField, crack: CrackGraph) -> np.ndarray:
    """Graph solving ``(f'/sqrt(1+f'^2))' = -[|grad u|^2]`` with the ends fixed.

    The jump (upper minus lower) comes from recovered face gradients at the
    ring nodes and is integrated in ``x1`` from the outer end.
    """
    pts, gu, gl = field.face_energy_densities()
    x_face = pts[:, 0]
    jump = gu - gl
    order = np.argsort(x_face)
    xf, jf = x_face[order], jump[order]
    knots = crack.knots[::-1]  # increasing
    x0, x1 = knots[0], knots[-1]
    # cumulative integral of the jump from the outer end, sampled on a fine grid
    grid = np.union1d(knots, xf[(xf > x0) & (xf < x1)])
    jg = np.interp(grid, xf, jf, left=0.0, right=0.0)
    jg[grid < xf[0]] = 0.0
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (jg[1:] + jg[:-1]) * np.diff(grid))])
    f_lo, f_hi = float(crack.values[-1]), float(crack.values[0])
    cap = crack.slope_cap
    w_cap = cap / math.sqrt(1.0 + cap * cap)

    def shape(c):
        w = c - cum
        if np.any(np.abs(w) >= w_cap):
            return None
        fp = w / np.sqrt(1.0 - w * w)
        return f_lo + np.concatenate([[0.0], np.cumsum(0.5 * (fp[1:] + fp[:-1]) * np.diff(grid))])

    def mismatch(c):
        f = shape(c)
        if f is None:
            return math.copysign(1e3, c - np.mean(cum))
        return f[-1] - f_hi

    lo = float(np.max(cum) - w_cap) + 1e-12
    hi = float(np.min(cum) + w_cap) - 1e-12
    if lo >= hi or mismatch(lo) * mismatch(hi) > 0:
        raise SlopeCapError("curvature update would exceed the slope cap")
    c = optimize.brentq(mismatch, lo, hi, xtol=1e-14)
    f = shape(c)
    target = np.interp(knots, grid, f)[::-1]
    target[0], target[-1] = f_hi, f_lo
    return target


def _move_tip(crack: CrackGraph, step: float) -> CrackGraph | None:
    """Extend (``step > 0``) along the tip tangent or retract (``step < 0``)."""
    tip = crack.tip
    if step > 0:
        t = crack.tangent_at_tip()
        new = tip + step * t
        if new @ new >= (1.0 - 1e-3) ** 2:
            return None
        spacing = max(1e-9, 1e-3 * step)
        keep = crack.knots < new[0] - spacing
        knots = np.concatenate([[new[0]], crack.knots[keep]])
        vals = np.concatenate([[new[1]], crack.values[keep]])
    else:
        x_new = tip[0] + step
        y_new = float(crack(x_new))
        keep = crack.knots < x_new - max(1e-9, 1e-3 * abs(step))
        knots = np.concatenate([[x_new], crack.knots[keep]])
        vals = np.concatenate([[y_new], crack.values[keep]])
    if knots.size < 2:
        return None
    try:
        return CrackGraph(knots, vals, crack.interpolation, crack.slope_cap)
    except CrackGeometryError:
        return None


def minimize(g: Callable, init: CrackGraph, opts: MinimizeOptions | None = None) -> MinimizeResult:
    """Alternate harmonic solves, damped curvature steps and tip line searches.

    Every accepted step lowers ``J = int |grad u|^2 + H^1(crack)``; the loop
    stops once an outer iteration gains less than ``tol_J``.
    """
    opts = opts or MinimizeOptions()
    crack = init
    fld = _solve(crack, g, opts)
    J = total_energy(fld)
    history = [J]
    flags: list[str] = []
    spacing = float(abs(init.knots[1] - init.knots[0]))
    step = opts.tip_step if opts.tip_step is not None else spacing
    it = 0
    curv_stalled = False
    for it in range(1, opts.max_iter + 1):
        J_start = J
        if opts.curvature and not curv_stalled:
            try:
                target = curvature_target(fld, crack)
            except SlopeCapError as exc:
                flags.append(f"slope_cap: {exc}")
                break
            delta = target - crack.values
            if np.max(np.abs(delta)) > 1e-12:
                tau = opts.damping
                accepted = False
                while tau >= opts.min_damping:
                    try:
                        trial = crack.with_values(crack.values + tau * delta)
                        f_trial = _solve(trial, g, opts)
                    except CrackGeometryError as exc:
                        flags.append(f"slope_cap: {exc}")
                        tau /= 2.0
                        continue
                    J_trial = total_energy(f_trial)
                    if J_trial < J:
                        crack, fld, J = trial, f_trial, J_trial
                        history.append(J)
                        accepted = True
                        break
                    tau /= 2.0
                curv_stalled = not accepted
            else:
                curv_stalled = True

        if opts.tip:
            s = step
            while s >= opts.min_tip_step:
                best = None
                for cand in (_move_tip(crack, s), _move_tip(crack, -s)):
                    if cand is None:
                        continue
                    f_c = _solve(cand, g, opts)
                    J_c = total_energy(f_c)
                    if J_c < J and (best is None or J_c < best[2]):
                        best = (cand, f_c, J_c)
                if best is not None:
                    crack, fld, J = best
                    history.append(J)
                    curv_stalled = False
                    step = min(2.0 * s, opts.max_tip_step)
                    break
                s /= 2.0
            else:
                step = max(s, opts.min_tip_step)

        if crack.length(1.0) < opts.min_length:
            flags.append("crack_vanished: trapped-crack precondition failed")
            break
        if J_start - J < opts.tol_J:
            break
    else:
        flags.append("max_iter reached")

    report = ms_energy(fld, crack, 1.0)
    return MinimizeResult(field=fld, crack=crack, report=report, history=history, flags=flags, iterations=it)


def homogeneous_energy(g: Callable, h: float = DEFAULT_H, n_knots: int = 65) -> float:
    """``J`` of the straight crack ending at the origin for the trace ``g``."""
    crack = CrackGraph.straight(n_knots)
    return total_energy(solve_harmonic(crack, g, h))


def fit_margin_constant(eps: Sequence[float], margins: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``margin = C0 eps^2`` through the origin and its ``R^2``."""
    x = np.asarray(eps, dtype=np.float64) ** 2
    y = np.asarray(margins, dtype=np.float64)
    c0 = float(np.dot(x, y) / np.dot(x, x))
    ss_res = float(np.sum((y - c0 * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return c0, r2

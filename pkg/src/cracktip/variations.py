"""Energy comparisons for moving a crack tip.

Three experiments live here:

* ``tangential_gain``: the exact energy difference between two explicit
  competitors when the tip is pushed a distance ``mu`` along the crack.
* ``orthogonal_ledger``: shift the unit ball by ``delta`` across the crack,
  rotate the crack so that it still ends at the new centre, and itemize every
  Dirichlet and length contribution of that comparison.
* ``domain_variation_residual``: the first variation of
  ``J = int |grad u|^2 + H^1(crack)`` under the flow ``x + t eta``.

The model pair for the orthogonal comparison is

    u = sqrt(2/pi) r^(1/2) sin(phi/2) + eps v,   crack = graph of eps f,

where ``(v, f)`` is a linearized solution (by default the logarithmic pair
``z``). Field energies use the branch cut of ``u`` on the negative ``x1``
axis, continued analytically past it up to the actual crack exit; lengths
use the graph. Pairings with ``u`` are taken as boundary integrals against
``du/dr``, which is valid because ``u`` is harmonic with zero flux through
the curved crack to first order in ``eps``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .crack import CrackGraph
from .fem import DiscreteHarmonicField
from .linearized import SQRT_2_OVER_PI, SeriesSolution, f_derivs, mode_energy, v_derivs
from .quadrature import interval_rule, slit_disk_integral

SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)
ORDERING_FACTOR = 10.0


class OrderingError(ValueError):
    """Raised when the scales ``sigma eps << delta << eps`` are not separated."""


class SupportError(ValueError):
    """Raised when a test field reaches the tip or the outer circle."""


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariationParams:
    """Scales of a tip variation.

    Attributes
    ----------
    eps : float
        Amplitude of the perturbation away from the pure tip field.
    mu : float
        Tangential tip shift.
    delta : float
        Orthogonal shift of the comparison ball.
    delta_tilde : float or None
        Rotation of the translated crack; solved for when ``None``.
    sigma : float
        Relative size of the smooth remainder added to the model field.
    """

    eps: float = 1e-2
    mu: float = 0.0
    delta: float = 1e-3
    delta_tilde: float | None = None
    sigma: float = 0.0

    def check_tangential(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")

    def check_orthogonal(self, factor: float = ORDERING_FACTOR):
        if factor < ORDERING_FACTOR:
            raise ValueError(f"ordering factor must be at least {ORDERING_FACTOR}")
        if self.eps == 0.0 or self.delta == 0.0:
            raise OrderingError("eps and delta must be nonzero")
        if factor * abs(self.delta) > abs(self.eps) * (1.0 + 1e-12):
            raise OrderingError(f"delta = {self.delta:g} is not small against eps = {self.eps:g} (factor {factor:g})")
        if self.sigma < 0.0:
            raise OrderingError("sigma must be non-negative")
        if self.sigma > 0.0 and factor * self.sigma * abs(self.eps) > abs(self.delta) * (1.0 + 1e-12):
            raise OrderingError(f"sigma eps = {self.sigma * abs(self.eps):g} is not small against delta = {self.delta:g}")


# ---------------------------------------------------------------------------
# tangential variation
# ---------------------------------------------------------------------------


def tangential_gain(eps: float, mu: float) -> float:
    """Energy gained by pushing the tip forward by ``mu``.

    Exact difference of the two competitor energies
    ``(1+eps)^2 (1-mu) + (1-2mu)`` and ``(1+eps-mu/2)^2 (1-mu) + (1-mu)``,
    which expands to ``mu eps - 5 mu^2/4 - mu^2 eps + mu^3/4``.
    """
    a = (1.0 + eps) ** 2 * (1.0 - mu) + (1.0 - 2.0 * mu)
    b = (1.0 + eps - 0.5 * mu) ** 2 * (1.0 - mu) + (1.0 - mu)
    return a - b


def tangential_gain_poly(eps: float, mu: float) -> float:
    """The expanded polynomial form of ``tangential_gain``."""
    return mu * eps - 1.25 * mu * mu - mu * mu * eps + 0.25 * mu**3


# ---------------------------------------------------------------------------
# polar building blocks
# ---------------------------------------------------------------------------
# each returns (value, d/dr, d/dphi)


def _half_sin(r, p):
    sr = np.sqrt(r)
    return sr * np.sin(p / 2), 0.5 * np.sin(p / 2) / sr, 0.5 * sr * np.cos(p / 2)


def _half_cos(r, p):
    sr = np.sqrt(r)
    return sr * np.cos(p / 2), 0.5 * np.cos(p / 2) / sr, -0.5 * sr * np.sin(p / 2)


def _log_cos(r, p):
    sr, lr = np.sqrt(r), np.log(r)
    c, s = np.cos(p / 2), np.sin(p / 2)
    return sr * lr * c, (0.5 * lr + 1.0) * c / sr, -0.5 * sr * lr * s


def _phi_sin(r, p):
    sr = np.sqrt(r)
    c, s = np.cos(p / 2), np.sin(p / 2)
    return sr * p * s, 0.5 * p * s / sr, sr * (s + 0.5 * p * c)


def _conj_log(r, p):
    """``r^(1/2) (phi cos(phi/2) + ln r sin(phi/2))``."""
    sr, lr = np.sqrt(r), np.log(r)
    c, s = np.cos(p / 2), np.sin(p / 2)
    val = sr * (p * c + lr * s)
    d_r = (0.5 * p * c + (0.5 * lr + 1.0) * s) / sr
    d_p = sr * (c - 0.5 * p * s + 0.5 * lr * c)
    return val, d_r, d_p


def _dot(f, g):
    def integrand(r, p):
        _, fr, fp = f(r, p)
        _, gr, gp = g(r, p)
        return fr * gr + fp * gp / (r * r)

    return integrand


def claim_quadratures(**quad) -> tuple[float, float, float]:
    """Three gradient pairings over the unit disk slit along the negative axis.

    Returns
    -------
    tuple of float
        ``<grad S, grad C>``, ``<grad (r^(1/2) ln r cos), grad C>`` and
        ``<grad (r^(1/2) phi sin(phi/2)), grad C>`` with
        ``S = r^(1/2) sin(phi/2)`` and ``C = r^(1/2) cos(phi/2)``. The closed
        forms are ``0``, ``0`` and ``-pi/2``.
    """
    return (
        slit_disk_integral(_dot(_half_sin, _half_cos), **quad),
        slit_disk_integral(_dot(_log_cos, _half_cos), **quad),
        slit_disk_integral(_dot(_phi_sin, _half_cos), **quad),
    )


# ---------------------------------------------------------------------------
# orthogonal variation
# ---------------------------------------------------------------------------


@dataclass
class ModelPair:
    """``u = sqrt(2/pi) S + eps v`` with crack ``x2 = eps f(x1)``."""

    eps: float
    sol: SeriesSolution

    def derivs(self, r, p):
        """``(u, u_r, u_phi)`` in polar coordinates about the origin."""
        v, v_r, v_p, _, _ = v_derivs(self.sol, r, p)
        s, s_r, s_p = _half_sin(r, p)
        return (
            SQRT_2_OVER_PI * s + self.eps * v,
            SQRT_2_OVER_PI * s_r + self.eps * v_r,
            SQRT_2_OVER_PI * s_p + self.eps * v_p,
        )

    def energy_density(self, r, p):
        _, u_r, u_p = self.derivs(r, p)
        return u_r * u_r + u_p * u_p / (r * r)

    def crack(self, x1):
        return self.eps * f_derivs(self.sol, x1)[0]

    def crack_slope(self, x1):
        return self.eps * f_derivs(self.sol, x1)[1]


def model_pair(eps: float, sigma: float = 0.0, sol: SeriesSolution | None = None) -> ModelPair:
    """The log pair ``z`` at amplitude ``eps`` plus a remainder of size ``sigma eps``.

    The remainder is the second even mode scaled to unit gradient norm on
    ``B_1``, so that ``||grad R_0||_{L^2(B_1)} = sigma eps``.
    """
    sol = SeriesSolution.mode("a0", coef=1.0) if sol is None else sol
    if sigma != 0.0:
        r0 = SeriesSolution.mode("a", 2)
        sol = sol + r0.scaled(sigma / math.sqrt(mode_energy(r0, 1.0)))
    return ModelPair(eps=float(eps), sol=sol)


def shifted_radius(phi, delta: float):
    """Distance from the origin to the circle ``|x - delta e2| = 1`` along ``phi``."""
    return delta * np.sin(phi) + np.sqrt(1.0 - (delta * np.cos(phi)) ** 2)


def _circle_crossing(pair: ModelPair, cy: float) -> float:
    g = lambda x: x * x + (float(pair.crack(x)) - cy) ** 2 - 1.0
    return optimize.brentq(g, -1.5, -0.5, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def _near_pi(ang: float) -> float:
    return ang + 2.0 * math.pi * round((math.pi - ang) / (2.0 * math.pi))


def exit_angle(pair: ModelPair) -> float:
    """Polar angle (near ``pi``) where the crack leaves ``B_1``."""
    x1 = _circle_crossing(pair, 0.0)
    return _near_pi(math.atan2(float(pair.crack(x1)), x1))


def solve_rotation(pair: ModelPair, delta: float) -> float:
    """Rotation ``dt`` of the translated crack that keeps it ending on the crack.

    With ``psi`` the exit angle of the crack on the unit circle, solves
    ``sin(psi + dt) + delta = eps f(cos(psi + dt))``: the crack rotated by
    ``dt`` about the origin and shifted by ``delta e2`` then leaves
    ``B_1(delta e2)`` exactly where the original crack does.
    """
    psi = exit_angle(pair)

    def F(t):
        return math.sin(psi + t) + delta - float(pair.crack(math.cos(psi + t)))

    w = min(0.5, 4.0 * abs(delta) + 1e-3)
    return optimize.brentq(F, -w, w, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def length_change(pair: ModelPair, delta: float) -> float:
    """``H^1(crack cap B_1(delta e2)) - H^1(crack cap B_1)``."""
    x_hat = _circle_crossing(pair, delta)
    x_one = _circle_crossing(pair, 0.0)
    ds = lambda x: math.sqrt(1.0 + float(pair.crack_slope(x)) ** 2)
    val, _ = integrate.quad(ds, x_hat, x_one, epsabs=1e-16, epsrel=1e-13)
    return float(val)


def _boundary_grid(psi: float, panels: int = 128, order: int = 32):
    """Gauss nodes on ``phi in (psi - 2 pi, psi)`` and ``theta = phi - psi + pi``."""
    edges = np.linspace(psi - 2.0 * np.pi, psi, panels + 1)
    pts = [interval_rule(a, b, order) for a, b in zip(edges[:-1], edges[1:])]
    phi = np.concatenate([p for p, _ in pts])
    return phi, phi - psi + np.pi, np.concatenate([w for _, w in pts])


def shifted_trace(pair: ModelPair, delta: float, delta_tilde: float, phi) -> np.ndarray:
    """``u`` on ``|x - delta e2| = 1`` at the rotated angle ``phi + delta_tilde``.

    The angle about the origin is continued from the crack exit, so the trace
    is continuous on the circle minus the exit point.
    """
    psi = exit_angle(pair)
    px = np.cos(phi + delta_tilde)
    py = delta + np.sin(phi + delta_tilde)
    rho = np.hypot(px, py)
    ang = np.arctan2(py, px)
    exit_ang = _near_pi(math.atan2(delta + math.sin(psi + delta_tilde), math.cos(psi + delta_tilde)))
    ang = exit_ang - np.mod(exit_ang - ang, 2.0 * np.pi)
    return pair.derivs(rho, ang)[0]


def shell_energy(pair: ModelPair, delta: float, n_phi: int = 512, panels: int = 32, order: int = 8) -> float:
    """``int_{B_1(delta e2)} |grad u|^2 - int_{B_1} |grad u|^2`` (signed shell integral)."""
    psi = exit_angle(pair)
    edges = np.linspace(psi - 2.0 * np.pi, psi, panels + 1)
    per = max(n_phi // panels, 4)
    pts = [interval_rule(a, b, per) for a, b in zip(edges[:-1], edges[1:])]
    phi = np.concatenate([p for p, _ in pts])
    wp = np.concatenate([w for _, w in pts])
    R = shifted_radius(phi, delta)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (R - 1.0)
    r = 1.0 + half[:, None] * (x[None, :] + 1.0)
    p = np.broadcast_to(phi[:, None], r.shape)
    vals = pair.energy_density(r, p) * r
    return float(np.sum(wp * half * (vals @ w)))


def _boundary_pairing(pair: ModelPair, phi, w, q) -> float:
    """``int_{dB_1} q du/dr``; equals ``<grad u, grad Q>`` for any ``Q`` with trace ``q``
    because ``u`` is harmonic with zero flux through the crack."""
    _, u_r, _ = pair.derivs(np.ones_like(phi), phi)
    return float(np.dot(w, q * u_r))


def harmonic_correction_energy(pair: ModelPair, delta: float, delta_tilde: float, n_modes: int = 512) -> dict:
    """Energy change of ``w = u + H[p]`` where ``p`` is the trace mismatch.

    ``H[p]`` is the zero-flux harmonic extension of ``p``. The cross term
    ``2 <grad u, grad H[p]>`` is the boundary pairing of ``p`` with
    ``du/dr``; the self term ``|grad H[p]|^2`` is evaluated for the straight
    slit from the expansion in ``r^(m/2) cos(m theta/2)``, which is exact up
    to ``O(eps delta^2)``.
    """
    psi = exit_angle(pair)
    phi, theta, w = _boundary_grid(psi)
    g_u = pair.derivs(np.ones_like(phi), phi)[0]
    p = shifted_trace(pair, delta, delta_tilde, phi) - g_u
    m = np.arange(1, n_modes + 1)
    cp = np.cos(0.5 * m[:, None] * theta[None, :]) @ (w * p) / np.pi
    lin = 2.0 * _boundary_pairing(pair, phi, w, p)
    quad = float(np.sum(np.pi * 0.5 * m * cp * cp))
    return {
        "cross": lin,
        "self": quad,
        "total": lin + quad,
        "tail_coeff": float(abs(cp[-1])),
        "trace_rms": float(math.sqrt(np.dot(w, p * p) / (2.0 * np.pi))),
    }


def explicit_competitor_energy(pair: ModelPair, delta: float, delta_tilde: float, **quad) -> dict:
    """Energy change of the closed-form competitor ``u + q`` with

    ``q = delta sqrt(2/pi) C + (eps delta/2) Q + (3 eps delta/4) S``,

    ``Q = r^(1/2) (phi cos(phi/2) + ln r sin(phi/2))``. Also reports how far
    its trace is from the shifted trace it is meant to match.
    """
    eps = pair.eps
    coefs = (delta * SQRT_2_OVER_PI, 0.5 * eps * delta, 0.75 * eps * delta)
    atoms = (_half_cos, _conj_log, _half_sin)

    def q_derivs(r, p):
        out = [0.0, 0.0, 0.0]
        for c, f in zip(coefs, atoms):
            for i, t in enumerate(f(r, p)):
                out[i] = out[i] + c * t
        return out

    def self_term(r, p):
        _, q_r, q_p = q_derivs(r, p)
        return q_r * q_r + q_p * q_p / (r * r)

    psi = exit_angle(pair)
    phi, _, w = _boundary_grid(psi, 32, 16)
    one = np.ones_like(phi)
    q = q_derivs(one, phi)[0]
    cross = 2.0 * _boundary_pairing(pair, phi, w, q)
    d = cross + slit_disk_integral(self_term, **quad)
    mismatch = pair.derivs(one, phi)[0] + q - shifted_trace(pair, delta, delta_tilde, phi)
    return {"cross": cross, "total": d, "trace_rms": float(math.sqrt(np.dot(w, mismatch * mismatch) / (2.0 * np.pi)))}


@dataclass
class OrthogonalLedger:
    """Itemized comparison of ``(u, crack)`` against the shifted competitor on ``B_1(delta e2)``.

    Signs follow ``J(u) - J(w)``: positive ``total_dJ`` means the competitor
    has lower energy.
    """

    eps: float
    delta: float
    sigma: float
    delta_tilde: float
    scale: float  # eps * delta * sqrt(pi/2)
    quadratures: list
    shell_dirichlet: float
    competitor_dirichlet: float
    competitor_detail: dict
    explicit_competitor_dirichlet: float
    explicit_competitor_detail: dict
    length_change: float
    total_dJ: float
    explicit_total_dJ: float
    rotation_coefficients: dict
    background: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def orthogonal_ledger(
    eps: float,
    delta: float,
    sigma: float = 0.0,
    sol: SeriesSolution | None = None,
    ordering_factor: float = ORDERING_FACTOR,
    n_modes: int = 512,
) -> OrthogonalLedger:
    """Compare the model pair with its translated-rotated competitor.

    Parameters
    ----------
    eps, delta, sigma : float
        Perturbation amplitude, ball shift and remainder size. Requires
        ``sigma eps << delta << eps`` up to ``ordering_factor``.
    sol : SeriesSolution, optional
        Linearized pair defining the perturbation; the log pair by default.
    n_modes : int
        Modes in the harmonic correction.

    Returns
    -------
    OrthogonalLedger
        ``shell_dirichlet`` is the energy of ``u`` on the shifted ball minus
        that on ``B_1``; ``competitor_dirichlet`` the energy of the admissible
        competitor minus that of ``u`` on ``B_1``; ``length_change`` the crack
        length in the shifted ball minus that of the rigidly moved crack.
        ``total_dJ = shell - competitor + length``. ``background`` repeats
        the three items for ``eps = 0`` (the pure tip pair, order
        ``delta^2``); the ``leading_*`` ratios subtract it.
    """
    VariationParams(eps=eps, delta=delta, sigma=sigma).check_orthogonal(ordering_factor)
    pair = model_pair(eps, sigma, sol)
    dt = solve_rotation(pair, delta)
    scale = eps * delta * SQRT_PI_OVER_2

    shell = shell_energy(pair, delta)
    harm = harmonic_correction_energy(pair, delta, dt, n_modes)
    expl = explicit_competitor_energy(pair, delta, dt)
    dl = length_change(pair, delta)
    total = shell - harm["total"] + dl
    total_expl = shell - expl["total"] + dl

    flat = ModelPair(eps=0.0, sol=pair.sol)
    bg = {
        "shell": shell_energy(flat, delta),
        "competitor": harmonic_correction_energy(flat, delta, solve_rotation(flat, delta), n_modes)["total"],
        "length": length_change(flat, delta),
    }
    bg["total"] = bg["shell"] - bg["competitor"] + bg["length"]

    # coefficients of cos(phi/2) and sin(phi/2) in the rotated trace difference,
    # before and after replacing the rotation by the shift
    rot = {
        "cos_coeff": (dt - delta) / math.sqrt(2.0 * math.pi) + 0.5 * eps * dt,
        "sin_coeff_two_dt_minus_delta": 0.5 * eps * (2.0 * dt - delta),
        "sin_coeff_two_dt_plus_delta": 0.5 * eps * (2.0 * dt + delta),
        "sin_coeff_three_halves": 1.5 * eps * delta,
    }
    ratios = {
        "shell_over_scale": shell / scale,
        "competitor_over_3scale": harm["total"] / (3.0 * scale),
        "explicit_competitor_over_3scale": expl["total"] / (3.0 * scale),
        "length_over_eps_delta": dl / (eps * delta),
        "total_over_minus_scale": total / (-scale),
        "leading_shell_over_scale": (shell - bg["shell"]) / scale,
        "leading_competitor_over_3scale": (harm["total"] - bg["competitor"]) / (3.0 * scale),
        "leading_total_over_minus_scale": (total - bg["total"]) / (-scale),
    }
    return OrthogonalLedger(
        eps=eps,
        delta=delta,
        sigma=sigma,
        delta_tilde=dt,
        scale=scale,
        quadratures=list(claim_quadratures()),
        shell_dirichlet=shell,
        competitor_dirichlet=harm["total"],
        competitor_detail=harm,
        explicit_competitor_dirichlet=expl["total"],
        explicit_competitor_detail=expl,
        length_change=dl,
        total_dJ=total,
        explicit_total_dJ=total_expl,
        rotation_coefficients=rot,
        background=bg,
        ratios=ratios,
    )


# ---------------------------------------------------------------------------
# domain variations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpField:
    """``eta(x) = amplitude * direction * psi(|x - center| / radius)``.

    ``psi(t) = exp(1 - 1/(1 - t^2))`` on ``t < 1`` and zero outside, so
    ``eta`` is smooth with support the closed disk of the given radius.
    """

    center: tuple[float, float]
    radius: float
    direction: tuple[float, float] = (0.0, 1.0)
    amplitude: float = 1.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise SupportError("radius must be positive")

    def supports(self):
        return [(np.asarray(self.center, dtype=float), float(self.radius))]

    def _psi(self, x):
        d = np.asarray(x, dtype=np.float64) - np.asarray(self.center)
        t2 = np.einsum("...i,...i->...", d, d) / self.radius**2
        inside = t2 < 1.0
        psi = np.zeros_like(t2)
        q = 1.0 - t2[inside]
        psi[inside] = np.exp(1.0 - 1.0 / q)
        dpsi = np.zeros(t2.shape + (2,))
        dpsi[inside] = (psi[inside] * (-2.0 / (q * q)))[:, None] * d[inside] / self.radius**2
        return psi, dpsi

    def value(self, x):
        psi, _ = self._psi(x)
        return self.amplitude * psi[..., None] * np.asarray(self.direction)

    def jacobian(self, x):
        """``D eta[..., i, j] = d eta_i / d x_j``."""
        _, dpsi = self._psi(x)
        return self.amplitude * np.asarray(self.direction)[:, None] * dpsi[..., None, :]


@dataclass(frozen=True)
class FieldSum:
    terms: tuple

    def supports(self):
        return [s for t in self.terms for s in t.supports()]

    def value(self, x):
        return sum(t.value(x) for t in self.terms)

    def jacobian(self, x):
        return sum(t.jacobian(x) for t in self.terms)


def check_support(eta, crack: CrackGraph, clearance: float = 0.0):
    """Reject test fields whose support meets the tip or the outer circle."""
    tip = crack.tip
    for c, rad in eta.supports():
        if np.hypot(*(c - tip)) <= rad + clearance:
            raise SupportError("test field support touches the crack tip")
        if np.hypot(*c) + rad >= 1.0:
            raise SupportError("test field support touches the outer circle")


# degree-4 six-point rule on the reference triangle (barycentric, weights sum to 1)
_TRI_A = (0.816847572980459, 0.091576213509771, 0.091576213509771)
_TRI_B = (0.108103018168070, 0.445948490915965, 0.445948490915965)
_TRI_BARY = np.array([np.roll(_TRI_A, k) for k in range(3)] + [np.roll(_TRI_B, k) for k in range(3)])
_TRI_W = np.array([0.109951743655322] * 3 + [0.223381589678011] * 3)


def domain_variation_residual(
    field: DiscreteHarmonicField,
    eta,
    crack: CrackGraph | None = None,
    clearance: float = 0.0,
    line_order: int = 6,
) -> float:
    """First variation of ``J`` along ``x + t eta``.

    ``int |grad u|^2 div eta - 2 grad u . (D eta) grad u + int_crack tau . (D eta) tau``

    Parameters
    ----------
    field : DiscreteHarmonicField
    eta : BumpField or FieldSum
        Smooth test field supported away from the tip and the outer circle.
    crack : CrackGraph, optional
        Defaults to the crack of ``field``.

    Returns
    -------
    float
        Zero for a critical pair; for the discrete minimizer of a fixed crack
        it equals the derivative of the minimal energy as the crack is moved
        by ``eta``.
    """
    crack = crack or field.crack
    check_support(eta, crack, clearance)
    mesh = field.mesh
    pts = np.einsum("qk,tkd->tqd", _TRI_BARY, mesh.nodes[mesh.tris])
    D = eta.jacobian(pts)  # (nt, nq, 2, 2)
    g = field.gradients
    div = D[..., 0, 0] + D[..., 1, 1]
    g2 = np.einsum("ti,ti->t", g, g)
    quad_form = np.einsum("ti,tqij,tj->tq", g, D, g)
    bulk = float(np.dot(field.areas, (g2[:, None] * div - 2.0 * quad_form) @ _TRI_W))

    poly = crack.polyline(refine=8)
    a, b = poly[:-1], poly[1:]
    seg = b - a
    ln = np.hypot(seg[:, 0], seg[:, 1])
    tau = seg / ln[:, None]
    x, w = np.polynomial.legendre.leggauss(line_order)
    s = 0.5 * (x + 1.0)
    qp = a[:, None, :] + s[None, :, None] * seg[:, None, :]
    Dl = eta.jacobian(qp)
    tang = np.einsum("si,sqij,sj->sq", tau, Dl, tau)
    line = float(np.sum(0.5 * ln * (tang @ w)))
    return bulk + line


def eta_gradient_norm(eta, n: int = 401) -> float:
    """``||D eta||_{L^2}`` on a uniform grid covering the supports."""
    total = 0.0
    for c, rad in eta.supports():
        xs = np.linspace(-rad, rad, n)
        X, Y = np.meshgrid(c[0] + xs, c[1] + xs, indexing="ij")
        D = eta.jacobian(np.stack([X, Y], axis=-1))
        total += float(np.sum(D * D)) * (xs[1] - xs[0]) ** 2
    return math.sqrt(total)


def moved_crack(crack: CrackGraph, eta, t: float) -> CrackGraph:
    """Image of a graph crack under ``x + t eta`` for vertical ``eta``.

    Horizontal components would reparametrize the graph and are rejected.
    """
    pts = np.stack([crack.knots, crack.values], axis=1)
    disp = eta.value(pts)
    if np.any(np.abs(disp[:, 0]) > 0.0):
        raise ValueError("moved_crack needs a vertical test field")
    return crack.with_values(crack.values + t * disp[:, 1])


def stationarity_table(field: DiscreteHarmonicField, fields: Sequence, crack: CrackGraph | None = None) -> list[dict]:
    rows = []
    for eta in fields:
        res = domain_variation_residual(field, eta, crack)
        rows.append({"residual": res, "eta_norm": eta_gradient_norm(eta)})
    return rows

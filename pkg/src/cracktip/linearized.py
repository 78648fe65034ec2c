"""Series solutions of the linearized crack-tip system.

A solution is a pair ``(v, f)``: ``v`` harmonic on the unit disk slit along the
negative ``x1`` axis, ``f`` a graph perturbation of the slit. It is stored by
its coefficients

    v = a + a0 z(r, phi) + sum a_k r^alpha_k cos(alpha_k phi)
          + sum b_k r^(k-1/2) sin((k-1/2) phi),
    f = a0 h(|x1|) + sum a_k sqrt(2 pi) sin(alpha_k pi) |x1|^(alpha_k+1/2),

with ``z = r^(1/2) (phi sin(phi/2) - ln r cos(phi/2))`` and
``h(r) = -sqrt(2 pi) r ln r``. Angles live in ``(-pi, pi]``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .certificate import expand_even
from .homogeneity import sinc, table
from .quadrature import slit_disk_integral

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
DEFAULT_MODES = 32
DEGENERATE_TOL = 1e-8

# +1: f'' = +sqrt(2/(pi r)) (d1 v+ + d1 v-), the convention used throughout.
# -1 flips the sign of the curvature equation for experiments.
F_SIGN = 1.0


class DegenerateCorrection(ValueError):
    pass


@dataclass(frozen=True)
class SeriesSolution:
    """Coefficients of a linearized-system solution.

    ``a_k[i]`` and ``b_k[i]`` belong to mode ``k = i + 1``.
    """

    a: float = 0.0
    a0: float = 0.0
    a_k: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b_k: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a_k = np.atleast_1d(np.asarray(self.a_k, dtype=np.float64)).copy()
        b_k = np.atleast_1d(np.asarray(self.b_k, dtype=np.float64)).copy()
        n = max(a_k.size, b_k.size)
        a_k = np.pad(a_k, (0, n - a_k.size))
        b_k = np.pad(b_k, (0, n - b_k.size))
        a_k.setflags(write=False)
        b_k.setflags(write=False)
        object.__setattr__(self, "a_k", a_k)
        object.__setattr__(self, "b_k", b_k)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def n_modes(self) -> int:
        return int(self.a_k.size)

    @property
    def alpha(self) -> np.ndarray:
        return table(max(self.n_modes, 64)).alpha[: self.n_modes]

    @property
    def beta(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1) - 0.5

    @property
    def f_coeffs(self) -> np.ndarray:
        """Derived coefficients of ``|x1|^(alpha_k + 1/2)`` in ``f``."""
        return self.a_k * SQRT_2PI * np.sin(self.alpha * np.pi)

    @classmethod
    def mode(cls, kind: str, k: int = 1, coef: float = 1.0, n_modes: int | None = None) -> "SeriesSolution":
        """Single-mode solution; ``kind`` is ``'a'``, ``'b'``, ``'a0'`` or ``'const'``."""
        n = max(int(n_modes or 0), k if kind in ("a", "b") else 0)
        a_k = np.zeros(n)
        b_k = np.zeros(n)
        if kind == "a":
            a_k[k - 1] = coef
            return cls(a_k=a_k, b_k=b_k)
        if kind == "b":
            b_k[k - 1] = coef
            return cls(a_k=a_k, b_k=b_k)
        if kind == "a0":
            return cls(a0=coef, a_k=a_k, b_k=b_k)
        if kind == "const":
            return cls(a=coef, a_k=a_k, b_k=b_k)
        raise ValueError(f"unknown mode kind {kind!r}")

    def __add__(self, other: "SeriesSolution") -> "SeriesSolution":
        n = max(self.n_modes, other.n_modes)
        pad = lambda x: np.pad(x, (0, n - x.size))
        return SeriesSolution(
            a=self.a + other.a,
            a0=self.a0 + other.a0,
            a_k=pad(self.a_k) + pad(other.a_k),
            b_k=pad(self.b_k) + pad(other.b_k),
        )

    def scaled(self, c: float) -> "SeriesSolution":
        return SeriesSolution(a=c * self.a, a0=c * self.a0, a_k=c * self.a_k, b_k=c * self.b_k)

    def to_dict(self) -> dict:
        tab = table(max(self.n_modes, 64))
        digest = hashlib.sha256(np.ascontiguousarray(tab.alpha[: max(self.n_modes, 1)]).tobytes()).hexdigest()
        return {
            "a": self.a,
            "a0": self.a0,
            "a_k": [float(x) for x in self.a_k],
            "b_k": [float(x) for x in self.b_k],
            "n_modes": self.n_modes,
            "alpha_table_sha256": digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesSolution":
        return cls(a=d["a"], a0=d["a0"], a_k=np.array(d["a_k"], dtype=float), b_k=np.array(d["b_k"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _check_r(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("r must be positive")
    return r


def z_derivs(r, phi):
    """Value and polar derivatives of ``z``: ``(v, v_r, v_p, v_rr, v_pp)``."""
    r = np.asarray(r, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    s, c = np.sin(phi / 2.0), np.cos(phi / 2.0)
    lr = np.log(r)
    sr = np.sqrt(r)
    p = phi * s
    p1 = s + 0.5 * phi * c
    p2 = c - 0.25 * phi * s
    q, q1, q2 = c, -0.5 * s, -0.25 * c
    val = sr * (p - lr * q)
    v_r = (0.5 * p - (0.5 * lr + 1.0) * q) / sr
    v_rr = -0.25 * (p - lr * q) / (r * sr)
    v_p = sr * (p1 - lr * q1)
    v_pp = sr * (p2 - lr * q2)
    return val, v_r, v_p, v_rr, v_pp


def v_derivs(sol: SeriesSolution, r, phi):
    """Value and polar derivatives of ``v``: ``(v, v_r, v_p, v_rr, v_pp)``."""
    r = _check_r(r)
    phi = np.asarray(phi, dtype=np.float64)
    r, phi = np.broadcast_arrays(r, phi)
    out = [np.full(r.shape, sol.a), np.zeros(r.shape), np.zeros(r.shape), np.zeros(r.shape), np.zeros(r.shape)]
    if sol.a0 != 0.0:
        for i, term in enumerate(z_derivs(r, phi)):
            out[i] = out[i] + sol.a0 * term
    lr = np.log(r)[..., None]
    ph = phi[..., None]
    for coef, expo, trig in ((sol.a_k, sol.alpha, "cos"), (sol.b_k, sol.beta, "sin")):
        nz = coef != 0.0
        if not np.any(nz):
            continue
        c, b = coef[nz], expo[nz]
        rb = np.exp(b * lr)
        if trig == "cos":
            t, dt = np.cos(b * ph), -np.sin(b * ph)
        else:
            t, dt = np.sin(b * ph), np.cos(b * ph)
        rinv = 1.0 / r[..., None]
        out[0] = out[0] + (rb * t) @ c
        out[1] = out[1] + (b * rb * rinv * t) @ c
        out[2] = out[2] + (b * rb * dt) @ c
        out[3] = out[3] + (b * (b - 1.0) * rb * rinv * rinv * t) @ c
        out[4] = out[4] + (-(b * b) * rb * t) @ c
    return tuple(out)


def eval_v(sol: SeriesSolution, r, phi):
    """Truncated series value of ``v`` at polar points."""
    return v_derivs(sol, r, phi)[0]


def grad_v(sol: SeriesSolution, r, phi):
    """Cartesian gradient of ``v``: ``(d1, d2)``."""
    _, v_r, v_p, _, _ = v_derivs(sol, r, phi)
    c, s = np.cos(phi), np.sin(phi)
    return c * v_r - s * v_p / r, s * v_r + c * v_p / r


def h_func(r):
    r = np.asarray(r, dtype=np.float64)
    return -SQRT_2PI * r * np.log(r)


def f_derivs(sol: SeriesSolution, x1):
    """``(f, df/dx1, d2f/dx1^2)`` at ``x1 < 0``."""
    x1 = np.asarray(x1, dtype=np.float64)
    if np.any(x1 >= 0.0):
        raise ValueError("x1 must be negative")
    r = -x1
    lr = np.log(r)
    f = sol.a0 * h_func(r)
    # d/dx1 = -d/dr
    fp = sol.a0 * SQRT_2PI * (lr + 1.0)
    fpp = -sol.a0 * SQRT_2PI / r
    cf = sol.f_coeffs
    nz = cf != 0.0
    if np.any(nz):
        c, b = cf[nz], sol.alpha[nz] + 0.5
        rb = np.exp(b * lr[..., None])
        f = f + rb @ c
        fp = fp - (b * rb / r[..., None]) @ c
        fpp = fpp + (b * (b - 1.0) * rb / (r * r)[..., None]) @ c
    return f, fp, fpp


def eval_f(sol: SeriesSolution, x1):
    """Crack perturbation ``f`` at ``x1 in [-1, 0)``."""
    return f_derivs(sol, x1)[0]


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------


@dataclass
class ResidualGrid:
    r: np.ndarray
    phi: np.ndarray
    x1: np.ndarray

    @classmethod
    def default(cls, r_min: float = 1e-2, n_r: int = 25, n_phi: int = 40, n_x: int = 1000) -> "ResidualGrid":
        r = np.geomspace(r_min, 1.0, n_r)
        phi = np.linspace(-np.pi, np.pi, n_phi + 2)[1:-1]
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        x1 = -np.geomspace(r_min, 1.0, n_x)
        return cls(r=rr.ravel(), phi=pp.ravel(), x1=x1)


@dataclass
class Residuals:
    laplace: float
    neumann_upper: float
    neumann_lower: float
    curvature: float

    def as_tuple(self):
        return (self.laplace, self.neumann_upper, self.neumann_lower, self.curvature)

    def max(self) -> float:
        return max(self.as_tuple())


def residual(sol: SeriesSolution, grid: ResidualGrid | None = None, f_sign: float | None = None) -> Residuals:
    """Sup-norm residuals of the four equations of the linearized system.

    1. ``Laplace v = 0`` in the slit disk.
    2. ``-d2 v(x1, 0+) = (1/2) sqrt(2/pi) d/dx1 (f / sqrt(-x1))``.
    3. ``d2 v(x1, 0-) = (1/2) sqrt(2/pi) d/dx1 (f / sqrt(-x1))``.
    4. ``f'' = f_sign sqrt(2/(pi r)) (d1 v(x1, 0+) + d1 v(x1, 0-))``.
    """
    grid = grid or ResidualGrid.default()
    sign = F_SIGN if f_sign is None else float(f_sign)
    _, v_r, _, v_rr, v_pp = v_derivs(sol, grid.r, grid.phi)
    lap = v_rr + v_r / grid.r + v_pp / grid.r**2

    r = -grid.x1
    _, vr_up, vp_up, _, _ = v_derivs(sol, r, np.full(r.shape, np.pi))
    _, vr_lo, vp_lo, _, _ = v_derivs(sol, r, np.full(r.shape, -np.pi))
    # on the slit cos(phi) = -1, sin(phi) = 0
    d2_up, d2_lo = -vp_up / r, -vp_lo / r
    d1_up, d1_lo = -vr_up, -vr_lo

    f, fp, fpp = f_derivs(sol, grid.x1)
    sr = np.sqrt(r)
    # d/dx1 (f / sqrt(-x1)) = f'/sqrt(r) + f / (2 r^(3/2))
    flux = 0.5 * SQRT_2_OVER_PI * (fp / sr + f / (2.0 * r * sr))
    curv = fpp - sign * np.sqrt(2.0 / (np.pi * r)) * (d1_up + d1_lo)
    return Residuals(
        laplace=float(np.max(np.abs(lap))),
        neumann_upper=float(np.max(np.abs(-d2_up - flux))),
        neumann_lower=float(np.max(np.abs(d2_lo - flux))),
        curvature=float(np.max(np.abs(curv))),
    )


# ---------------------------------------------------------------------------
# boundary-value construction
# ---------------------------------------------------------------------------


@dataclass
class BVPResult:
    solution: SeriesSolution
    l2_error: float
    even_l2_error: float
    odd_l2_error: float
    correction: float


def _odd_coeffs(func, n_modes):
    out = np.empty(n_modes)
    for k in range(1, n_modes + 1):
        beta = k - 0.5
        val = integrate.quad(
            lambda p: float(func(np.array([p]))[0]) * math.sin(beta * p), 0.0, np.pi, epsabs=1e-13, epsrel=1e-12, limit=400
        )[0]
        # sin(beta phi) has squared norm pi on (-pi, pi); integrand is even
        out[k - 1] = 2.0 * val / np.pi
    return out


def _z_boundary(p):
    return p * np.sin(p / 2.0)


def solve_bvp(g: Callable, t: float = 0.0, n_modes: int = DEFAULT_MODES) -> BVPResult:
    """Series solution with ``v = g`` on the unit circle and ``f(-1) = t``.

    The even part of ``g`` is expanded in ``{1, cos(alpha_k phi)}`` by Gram
    least squares and the odd part in ``sin((k-1/2) phi)``. The resulting
    pair generally has ``f(-1) != t``; it is corrected by a multiple of
    ``(z - s, h - l)`` where ``s`` is the even expansion of ``z`` on the
    circle, which vanishes there to truncation accuracy.
    """
    n_modes = int(n_modes)
    g_arr = lambda p: np.asarray(g(np.asarray(p, dtype=np.float64)), dtype=np.float64) * np.ones_like(p)
    even = lambda p: 0.5 * (g_arr(p) + g_arr(-p))
    odd = lambda p: 0.5 * (g_arr(p) - g_arr(-p))
    ge = expand_even(even, n_modes)
    b_k = _odd_coeffs(odd, n_modes)
    se = expand_even(_z_boundary, n_modes)

    alpha = table(max(n_modes, 64)).alpha[:n_modes]
    fk = SQRT_2PI * np.sin(alpha * np.pi)
    f_u = float(ge.c @ fk)
    l_m1 = float(se.c @ fk)
    denom = 0.0 - l_m1  # h(1) = 0
    if abs(denom) < DEGENERATE_TOL:
        raise DegenerateCorrection("degenerate correction")
    c = (t - f_u) / denom
    sol = SeriesSolution(a=ge.c0 - c * se.c0, a0=c, a_k=ge.c - c * se.c, b_k=b_k)

    def sq_err(p):
        return (float(g_arr(np.array([p]))[0]) - float(eval_v(sol, 1.0, p))) ** 2

    err2 = integrate.quad(sq_err, -np.pi, np.pi, epsabs=1e-15, epsrel=1e-10, limit=800)[0]
    odd_res = lambda p: (float(odd(np.array([p]))[0]) - float(np.sin(sol.beta * p) @ b_k)) ** 2
    odd2 = 2.0 * integrate.quad(odd_res, 0.0, np.pi, epsabs=1e-15, epsrel=1e-10, limit=800)[0]
    return BVPResult(
        solution=sol,
        l2_error=math.sqrt(max(err2, 0.0)),
        even_l2_error=ge.l2_error,
        odd_l2_error=math.sqrt(max(odd2, 0.0)),
        correction=c,
    )


# ---------------------------------------------------------------------------
# energies, flatness and growth
# ---------------------------------------------------------------------------


def _even_energy_gram(alpha, s):
    a = np.asarray(alpha, dtype=np.float64)
    diff = a[:, None] - a[None, :]
    summ = a[:, None] + a[None, :]
    ang = 2.0 * np.pi * sinc(np.pi * diff)
    return a[:, None] * a[None, :] * ang * s**summ / summ


def mode_energy(sol: SeriesSolution, s: float = 1.0) -> float:
    """Closed-form ``int_{B_s} |grad v|^2`` for solutions without ``z``."""
    if sol.a0 != 0.0:
        raise ValueError("closed-form energy excludes the z mode; use quadrature_energy")
    even = float(sol.a_k @ _even_energy_gram(sol.alpha, s) @ sol.a_k)
    beta = sol.beta
    odd = float(np.sum(sol.b_k**2 * np.pi * beta * s ** (2.0 * beta)))
    return even + odd


def quadrature_energy(sol: SeriesSolution, s: float = 1.0) -> float:
    """``int_{B_s} |grad v|^2`` by annular Gauss-Legendre quadrature."""

    def integrand(r, p):
        _, v_r, v_p, _, _ = v_derivs(sol, r, p)
        return v_r**2 + (v_p / r) ** 2

    return slit_disk_integral(integrand, radius=s)


def flatness_ratio(sol: SeriesSolution, s: float) -> float:
    """``||grad v||_{B_s} / ||grad v||_{B_1}`` from closed-form energies."""
    e1 = mode_energy(sol, 1.0)
    if e1 == 0.0:
        raise ValueError("zero solution")
    return math.sqrt(mode_energy(sol, s) / e1)


def flatness_factor(sol: SeriesSolution, s: float, alpha: float) -> bool:
    """Whether ``||grad v||_{B_s} < s^alpha ||grad v||_{B_1}``.

    Requires ``a = a0 = a_1 = b_1 = 0`` so that every mode has homogeneity
    at least ``3/2``.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    if alpha >= 1.5:
        raise ValueError("alpha must be below 3/2")
    low = sol.a != 0.0 or sol.a0 != 0.0 or (sol.n_modes and (sol.a_k[0] != 0.0 or sol.b_k[0] != 0.0))
    if low:
        raise ValueError("low modes present: a, a0, a_1 and b_1 must vanish")
    return flatness_ratio(sol, s) < s**alpha


@dataclass(frozen=True)
class GrowthBudget:
    """Constants in the growth bounds that single out series solutions."""

    kappa: float
    C_v: float
    C_f: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 0.5:
            raise ValueError("kappa must lie in (0, 1/2)")
        if self.C_v <= 0 or self.C_f <= 0:
            raise ValueError("constants must be positive")


def growth_profile(sol: SeriesSolution, kappa: float, j_max: int = 20, log_corrected: bool = False) -> dict:
    """Ratios of each growth quantity to its bound at ``r = 2^-j``.

    With ``log_corrected`` the bounds carry ``(1 + ln(1/r))`` factors in
    place of the ``r^-kappa`` weights.
    """
    rs = 2.0 ** -np.arange(j_max + 1)
    ev = np.array([quadrature_energy(sol, r) / r for r in rs])
    f, fp, _ = f_derivs(sol, -rs)
    if log_corrected:
        w = 1.0 + np.log(1.0 / rs)
        return {"r": rs, "v": ev / w**2, "f": np.abs(f) / (w * rs), "fp": np.abs(fp) / w}
    return {
        "r": rs,
        "v": ev / rs ** (-2.0 * kappa),
        "f": np.abs(f) / rs ** (1.0 - kappa),
        "fp": np.abs(fp) / rs ** (-kappa),
    }


def satisfies_growth(sol: SeriesSolution, budget: GrowthBudget, j_max: int = 20) -> bool:
    prof = growth_profile(sol, budget.kappa, j_max)
    return bool(np.all(prof["v"] <= budget.C_v) and np.all(prof["f"] <= budget.C_f) and np.all(prof["fp"] <= budget.C_f))


# ---------------------------------------------------------------------------
# rotation
# ---------------------------------------------------------------------------


def rotation_shift(c: float, lam: float, eps: float = 0.0) -> float:
    """Change of the ``r^(1/2) cos(phi/2)`` coefficient from a rotation by ``c eps``.

    Rotating ``sqrt(2/pi) lam r^(1/2) sin(phi/2)`` by ``c eps`` and dividing
    the ``cos`` part by ``eps`` leaves ``sqrt(2/pi) lam (c/2) sinc(c eps/2)``.
    """
    return SQRT_2_OVER_PI * lam * 0.5 * c * sinc(0.5 * c * eps)


def rotate_normalize(sol: SeriesSolution, lam: float = 1.0, eps: float = 0.0) -> tuple[SeriesSolution, float]:
    """Remove the ``a_1`` mode by a rotation of the coordinates.

    Returns the normalized solution and the rotation rate ``theta``; the
    physical angle is ``theta * eps``. With ``eps = 0`` the first-order
    relation is used and the other coefficients are unchanged.
    """
    if sol.n_modes == 0 or sol.a_k[0] == 0.0:
        return sol, 0.0
    a1 = float(sol.a_k[0])
    theta = -a1 / (SQRT_2_OVER_PI * lam * 0.5)
    if eps > 0.0:
        # (c/2) sinc(c eps/2) = sin(c eps/2)/eps, inverted on its monotone branch
        arg = -a1 * eps / (SQRT_2_OVER_PI * lam)
        if abs(arg) > 1.0:
            raise ValueError("a_1 too large to be removed by a rotation at this eps")
        theta = 2.0 * math.asin(arg) / eps
    a_k = np.array(sol.a_k)
    a_k[0] = 0.0
    return replace(sol, a_k=a_k), float(theta)

"""Completeness certificate for the even basis {1, cos(alpha_k phi)} on (-pi, pi).

Each ``cos(k phi)`` is compared with its best multiple of ``cos(alpha_k phi)``.
The squared misfits (normalized by ``pi``) are bounded termwise by five
elementary series whose sums have closed forms; if the total stays below one,
the map ``cos(k phi) -> t_k cos(alpha_k phi)`` is a perturbation of the
identity and the cosine family spans the even functions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, linalg, special

from . import _kernels
from .homogeneity import sinc, table

QUAD_TOL = 1e-12
GRAM_COND_LIMIT = 1e12
SHARP_K = 10_000
PARTIAL_SUM_N = 1_000_000


class CertificationFailure(RuntimeError):
    """The bound did not close; indicates an implementation error."""


def _inner_terms(alpha, k):
    """Closed forms of the normalized inner products.

    Returns ``(N, D)`` with ``N = (1/pi) int cos(alpha phi) cos(k phi)`` and
    ``D = (1/pi) int cos(alpha phi)^2`` over ``(-pi, pi)``.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    num = (2.0 * alpha / (alpha + k)) * sinc(np.pi * (k - alpha))
    den = 1.0 + np.sin(2.0 * alpha * np.pi) / (2.0 * alpha * np.pi)
    return num, den


def mode_deficit(k: int, t: float | None = None, alpha: float | None = None) -> float:
    """Normalized squared misfit ``(1/pi) int (t cos(alpha phi) - cos(k phi))^2``.

    With the defaults ``t = t_k`` and ``alpha = alpha_k`` this is the minimal
    misfit ``1 - t_k N_k``.
    """
    k = int(k)
    if alpha is None:
        tab = table(max(k, 64))
        gamma = float(tab.gamma[k - 1])
        alpha = k - gamma if k > 1 else 0.5
    num, den = _inner_terms(alpha, k)
    num, den = float(num), float(den)
    if t is None:
        return 1.0 - num * num / den
    return t * t * den - 2.0 * t * num + 1.0


def mode_deficits(k_max: int) -> np.ndarray:
    """Minimal misfits for ``k = 1..k_max`` (vectorized)."""
    tab = table(k_max)
    ks = tab.k.astype(np.float64)
    num, den = _inner_terms(tab.alpha, ks)
    return 1.0 - num * num / den


def tail_terms(k) -> np.ndarray:
    """Pointwise bounds ``T1(k)..T5(k)``, shape ``(5,) + k.shape``."""
    k = np.asarray(k, dtype=np.float64)
    k2 = k * k
    t1 = np.pi**2 / (48.0 * k2)
    t2 = 2.0 / (8.0 * k2 - 1.0)
    t3 = -1.0 / (4.0 * k2 - 1.0)
    t4 = np.pi**2 / (96.0 * (k2 * k2 - k2 / 4.0))
    t5 = (np.pi**2 / (48.0 * k2) + 2.0 / (8.0 * k2 - 1.0)) / (4.0 * k2 - 1.0)
    return np.stack([t1, t2, t3, t4, t5])


def tail_sums() -> tuple[float, float, float, float, float]:
    """Sums over ``k >= 2`` of the five bounding series.

    The first three are exact; the last two are the comparison bounds
    obtained from ``1/k^4`` series.
    """
    zeta4_tail = np.pi**4 / 90.0 - 1.0
    s1 = (np.pi**2 / 48.0) * (np.pi**2 / 6.0 - 1.0)
    s2 = 0.25 * (4.0 - math.sqrt(2.0) * np.pi / math.tan(np.pi / (2.0 * math.sqrt(2.0))) - 8.0 / 7.0)
    s3 = -1.0 / 6.0
    s4 = (np.pi**2 / 90.0) * zeta4_tail
    s5 = (10.0 / 48.0 + 8.0 / 31.0) * (4.0 / 15.0) * zeta4_tail
    return float(s1), float(s2), float(s3), float(s4), float(s5)


def pair_series_check(n_max: int = PARTIAL_SUM_N) -> tuple[float, float]:
    """Direct sum of ``2/(8k^2-1)`` to ``n_max`` plus an integral tail estimate.

    Returns ``(estimate, tail_bound)``; the neglected part is below the bound.
    """
    partial = _kernels.pair_series(n_max)
    # sum_{k>N} 2/(8k^2-1) = sum 1/(4(k^2-1/8)) ~ 1/(4(N+1/2))
    tail = 1.0 / (4.0 * (n_max + 0.5))
    return partial + tail, 1.0 / (4.0 * n_max) ** 2


@dataclass
class CertificateReport:
    deficit1: float
    tail_T: tuple
    ledger_total: float
    certified: bool
    sharp_total: float
    sharp_k: int

    def to_json(self) -> str:
        d = asdict(self)
        d["tail_T"] = list(self.tail_T)
        return json.dumps(d, indent=2, sort_keys=True)


def sharp_total(k_cut: int = SHARP_K) -> float:
    """Direct sum of per-mode deficits up to ``k_cut`` plus the asymptotic tail.

    Deficits behave like ``4/(3 pi^2 k^2)``; the tail beyond ``k_cut`` uses
    that leading term through the trigamma function.
    """
    d = mode_deficits(k_cut)
    tail = 4.0 / (3.0 * np.pi**2) * float(special.polygamma(1, k_cut + 1))
    return float(np.sum(d[::-1]) + tail)


def certify(k_cut: int = SHARP_K) -> CertificateReport:
    """Assemble the ledger and check it closes below one."""
    d1 = 1.0 - 16.0 / (9.0 * np.pi**2)
    sums = tail_sums()
    total = d1 + sum(sums)
    report = CertificateReport(
        deficit1=d1,
        tail_T=tuple(sums),
        ledger_total=float(total),
        certified=bool(total < 1.0),
        sharp_total=sharp_total(k_cut),
        sharp_k=int(k_cut),
    )
    if not report.certified:
        raise CertificationFailure(f"ledger total {total} is not below one")
    return report


def deficits_csv(k_max: int) -> str:
    """Per-mode deficits next to their pointwise tail bound."""
    d = mode_deficits(k_max)
    bound = tail_terms(np.arange(1, k_max + 1)).sum(axis=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "deficit", "tail_bound"])
    for i in range(k_max):
        w.writerow([i + 1, f"{d[i]:.17g}", "" if i == 0 else f"{bound[i]:.17g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# even expansion
# ---------------------------------------------------------------------------


def gram_matrix(alpha: Sequence[float]) -> np.ndarray:
    """Gram matrix of ``{1, cos(alpha_1 phi), ...}`` in ``L2(-pi, pi)``."""
    a = np.asarray(alpha, dtype=np.float64)
    n = a.size
    g = np.empty((n + 1, n + 1))
    g[0, 0] = 2.0 * np.pi
    g[0, 1:] = g[1:, 0] = 2.0 * np.sin(a * np.pi) / a
    diff = a[:, None] - a[None, :]
    summ = a[:, None] + a[None, :]
    off = np.pi * (sinc(np.pi * diff) + sinc(np.pi * summ))
    g[1:, 1:] = off
    return g


@dataclass
class EvenExpansion:
    """Coefficients of ``c0 + sum_k c[k-1] cos(alpha_k phi)``."""

    c0: float
    c: np.ndarray
    alpha: np.ndarray
    l2_error: float
    gram_cond: float

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=np.float64)
        return self.c0 + np.cos(np.multiply.outer(phi, self.alpha)) @ self.c


def _as_callable(samples) -> Callable[[np.ndarray], np.ndarray] | None:
    if callable(samples):
        return lambda p: np.asarray(samples(p), dtype=np.float64) * np.ones_like(p)
    return None


def _project(func, alpha):
    """Inner products of ``func`` with the basis, by adaptive quadrature."""
    rhs = np.empty(alpha.size + 1)
    # even integrand: integrate over (0, pi) and double
    f0 = lambda p: float(func(np.array([p]))[0])
    rhs[0] = 2.0 * integrate.quad(f0, 0.0, np.pi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)[0]
    for i, a in enumerate(alpha):
        val = integrate.quad(
            lambda p, a=a: f0(p) * math.cos(a * p), 0.0, np.pi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400
        )[0]
        rhs[i + 1] = 2.0 * val
    return rhs


def expand_even(samples, n_modes: int, even_tol: float = 1e-9) -> EvenExpansion:
    """Least-squares expansion of an even function in ``{1, cos(alpha_k phi)}``.

    Parameters
    ----------
    samples : callable or tuple of arrays
        Either ``g(phi)`` (vectorized) or ``(phi, values)`` on a grid
        spanning ``[-pi, pi]``.
    n_modes : int
        Number of cosine modes.

    Returns
    -------
    EvenExpansion
    """
    n_modes = int(n_modes)
    if n_modes < 0:
        raise ValueError("n_modes must be nonnegative")
    func = _as_callable(samples)
    if func is None:
        phi_s, val_s = (np.asarray(x, dtype=np.float64) for x in samples)
        order = np.argsort(phi_s)
        phi_s, val_s = phi_s[order], val_s[order]
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(phi_s, val_s)
        func = lambda p: spline(np.asarray(p, dtype=np.float64))

    probe = np.linspace(0.0, np.pi, 257)
    fp, fm = func(probe), func(-probe)
    odd = np.linalg.norm(0.5 * (fp - fm))
    if odd > even_tol * max(np.linalg.norm(0.5 * (fp + fm)), np.linalg.norm(fp), 1e-300) and odd > 1e-300:
        raise ValueError("input is not even")

    alpha = table(max(n_modes, 64)).alpha[:n_modes].copy()
    gram = gram_matrix(alpha)
    cond = float(np.linalg.cond(gram))
    if cond > GRAM_COND_LIMIT:
        raise ValueError("Gram matrix ill-conditioned; increase modes gradually")
    rhs = _project(func, alpha)
    coef = linalg.cho_solve(linalg.cho_factor(gram), rhs)
    c0, c = float(coef[0]), coef[1:]

    def sq_err(p):
        s = c0 + float(np.cos(alpha * p) @ c) if n_modes else c0
        return (float(func(np.array([p]))[0]) - s) ** 2

    err2 = 2.0 * integrate.quad(sq_err, 0.0, np.pi, epsabs=1e-15, epsrel=1e-10, limit=800)[0]
    return EvenExpansion(c0=c0, c=c, alpha=alpha, l2_error=math.sqrt(max(err2, 0.0)), gram_cond=cond)

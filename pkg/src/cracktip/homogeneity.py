"""Homogeneity exponents of the even modes of the linearized crack-tip system.

The exponents are the positive roots of

    tan(alpha*pi) = -(2/pi) * alpha / (alpha**2 - 1/4),

one in each interval ``(k-1, k)``. Near the integer ``k`` the tangent is
harmless, but just below ``k - 1/2`` it has a pole, so the solver works with
the gap ``gamma = k - alpha`` on ``(0, 1/(4k))`` where the reduced equation

    tan(pi*gamma) = (2/pi) * (k - gamma) / ((k - gamma)**2 - 1/4)

is smooth and monotone.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels

DEFAULT_KMAX = 64
DEFAULT_TOL = 1e-12


class BracketFailure(RuntimeError):
    """Raised when the reduced equation has no sign change on its bracket."""


def sinc(x):
    """``sin(x)/x`` with a Taylor branch for ``|x| < 1e-4``."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    taylor = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    out = np.where(small, taylor, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def _gap_residual(gamma: float, k: float) -> float:
    a = k - gamma
    return math.tan(math.pi * gamma) - (2.0 / math.pi) * a / (a * a - 0.25)


def equation_residual(alpha: float) -> float:
    """Residual of ``tan(alpha*pi) + (2/pi)*alpha/(alpha^2 - 1/4)`` at ``alpha``.

    The tangent is evaluated on ``alpha - round(alpha)``, which is exact in
    floating point, so no digits are lost for large ``alpha``.
    """
    alpha = float(alpha)
    if alpha == 0.5:
        # both sides blow up together; the first root is the limit point
        return 0.0
    frac = alpha - round(alpha)
    return math.tan(math.pi * frac) + (2.0 / math.pi) * alpha / (alpha * alpha - 0.25)


def _solve_gaps(ks: np.ndarray, tol: float) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.float64)
    lo_res = (2.0 / np.pi) * ks / (ks * ks - 0.25)
    hi = 0.25 / ks
    a = ks - hi
    hi_res = np.tan(np.pi * hi) - (2.0 / np.pi) * a / (a * a - 0.25)
    if np.any(lo_res <= 0.0) or np.any(hi_res <= 0.0):
        raise BracketFailure("bracket failure")
    return _kernels.solve_gamma(ks, min(tol, 1e-15))


def compute_alpha(k: int, tol: float = DEFAULT_TOL) -> float:
    """Return the homogeneity ``alpha_k``.

    Parameters
    ----------
    k : int
        Mode index, ``k >= 1``.
    tol : float
        Bound on the equation residual (evaluated on the gap form).

    Returns
    -------
    float
        ``1/2`` for ``k = 1``; otherwise the root in ``(k - 1/(4k), k)``.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if k == 1:
        return 0.5
    g = float(_solve_gaps(np.array([k]), tol)[0])
    if abs(_gap_residual(g, k)) > tol:
        raise BracketFailure(f"residual above tolerance for k={k}")
    return k - g


def compute_gamma(k: int) -> float:
    """Gap ``k - alpha_k``; ``1/2`` for ``k = 1``."""
    k = int(k)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k == 1:
        return 0.5
    return float(_cached_table(max(k, DEFAULT_KMAX)).gamma[k - 1])


def _t_from_gap(k, gamma):
    k = np.asarray(k, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    alpha = k - gamma
    # sin(2*alpha*pi) = -sin(2*pi*gamma) for integer k
    num = (2.0 * alpha / (alpha + k)) * sinc(np.pi * gamma)
    den = 1.0 - np.sin(2.0 * np.pi * gamma) / (2.0 * np.pi * alpha)
    return num / den


def compute_t(k: int) -> float:
    """Alignment coefficient ``t_k`` minimizing ``||t cos(alpha_k phi) - cos(k phi)||``."""
    return float(_t_from_gap(k, compute_gamma(k)))


@dataclass
class HomogeneityTable:
    """Exponents, gaps and alignment coefficients for ``k = 1..k_max``.

    Arrays are 0-based: entry ``i`` holds mode ``k = i + 1``.
    """

    k_max: int
    alpha: np.ndarray
    gamma: np.ndarray
    t: np.ndarray
    residual_tol: float
    residual: np.ndarray = field(repr=False)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.k_max + 1)

    def rows(self):
        for i in range(self.k_max):
            yield {
                "k": i + 1,
                "alpha": float(self.alpha[i]),
                "gamma": float(self.gamma[i]),
                "t": float(self.t[i]),
                "residual": float(self.residual[i]),
            }

    def to_json(self) -> str:
        payload = {"k_max": self.k_max, "residual_tol": self.residual_tol, "rows": list(self.rows())}
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "alpha", "gamma", "t", "residual"])
        for row in self.rows():
            writer.writerow([row["k"]] + [f"{row[c]:.17g}" for c in ("alpha", "gamma", "t", "residual")])
        return buf.getvalue()


def build_table(k_max: int = DEFAULT_KMAX, tol: float = DEFAULT_TOL) -> HomogeneityTable:
    """Solve for all modes ``1..k_max`` at once."""
    k_max = int(k_max)
    if k_max < 1:
        raise ValueError("k_max must be positive")
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    gamma = np.empty(k_max)
    gamma[0] = 0.5
    if k_max > 1:
        gamma[1:] = _solve_gaps(ks[1:], tol)
    a = ks - gamma
    a[0] = 0.0
    res = np.tan(np.pi * gamma) - (2.0 / np.pi) * a / (a * a - 0.25)
    res[0] = 0.0
    if np.any(np.abs(res) > tol):
        bad = int(np.argmax(np.abs(res))) + 1
        raise BracketFailure(f"residual above tolerance for k={bad}")
    alpha = ks - gamma
    alpha[0] = 0.5
    t = _t_from_gap(ks, gamma)
    return HomogeneityTable(k_max=k_max, alpha=alpha, gamma=gamma, t=np.asarray(t), residual_tol=tol, residual=res)


@lru_cache(maxsize=8)
def _cached_table(k_max: int) -> HomogeneityTable:
    return build_table(k_max)


def table(k_max: int = DEFAULT_KMAX) -> HomogeneityTable:
    """Cached table with the default tolerance."""
    return _cached_table(int(k_max))


def alphas(n: int) -> np.ndarray:
    """First ``n`` exponents as an array (copy)."""
    return table(max(n, DEFAULT_KMAX)).alpha[:n].copy()

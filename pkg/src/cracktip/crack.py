"""Crack geometry: the discontinuity set as a graph ``x2 = f(x1)``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

DEFAULT_SLOPE_CAP = 2.0


class CrackGeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CrackGraph:
    """Graph crack from the tip ``(knots[0], values[0])`` outward.

    Attributes
    ----------
    knots : ndarray
        Strictly decreasing ``x1`` samples; ``knots[0]`` is the tip abscissa
        (0 for a tip at the origin) and ``knots[-1] <= -1`` reaches the
        boundary circle or beyond.
    values : ndarray
        ``f`` at the knots.
    interpolation : {"linear", "cubic"}
    slope_cap : float
        Largest admissible ``|f'|``.
    """

    knots: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"
    slope_cap: float = DEFAULT_SLOPE_CAP

    def __post_init__(self):
        k = np.array(self.knots, dtype=np.float64)
        v = np.array(self.values, dtype=np.float64)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise CrackGeometryError("knots and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(k) >= 0.0):
            raise CrackGeometryError("knots must be strictly decreasing")
        if self.interpolation not in ("linear", "cubic"):
            raise CrackGeometryError("interpolation must be 'linear' or 'cubic'")
        if not np.all(np.isfinite(v)):
            raise CrackGeometryError("values must be finite")
        k.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        slope = np.abs(np.diff(v) / np.diff(k))
        if np.max(slope) > self.slope_cap:
            raise CrackGeometryError(f"slope cap {self.slope_cap} exceeded (max |f'| = {np.max(slope):.3g})")

    # -- construction -----------------------------------------------------

    @classmethod
    def straight(cls, n_knots: int = 65, tip: float = 0.0, **kw) -> "CrackGraph":
        """The straight crack from ``(tip, 0)`` to ``(-1, 0)``."""
        return cls(np.linspace(tip, -1.0, n_knots), np.zeros(n_knots), **kw)

    @classmethod
    def from_function(cls, f, n_knots: int = 65, tip: float = 0.0, x_end: float = -1.0, **kw) -> "CrackGraph":
        x = np.linspace(tip, x_end, n_knots)
        return cls(x, np.asarray(f(x), dtype=np.float64), **kw)

    def with_values(self, values) -> "CrackGraph":
        return CrackGraph(self.knots, values, self.interpolation, self.slope_cap)

    def to_dict(self) -> dict:
        return {
            "knots": [float(x) for x in self.knots],
            "values": [float(x) for x in self.values],
            "interpolation": self.interpolation,
            "slope_cap": self.slope_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrackGraph":
        unknown = set(d) - {"knots", "values", "interpolation", "slope_cap"}
        if unknown:
            raise CrackGeometryError(f"unknown crack keys: {sorted(unknown)}")
        return cls(
            np.array(d["knots"], dtype=float),
            np.array(d["values"], dtype=float),
            d.get("interpolation", "linear"),
            float(d.get("slope_cap", DEFAULT_SLOPE_CAP)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # -- evaluation -------------------------------------------------------

    @property
    def tip(self) -> np.ndarray:
        return np.array([self.knots[0], self.values[0]])

    @cached_property
    def _spline(self):
        return CubicSpline(self.knots[::-1], self.values[::-1])

    def __call__(self, x1):
        x1 = np.asarray(x1, dtype=np.float64)
        if self.interpolation == "cubic":
            return self._spline(x1)
        return np.interp(x1, self.knots[::-1], self.values[::-1])

    def slope(self, x1):
        x1 = np.asarray(x1, dtype=np.float64)
        if self.interpolation == "cubic":
            return self._spline(x1, 1)
        xs, vs = self.knots[::-1], self.values[::-1]
        idx = np.clip(np.searchsorted(xs, x1) - 1, 0, xs.size - 2)
        return (vs[idx + 1] - vs[idx]) / (xs[idx + 1] - xs[idx])

    def tangent_at_tip(self) -> np.ndarray:
        """Unit vector pointing from the crack into the uncracked region."""
        s = float(self.slope(self.knots[0] - 1e-12 * max(1.0, abs(self.knots[0]))))
        t = np.array([1.0, s])
        return t / np.hypot(*t)

    def polyline(self, refine: int = 1) -> np.ndarray:
        """Points along the crack from the tip outward, shape ``(n, 2)``."""
        if self.interpolation == "linear" or refine <= 1:
            x = self.knots
        else:
            segs = [np.linspace(a, b, refine, endpoint=False) for a, b in zip(self.knots[:-1], self.knots[1:])]
            x = np.concatenate(segs + [self.knots[-1:]])
        return np.stack([x, self(x)], axis=1)

    def circle_crossing(self, radius: float = 1.0) -> float:
        """Abscissa where the graph leaves the disk of the given radius."""
        g = lambda x: x * x + float(self(x)) ** 2 - radius * radius
        x_end = self.knots[-1]
        if g(x_end) < 0.0:
            raise CrackGeometryError("crack does not reach the boundary circle")
        # the tip is inside; the first exit scanning outward
        xs = self.knots
        vals = xs**2 + np.asarray(self(xs)) ** 2 - radius * radius
        idx = int(np.argmax(vals >= 0.0))
        if idx == 0:
            raise CrackGeometryError("tip lies outside the disk")
        return optimize.brentq(g, xs[idx], xs[idx - 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def length(self, radius: float | None = None) -> float:
        """``H^1`` of the graph, clipped to ``B_radius`` about the origin when given."""
        x_hi = self.knots[0]
        x_lo = self.knots[-1] if radius is None else self.circle_crossing(radius)
        if radius is not None and (x_hi**2 + float(self(x_hi)) ** 2) >= radius**2:
            return 0.0
        if self.interpolation == "cubic":
            integrand = lambda x: math.sqrt(1.0 + float(self._spline(x, 1)) ** 2)
            pts = [k for k in self.knots if x_lo < k < x_hi]
            return integrate.quad(integrand, x_lo, x_hi, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
        xs = np.concatenate([[x_hi], self.knots[(self.knots < x_hi) & (self.knots > x_lo)], [x_lo]])
        ys = np.asarray(self(xs))
        return float(np.sum(np.hypot(np.diff(xs), np.diff(ys))))


def straight_crack(n_knots: int = 65) -> CrackGraph:
    return CrackGraph.straight(n_knots)

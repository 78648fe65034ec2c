"""Hot numerical kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time. Set ``CRACKTIP_NUMBA=0`` to force
the vectorized numpy implementations; numba is also skipped silently when it
cannot be imported. Both implementations are always importable through
:data:`NUMBA_IMPL` and :data:`NUMPY_IMPL` so that tests and the benchmark can
compare them directly.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False


def _flag_enabled() -> bool:
    return os.environ.get("CRACKTIP_NUMBA", "1").strip().lower() not in {"0", "false", "no", "off"}


USE_NUMBA = _HAVE_NUMBA and _flag_enabled()


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _gamma_residual_np(g, k):
    a = k - g
    return np.tan(np.pi * g) - (2.0 / np.pi) * a / (a * a - 0.25)


def _gamma_slope_np(g, k):
    a = k - g
    c = np.cos(np.pi * g)
    d = a * a - 0.25
    return np.pi / (c * c) - (2.0 / np.pi) * (a * a + 0.25) / (d * d)


def solve_gamma_np(ks, tol=1e-15, max_iter=200):
    """Safeguarded Newton for ``gamma_k = k - alpha_k`` on ``(0, 1/(4k))``."""
    k = np.asarray(ks, dtype=np.float64)
    lo = np.zeros_like(k)
    hi = 0.25 / k
    g = 2.0 / (np.pi**2 * k)
    g = np.where((g > lo) & (g < hi), g, 0.5 * (lo + hi))
    done = np.zeros(k.shape, dtype=bool)
    for _ in range(max_iter):
        h = _gamma_residual_np(g, k)
        done |= np.abs(h) <= tol
        if done.all():
            break
        neg = h < 0.0
        lo = np.where(neg & ~done, g, lo)
        hi = np.where(~neg & ~done, g, hi)
        step = g - h / _gamma_slope_np(g, k)
        bad = ~((step > lo) & (step < hi))
        new = np.where(bad, 0.5 * (lo + hi), step)
        stalled = (hi - lo) <= 4.0 * np.finfo(float).eps * np.maximum(hi, 1e-300)
        done |= stalled
        g = np.where(done, g, new)
    return g


def stiffness_np(nodes, tris):
    """Element stiffness triplets for P1 triangles."""
    p0 = nodes[tris[:, 0]]
    p1 = nodes[tris[:, 1]]
    p2 = nodes[tris[:, 2]]
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    # barycentric gradients times det
    bx = np.stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1)
    by = np.stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1)
    scale = 1.0 / (2.0 * np.abs(det))
    ke = (bx[:, :, None] * bx[:, None, :] + by[:, :, None] * by[:, None, :]) * scale[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return rows, cols, ke.ravel()


def gradients_np(nodes, tris, values):
    """Constant gradient of a P1 field on each triangle, shape ``(nt, 2)``."""
    p0 = nodes[tris[:, 0]]
    p1 = nodes[tris[:, 1]]
    p2 = nodes[tris[:, 2]]
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    u = values[tris]
    gx = (u[:, 0] * (p1[:, 1] - p2[:, 1]) + u[:, 1] * (p2[:, 1] - p0[:, 1]) + u[:, 2] * (p0[:, 1] - p1[:, 1])) / det
    gy = (u[:, 0] * (p2[:, 0] - p1[:, 0]) + u[:, 1] * (p0[:, 0] - p2[:, 0]) + u[:, 2] * (p1[:, 0] - p0[:, 0])) / det
    return np.stack([gx, gy], axis=1)


def _edge_disk_area_np(ax, ay, bx, by, r):
    """Signed area of disk(0, r) intersected with triangle (0, a, b)."""
    dx = bx - ax
    dy = by - ay
    qa = dx * dx + dy * dy
    qb = ax * dx + ay * dy
    qc = ax * ax + ay * ay - r * r
    safe = np.where(qa > 0.0, qa, 1.0)
    tm = -qb / safe
    disc = qb * qb - qa * qc
    hit = (disc > 0.0) & (qa > 0.0)
    d = np.sqrt(np.where(hit, disc, 0.0)) / safe
    t1 = np.where(hit, np.clip(tm - d, 0.0, 1.0), 1.0)
    t2 = np.where(hit, np.clip(tm + d, 0.0, 1.0), 1.0)
    p1x, p1y = ax + t1 * dx, ay + t1 * dy
    p2x, p2y = ax + t2 * dx, ay + t2 * dy

    def sector(px, py, qx, qy):
        return 0.5 * r * r * np.arctan2(px * qy - py * qx, px * qx + py * qy)

    inner = 0.5 * (p1x * p2y - p1y * p2x)
    return sector(ax, ay, p1x, p1y) + inner + sector(p2x, p2y, bx, by)


def disk_clip_areas_np(nodes, tris, cx, cy, r):
    """Area of each triangle inside the disk of radius ``r`` about ``(cx, cy)``."""
    x = nodes[:, 0] - cx
    y = nodes[:, 1] - cy
    total = np.zeros(tris.shape[0])
    for i in range(3):
        a = tris[:, i]
        b = tris[:, (i + 1) % 3]
        total += _edge_disk_area_np(x[a], y[a], x[b], y[b], r)
    return np.abs(total)


def pair_series_np(n_max):
    """Partial sum of ``2/(8k^2-1)`` for ``k = 2..n_max``, summed from the small end."""
    k = np.arange(n_max, 1, -1, dtype=np.float64)
    return float(np.sum(2.0 / (8.0 * k * k - 1.0)))


NUMPY_IMPL = SimpleNamespace(
    name="numpy",
    solve_gamma=solve_gamma_np,
    stiffness=stiffness_np,
    gradients=gradients_np,
    disk_clip_areas=disk_clip_areas_np,
    pair_series=pair_series_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def _solve_gamma_nb(ks, tol=1e-15, max_iter=200):
        out = np.empty(ks.shape[0])
        eps = 2.220446049250313e-16
        for i in range(ks.shape[0]):
            k = ks[i]
            lo = 0.0
            hi = 0.25 / k
            g = 2.0 / (math.pi * math.pi * k)
            if not (lo < g < hi):
                g = 0.5 * (lo + hi)
            for _ in range(max_iter):
                a = k - g
                h = math.tan(math.pi * g) - (2.0 / math.pi) * a / (a * a - 0.25)
                if abs(h) <= tol:
                    break
                if h < 0.0:
                    lo = g
                else:
                    hi = g
                c = math.cos(math.pi * g)
                d = a * a - 0.25
                slope = math.pi / (c * c) - (2.0 / math.pi) * (a * a + 0.25) / (d * d)
                step = g - h / slope
                if lo < step < hi:
                    g = step
                else:
                    g = 0.5 * (lo + hi)
                if hi - lo <= 4.0 * eps * hi:
                    break
            out[i] = g
        return out

    @njit
    def _stiffness_nb(nodes, tris):
        nt = tris.shape[0]
        rows = np.empty(9 * nt, dtype=np.int64)
        cols = np.empty(9 * nt, dtype=np.int64)
        vals = np.empty(9 * nt)
        bx = np.empty(3)
        by = np.empty(3)
        for e in range(nt):
            i0, i1, i2 = tris[e, 0], tris[e, 1], tris[e, 2]
            x0, y0 = nodes[i0, 0], nodes[i0, 1]
            x1, y1 = nodes[i1, 0], nodes[i1, 1]
            x2, y2 = nodes[i2, 0], nodes[i2, 1]
            det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
            bx[0], bx[1], bx[2] = y1 - y2, y2 - y0, y0 - y1
            by[0], by[1], by[2] = x2 - x1, x0 - x2, x1 - x0
            scale = 1.0 / (2.0 * abs(det))
            base = 9 * e
            for a in range(3):
                for b in range(3):
                    rows[base + 3 * a + b] = tris[e, a]
                    cols[base + 3 * a + b] = tris[e, b]
                    vals[base + 3 * a + b] = (bx[a] * bx[b] + by[a] * by[b]) * scale
        return rows, cols, vals

    @njit
    def _gradients_nb(nodes, tris, values):
        nt = tris.shape[0]
        out = np.empty((nt, 2))
        for e in range(nt):
            i0, i1, i2 = tris[e, 0], tris[e, 1], tris[e, 2]
            x0, y0 = nodes[i0, 0], nodes[i0, 1]
            x1, y1 = nodes[i1, 0], nodes[i1, 1]
            x2, y2 = nodes[i2, 0], nodes[i2, 1]
            det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
            u0, u1, u2 = values[i0], values[i1], values[i2]
            out[e, 0] = (u0 * (y1 - y2) + u1 * (y2 - y0) + u2 * (y0 - y1)) / det
            out[e, 1] = (u0 * (x2 - x1) + u1 * (x0 - x2) + u2 * (x1 - x0)) / det
        return out

    @njit
    def _edge_disk_area_nb(ax, ay, bx, by, r):
        dx = bx - ax
        dy = by - ay
        qa = dx * dx + dy * dy
        qb = ax * dx + ay * dy
        qc = ax * ax + ay * ay - r * r
        t1 = 1.0
        t2 = 1.0
        if qa > 0.0:
            disc = qb * qb - qa * qc
            if disc > 0.0:
                tm = -qb / qa
                d = math.sqrt(disc) / qa
                t1 = min(max(tm - d, 0.0), 1.0)
                t2 = min(max(tm + d, 0.0), 1.0)
        p1x, p1y = ax + t1 * dx, ay + t1 * dy
        p2x, p2y = ax + t2 * dx, ay + t2 * dy
        s1 = 0.5 * r * r * math.atan2(ax * p1y - ay * p1x, ax * p1x + ay * p1y)
        s2 = 0.5 * r * r * math.atan2(p2x * by - p2y * bx, p2x * bx + p2y * by)
        return s1 + 0.5 * (p1x * p2y - p1y * p2x) + s2

    @njit
    def _disk_clip_areas_nb(nodes, tris, cx, cy, r):
        nt = tris.shape[0]
        out = np.empty(nt)
        for e in range(nt):
            total = 0.0
            for i in range(3):
                a = tris[e, i]
                b = tris[e, (i + 1) % 3]
                total += _edge_disk_area_nb(
                    nodes[a, 0] - cx, nodes[a, 1] - cy, nodes[b, 0] - cx, nodes[b, 1] - cy, r
                )
            out[e] = abs(total)
        return out

    @njit
    def _pair_series_nb(n_max):
        total = 0.0
        for k in range(n_max, 1, -1):
            kk = float(k)
            total += 2.0 / (8.0 * kk * kk - 1.0)
        return total

    NUMBA_IMPL = SimpleNamespace(
        name="numba",
        solve_gamma=lambda ks, tol=1e-15, max_iter=200: _solve_gamma_nb(
            np.ascontiguousarray(ks, dtype=np.float64), tol, max_iter
        ),
        stiffness=lambda nodes, tris: _stiffness_nb(
            np.ascontiguousarray(nodes, dtype=np.float64), np.ascontiguousarray(tris, dtype=np.int64)
        ),
        gradients=lambda nodes, tris, values: _gradients_nb(
            np.ascontiguousarray(nodes, dtype=np.float64),
            np.ascontiguousarray(tris, dtype=np.int64),
            np.ascontiguousarray(values, dtype=np.float64),
        ),
        disk_clip_areas=lambda nodes, tris, cx, cy, r: _disk_clip_areas_nb(
            np.ascontiguousarray(nodes, dtype=np.float64),
            np.ascontiguousarray(tris, dtype=np.int64),
            float(cx),
            float(cy),
            float(r),
        ),
        pair_series=lambda n_max: float(_pair_series_nb(int(n_max))),
    )
else:  # pragma: no cover
    NUMBA_IMPL = None


ACTIVE = NUMBA_IMPL if USE_NUMBA else NUMPY_IMPL
BACKEND = ACTIVE.name

solve_gamma = ACTIVE.solve_gamma
stiffness = ACTIVE.stiffness
gradients = ACTIVE.gradients
disk_clip_areas = ACTIVE.disk_clip_areas
pair_series = ACTIVE.pair_series

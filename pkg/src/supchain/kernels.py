"""Hot loops: evaluate jump-sum paths ``X_t = sum_i K(t, omega_i) u_i``.

The linear and sinusoid kernels separate as ``f(t) a(w) + g(t) b(w)``, so a
replicate reduces to two jump sums and costs ``O(J + G)``; the Hoelder kernel
needs every (point, jump) pair.

Replicates arrive packed in CSR form: jumps of replicate ``r`` occupy
``u[offsets[r]:offsets[r+1]]``.  Each routine has a numba implementation and a
pure-numpy one.  The default backend ``auto`` picks numba for the separable
kernels and numpy for the Hoelder kernel, whose vectorized ``pow`` beats a
scalar loop.  Setting ``SUPCHAIN_DISABLE_NUMBA`` to a non-empty value other
than ``0`` (or running without numba) makes ``auto`` mean numpy throughout.
"""
from __future__ import annotations

import math
import os

import numpy as np

LINEAR, SINUSOID, HOELDER = 0, 1, 2
# numpy fallback: cap on the temporary kernel matrix size
_CHUNK_ELEMS = 1 << 22

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
_DISABLED = os.environ.get("SUPCHAIN_DISABLE_NUMBA", "") not in ("", "0")
DEFAULT_BACKEND = "auto" if HAVE_NUMBA and not _DISABLED else "numpy"


def _resolve(backend, kind):
    backend = backend or DEFAULT_BACKEND
    if backend not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend == "auto":
        return "numba" if HAVE_NUMBA and not _DISABLED and kind != HOELDER else "numpy"
    return backend


# --- numpy -----------------------------------------------------------------

def kernel_matrix(kind: int, p: float, t, omega) -> np.ndarray:
    """``K(t_a, omega_b)`` as a ``len(t) x len(omega)`` array."""
    t = np.asarray(t, dtype=float)[:, None]
    w = np.asarray(omega, dtype=float)[None, :]
    if kind == LINEAR:
        return np.broadcast_to(t, (t.shape[0], w.shape[1]))
    if kind == SINUSOID:
        return np.sin(2.0 * np.pi * (t + w))
    if kind == HOELDER:
        return np.abs(t - w) ** p
    raise ValueError(f"unknown kernel kind {kind}")


def _is_separable(kind):
    return kind == LINEAR or kind == SINUSOID


def _basis(kind, t):
    """``(f, g)`` with ``K(t, w) = f(t) a(w) + g(t) b(w)`` for separable kernels."""
    t = np.asarray(t, dtype=float)
    if kind == LINEAR:
        return t, np.zeros_like(t)
    return np.sin(2.0 * np.pi * t), np.cos(2.0 * np.pi * t)


def _coefficients_np(offsets, u, omega, kind):
    n_rep = len(offsets) - 1
    ids = np.repeat(np.arange(n_rep), np.diff(offsets))
    if kind == LINEAR:
        return np.bincount(ids, weights=u, minlength=n_rep), np.zeros(n_rep)
    a = np.bincount(ids, weights=u * np.cos(2.0 * np.pi * omega), minlength=n_rep)
    b = np.bincount(ids, weights=u * np.sin(2.0 * np.pi * omega), minlength=n_rep)
    return a, b


def _paths_at_np(offsets, u, omega, points, kind, p):
    n_rep = len(offsets) - 1
    if _is_separable(kind):
        a, b = _coefficients_np(offsets, u, omega, kind)
        f, g = _basis(kind, points)
        return a[:, None] * f[None, :] + b[:, None] * g[None, :]
    out = np.zeros((n_rep, len(points)))
    for r in range(n_rep):
        a, b = offsets[r], offsets[r + 1]
        if a == b:
            continue
        step = max(1, _CHUNK_ELEMS // max(1, len(points)))
        for c in range(a, b, step):
            e = min(b, c + step)
            out[r] += kernel_matrix(kind, p, points, omega[c:e]) @ u[c:e]
    return out


def _grid_sup_np(offsets, u, omega, grid, kind, p, t0, centered):
    n_rep = len(offsets) - 1
    out = np.zeros(n_rep)
    pts = np.append(grid, t0) if centered else grid
    vals = _paths_at_np(offsets, u, omega, pts, kind, p)
    if centered:
        vals = vals[:, :-1] - vals[:, -1:]
    if vals.shape[1]:
        out[:] = np.abs(vals).max(axis=1)
    return out


# --- numba -----------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _coefficients_nb(offsets, u, omega, kind):
        n_rep = offsets.shape[0] - 1
        a = np.zeros(n_rep)
        b = np.zeros(n_rep)
        for r in range(n_rep):
            sa = 0.0
            sb = 0.0
            for i in range(offsets[r], offsets[r + 1]):
                if kind == 0:
                    sa += u[i]
                else:
                    sa += u[i] * math.cos(2.0 * math.pi * omega[i])
                    sb += u[i] * math.sin(2.0 * math.pi * omega[i])
            a[r] = sa
            b[r] = sb
        return a, b

    @numba.njit(cache=True, nogil=True, fastmath=True)
    def _hoelder_accumulate(acc, points, u, omega, lo, hi, p):
        # jumps outer, points inner: the inner loop is contiguous
        for i in range(lo, hi):
            w = omega[i]
            ui = u[i]
            for g in range(points.shape[0]):
                d = abs(points[g] - w)
                if d > 0.0:
                    acc[g] += math.exp(p * math.log(d)) * ui

    @numba.njit(cache=True, nogil=True)
    def _paths_at_nb(offsets, u, omega, points, kind, p):
        n_rep = offsets.shape[0] - 1
        n_pts = points.shape[0]
        out = np.zeros((n_rep, n_pts))
        if kind == 2:
            for r in range(n_rep):
                _hoelder_accumulate(out[r], points, u, omega, offsets[r], offsets[r + 1], p)
            return out
        a, b = _coefficients_nb(offsets, u, omega, kind)
        for g in range(n_pts):
            t = points[g]
            if kind == 0:
                f, h = t, 0.0
            else:
                f, h = math.sin(2.0 * math.pi * t), math.cos(2.0 * math.pi * t)
            for r in range(n_rep):
                out[r, g] = a[r] * f + b[r] * h
        return out

    @numba.njit(cache=True, nogil=True)
    def _grid_sup_nb(offsets, u, omega, grid, kind, p, t0, centered):
        n_rep = offsets.shape[0] - 1
        n_pts = grid.shape[0]
        out = np.zeros(n_rep)
        if kind == 2:
            pts = np.empty(n_pts + 1)
            pts[:n_pts] = grid
            pts[n_pts] = t0
            acc = np.empty(n_pts + 1)
            for r in range(n_rep):
                acc[:] = 0.0
                _hoelder_accumulate(acc, pts, u, omega, offsets[r], offsets[r + 1], p)
                x0 = acc[n_pts] if centered else 0.0
                best = 0.0
                for g in range(n_pts):
                    d = abs(acc[g] - x0)
                    if d > best:
                        best = d
                out[r] = best
            return out
        a, b = _coefficients_nb(offsets, u, omega, kind)
        f = np.empty(n_pts)
        h = np.empty(n_pts)
        for g in range(n_pts):
            if kind == 0:
                f[g], h[g] = grid[g], 0.0
            else:
                f[g], h[g] = math.sin(2.0 * math.pi * grid[g]), math.cos(2.0 * math.pi * grid[g])
        if kind == 0:
            f0, h0 = t0, 0.0
        else:
            f0, h0 = math.sin(2.0 * math.pi * t0), math.cos(2.0 * math.pi * t0)
        for r in range(n_rep):
            x0 = a[r] * f0 + b[r] * h0 if centered else 0.0
            best = 0.0
            for g in range(n_pts):
                d = abs(a[r] * f[g] + b[r] * h[g] - x0)
                if d > best:
                    best = d
            out[r] = best
        return out


def _prep(offsets, u, omega, pts):
    return (
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(omega, dtype=np.float64),
        np.ascontiguousarray(pts, dtype=np.float64),
    )


def paths_at(offsets, u, omega, points, kind, p=1.0, backend=None) -> np.ndarray:
    """Path values at ``points`` for every replicate, shape ``(R, len(points))``."""
    offsets, u, omega, points = _prep(offsets, u, omega, points)
    if _resolve(backend, kind) == "numba":
        return _paths_at_nb(offsets, u, omega, points, int(kind), float(p))
    return _paths_at_np(offsets, u, omega, points, int(kind), float(p))


def grid_sup(offsets, u, omega, grid, kind, p=1.0, t0=0.0, centered=False, backend=None) -> np.ndarray:
    """Per-replicate ``max_g |X_{grid_g}|`` or ``max_g |X_{grid_g} - X_{t0}|``."""
    offsets, u, omega, grid = _prep(offsets, u, omega, grid)
    args = (offsets, u, omega, grid, int(kind), float(p), float(t0), bool(centered))
    if _resolve(backend, kind) == "numba":
        return _grid_sup_nb(*args)
    return _grid_sup_np(*args)

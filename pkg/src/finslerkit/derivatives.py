"""Finite-difference derivative engine.

All derivatives in the package come from here: 4th-order central stencils with
per-coordinate steps ``h_i = base_step * (1 + |c_i|)``, one Richardson halving,
and error estimate ``|extrapolated - coarse| / 15``.

Functions passed in are vectorised: they take an ``(m, p)`` array of points
and return ``(m,)`` values (or ``(m, q)`` for :func:`jacobian`). Indices are
0-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

EPS = np.finfo(float).eps

# 4th-order central weights
_D1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}
_D2 = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}


class FDEvaluationError(ArithmeticError):
    """The function returned a non-finite value somewhere in a stencil."""

    def __init__(self, message: str, location: np.ndarray):
        super().__init__(f"{message} at stencil point {np.array2string(location, precision=6)}")
        self.location = location


@dataclass(frozen=True)
class FDScheme:
    base_step: float = 1e-2
    order: int = 4
    richardson: bool = True

    def __post_init__(self):
        if not self.base_step > 0:
            raise ValueError("base_step must be positive")
        if self.order != 4:
            raise ValueError("only the 4th-order central stencil is implemented")

    def steps(self, points: np.ndarray) -> np.ndarray:
        return self.base_step * (1.0 + np.abs(points))


DEFAULT_SCHEME = FDScheme()


class FDResult(NamedTuple):
    value: np.ndarray
    error: np.ndarray   # Richardson estimate
    noise: np.ndarray   # rounding-error estimate from the stencil magnitudes


@lru_cache(maxsize=256)
def _stencil(terms: tuple[tuple[int, int], ...], p: int):
    """Displacements (S, p), weights (n_terms, S), and step index pairs.

    ``terms`` holds (i, j) for second derivatives and (i, -1) for first.
    """
    disp: list[np.ndarray] = []
    index: dict[bytes, int] = {}
    rows: list[dict[int, float]] = []

    def slot(d: np.ndarray) -> int:
        key = d.tobytes()
        if key not in index:
            index[key] = len(disp)
            disp.append(d)
        return index[key]

    for i, j in terms:
        row: dict[int, float] = {}
        if j < 0:
            for a, wa in _D1.items():
                d = np.zeros(p)
                d[i] = a
                row[slot(d)] = row.get(slot(d), 0.0) + wa
        elif i == j:
            for a, wa in _D2.items():
                d = np.zeros(p)
                d[i] = a
                row[slot(d)] = row.get(slot(d), 0.0) + wa
        else:
            for a, wa in _D1.items():
                for b, wb in _D1.items():
                    d = np.zeros(p)
                    d[i] = a
                    d[j] = b
                    row[slot(d)] = row.get(slot(d), 0.0) + wa * wb
        rows.append(row)
    D = np.array(disp)
    W = np.zeros((len(terms), len(disp)))
    for t, row in enumerate(rows):
        for s, w in row.items():
            W[t, s] = w
    return D, W


def _evaluate(f: Callable, pts: np.ndarray) -> np.ndarray:
    flat = pts.reshape(-1, pts.shape[-1])
    vals = np.asarray(f(flat), dtype=float)
    vals = vals.reshape(pts.shape[:-1] + vals.shape[1:])
    bad = ~np.isfinite(vals)
    if bad.any():
        loc = np.argwhere(bad.reshape(pts.shape[:-1] + (-1,)).any(axis=-1))[0]
        raise FDEvaluationError("non-finite function value", pts[tuple(loc)])
    return vals


def derivative_terms(f: Callable, points, terms: Sequence[tuple[int, int]],
                     scheme: FDScheme = DEFAULT_SCHEME) -> FDResult:
    """Evaluate a batch of first/second partial derivatives in one pass.

    ``terms`` entries are ``(i, j)`` for d2f/dc_i dc_j and ``(i, -1)`` for
    df/dc_i. ``points`` has shape (B, p) (or (p,)); every output has shape
    (B, len(terms)) (or (len(terms),)). ``f`` may be vector valued, in which
    case a trailing axis is appended.
    """
    pts = np.asarray(points, dtype=float)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    B, p = pts.shape
    terms = tuple((int(i), int(j)) for i, j in terms)
    D, W = _stencil(terms, p)
    h = scheme.steps(pts)                                   # (B, p)
    levels = (1.0, 0.5) if scheme.richardson else (1.0,)
    stencil = np.concatenate([pts[:, None, :] + lv * D[None] * h[:, None, :] for lv in levels], axis=1)
    vals = _evaluate(f, stencil)                            # (B, L*S[, q])
    S = D.shape[0]
    ii = np.array([t[0] for t in terms])
    jj = np.array([t[1] for t in terms])
    est = []
    noise = None
    for k, lv in enumerate(levels):
        block = vals[:, k * S:(k + 1) * S]
        hi = lv * h[:, ii]
        hj = np.where(jj[None, :] >= 0, lv * h[:, np.maximum(jj, 0)], 1.0)
        scale = hi * hj                                     # (B, T)
        if block.ndim == 3:
            num = np.einsum("ts,bsq->btq", W, block)
            mag = np.einsum("ts,bsq->btq", np.abs(W), np.abs(block))
            scale = scale[..., None]
        else:
            num = block @ W.T
            mag = np.abs(block) @ np.abs(W).T
        est.append(num / scale)
        n_k = 4.0 * EPS * mag / scale
        noise = n_k if noise is None else np.maximum(noise, n_k)
    if scheme.richardson:
        coarse, fine = est
        value = (16.0 * fine - coarse) / 15.0
        error = np.abs(value - coarse) / 15.0
        noise = noise * (16.0 + 1.0) / 15.0
    else:
        value = est[0]
        error = np.full_like(value, np.nan)
    if squeeze:
        return FDResult(value[0], error[0], noise[0])
    return FDResult(value, error, noise)


def mixed_second(f: Callable, point, i: int, j: int, scheme: FDScheme = DEFAULT_SCHEME) -> float:
    """d2f / dc_i dc_j at a single point."""
    return float(derivative_terms(f, point, [(i, j)], scheme).value[0])


def mixed_second_with_error(f: Callable, point, i: int, j: int,
                            scheme: FDScheme = DEFAULT_SCHEME) -> tuple[float, float]:
    r = derivative_terms(f, point, [(i, j)], scheme)
    return float(r.value[0]), float(r.error[0])


def gradient(f: Callable, points, scheme: FDScheme = DEFAULT_SCHEME) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    p = pts.shape[-1]
    return derivative_terms(f, pts, [(i, -1) for i in range(p)], scheme).value


def hessian(f: Callable, points, scheme: FDScheme = DEFAULT_SCHEME,
            coords: Sequence[int] | None = None) -> np.ndarray:
    """Hessian restricted to ``coords`` (all coordinates by default)."""
    pts = np.asarray(points, dtype=float)
    idx = list(range(pts.shape[-1])) if coords is None else list(coords)
    terms = [(a, b) for n, a in enumerate(idx) for b in idx[n:]]
    vals = derivative_terms(f, pts, terms, scheme).value
    m = len(idx)
    H = np.empty(vals.shape[:-1] + (m, m))
    k = 0
    for r in range(m):
        for c in range(r, m):
            H[..., r, c] = vals[..., k]
            H[..., c, r] = vals[..., k]
            k += 1
    return H


def jacobian(F: Callable, points, scheme: FDScheme = DEFAULT_SCHEME,
             coords: Sequence[int] | None = None) -> np.ndarray:
    """Jacobian dF_q/dc_i of a vector-valued F, shape (..., q, len(coords))."""
    pts = np.asarray(points, dtype=float)
    idx = list(range(pts.shape[-1])) if coords is None else list(coords)
    vals = derivative_terms(F, pts, [(i, -1) for i in idx], scheme).value  # (..., T, q)
    return np.swapaxes(vals, -1, -2)

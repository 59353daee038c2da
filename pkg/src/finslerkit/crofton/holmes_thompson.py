"""Holmes-Thompson areas through unit co-disc bundles, and the co-sphere integral.

In chart coordinates (s, t; xi) on T*N the symplectic volume of the co-disc
bundle is the integral over the patch of the Lebesgue area of the dual unit
disc B*; |omega^2| is twice that density.
"""
from __future__ import annotations

import math

import numpy as np

from ..derivatives import DEFAULT_SCHEME, FDScheme, derivative_terms, jacobian
from ..norms import NormField
from .patches import SurfacePatch, gauss_legendre, periodic_nodes

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NonConvexNormError(ValueError):
    pass


class DualSphereError(ArithmeticError):
    pass


def _unit_circle(n: int) -> np.ndarray:
    th = 2 * math.pi * np.arange(n) / n
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def _check_convex(F: np.ndarray, W: np.ndarray) -> None:
    """The sampled unit circle w/F(w) of each induced norm must turn left everywhere."""
    P = W[None] / F[..., None]
    E = np.roll(P, -1, axis=1) - P
    E2 = np.roll(E, -1, axis=1)
    cross = E[..., 0] * E2[..., 1] - E[..., 1] * E2[..., 0]
    scale = np.linalg.norm(E, axis=-1) * np.linalg.norm(E2, axis=-1)
    if np.any(cross < -1e-8 * scale):
        raise NonConvexNormError("induced unit disc is not convex")


def dual_disc_areas(metric: NormField, X, Xs, Xt, dual_samples: int = 1024, polar_nodes: int = 256,
                    refine_steps: int = 30, chunk: int = 8) -> np.ndarray:
    """Lebesgue area of {xi : F*(xi) <= 1} for the induced norms F(w) = metric(X, Xs w1 + Xt w2).

    F* is maximised over ``dual_samples`` unit directions, then refined by
    golden-section search around the best sample; the area is the polar
    integral (1/2) int (1/F*)^2 over ``polar_nodes`` equispaced angles.
    """
    X, Xs, Xt = (np.asarray(a, float).reshape(-1, 3) for a in (X, Xs, Xt))
    G = X.shape[0]
    areas = np.zeros(G)
    jac = np.linalg.norm(np.cross(Xs, Xt), axis=-1)
    live = np.nonzero(jac > 1e-14 * np.maximum(1.0, np.linalg.norm(Xs, axis=-1) * np.linalg.norm(Xt, axis=-1)))[0]
    W = _unit_circle(dual_samples)
    Xi = _unit_circle(polar_nodes)
    dth = 2 * math.pi / dual_samples
    for a in range(0, live.size, chunk):
        idx = live[a:a + chunk]
        x, ts, tt = X[idx], Xs[idx], Xt[idx]
        tang = ts[:, None, :] * W[None, :, 0:1] + tt[:, None, :] * W[None, :, 1:2]
        F = np.asarray(metric(np.broadcast_to(x[:, None, :], tang.shape), tang), float)
        if np.any(~(F > 0)):
            raise NonConvexNormError("induced norm is not positive on the tangent plane")
        _check_convex(F, W)
        vals = (Xi @ W.T)[None] / F[:, None, :]                      # (g, P, M)
        k = np.argmax(vals, axis=2)
        best = np.take_along_axis(vals, k[..., None], axis=2)[..., 0]
        th0 = 2 * math.pi * k / dual_samples
        lo, hi = th0 - dth, th0 + dth

        def h(th):
            c, s = np.cos(th), np.sin(th)
            tv = ts[:, None, :] * c[..., None] + tt[:, None, :] * s[..., None]
            Fv = metric(np.broadcast_to(x[:, None, :], tv.shape), tv)
            return (Xi[None, :, 0] * c + Xi[None, :, 1] * s) / Fv

        c1 = hi - GOLDEN * (hi - lo)
        c2 = lo + GOLDEN * (hi - lo)
        f1, f2 = h(c1), h(c2)
        for _ in range(refine_steps):
            left = f1 > f2
            hi = np.where(left, c2, hi)
            lo = np.where(left, lo, c1)
            c2n = np.where(left, c1, lo + GOLDEN * (hi - lo))
            c1n = np.where(left, hi - GOLDEN * (hi - lo), c2)
            f2n = np.where(left, f1, np.nan)
            f1n = np.where(left, np.nan, f2)
            need1 = np.isnan(f1n)
            need2 = np.isnan(f2n)
            if need1.any():
                f1n = np.where(need1, h(c1n), f1n)
            if need2.any():
                f2n = np.where(need2, h(c2n), f2n)
            c1, c2, f1, f2 = c1n, c2n, f1n, f2n
        Fstar = np.maximum(best, np.maximum(f1, f2))
        areas[idx] = 0.5 * (2 * math.pi / polar_nodes) * np.sum(Fstar ** -2.0, axis=1)
    return areas


def _patch_dual_integral(patch: SurfacePatch, metric: NormField, grid, dual_samples, polar_nodes) -> float:
    """Integral over the chart of the area of B* in parameter coordinates.

    With (Xs, Xt) = Q R (Gram-Schmidt), B* in parameter coordinates is R^T
    applied to B* in the orthonormal frame Q, so its area is |det R| times
    the well-conditioned orthonormal-frame area.
    """
    S, T, Wq = patch.grid(*grid)
    X = patch(S, T)
    Xs, Xt = patch.tangents(S, T)
    jac = np.linalg.norm(np.cross(Xs, Xt), axis=-1)
    live = jac > 1e-14 * np.maximum(1.0, np.linalg.norm(Xs, axis=-1) * np.linalg.norm(Xt, axis=-1))
    if not live.any():
        return 0.0
    X, Xs, Xt, jac, Wq = X[live], Xs[live], Xt[live], jac[live], Wq[live]
    q1 = Xs / np.linalg.norm(Xs, axis=-1, keepdims=True)
    q2 = Xt - np.einsum("gi,gi->g", Xt, q1)[:, None] * q1
    q2 /= np.linalg.norm(q2, axis=-1, keepdims=True)
    return float(np.sum(Wq * jac * dual_disc_areas(metric, X, q1, q2, dual_samples, polar_nodes)))


def holmes_thompson_area(patch: SurfacePatch, metric: NormField, grid=(24, 48), dual_samples: int = 1024,
                         polar_nodes: int = 256) -> float:
    """Symplectic volume of the unit co-disc bundle divided by pi."""
    return _patch_dual_integral(patch, metric, grid, dual_samples, polar_nodes) / math.pi


def codisc_integral(patch: SurfacePatch, metric: NormField, grid=(24, 48), dual_samples: int = 1024,
                    polar_nodes: int = 256) -> float:
    """Integral of |omega_N^2| over the unit co-disc bundle."""
    return 2.0 * _patch_dual_integral(patch, metric, grid, dual_samples, polar_nodes)


def legendre_covector(metric: NormField, x, u, scheme: FDScheme = DEFAULT_SCHEME) -> np.ndarray:
    """d_v metric(x, v) at v = u: the unit covector dual to direction u."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    grads = metric.gradients(x, u)
    if grads is not None:
        xi = grads[1]
    else:
        n = x.shape[-1]
        c = np.concatenate(np.broadcast_arrays(x, u), axis=-1)
        flat = c.reshape(-1, 2 * n)
        xi = derivative_terms(lambda q: metric(q[:, :n], q[:, n:]), flat,
                              [(n + i, -1) for i in range(n)], scheme).value.reshape(c.shape[:-1] + (n,))
    if not np.all(np.isfinite(xi)):
        raise DualSphereError("dual-sphere parametrization failed: covector not computable")
    return xi


def _omega(xd, xid, k, l):
    return np.einsum("mi,mi->m", xid[:, :, k], xd[:, :, l]) - np.einsum("mi,mi->m", xid[:, :, l], xd[:, :, k])


def cosphere_restriction_integral(patch: SurfacePatch, metric: NormField, grid_surface=(12, 24),
                                  grid_fiber=(16, 32), scheme: FDScheme = DEFAULT_SCHEME,
                                  chunk: int = 4096) -> float:
    """Integral of |omega_M ^ omega_M| over the unit co-sphere bundle of M restricted to N.

    The 4-manifold is parametrised by (s, t, alpha, beta) -> (x, xi) with
    x = chart(s, t) and xi the Legendre image of the direction at polar angle
    alpha from the surface normal and azimuth beta. The fold of the projection
    to T*N lies on alpha = pi/2, so each hemisphere gets its own Gauss rule.
    """
    n_a, n_b = grid_fiber
    if n_a % 2:
        raise ValueError("grid_fiber[0] must be even (split at the equator)")
    S, T, Wst = patch.grid(*grid_surface)
    Xs, Xt = patch.tangents(S, T)
    jac = np.linalg.norm(np.cross(Xs, Xt), axis=-1)
    keep = jac > 1e-14
    S, T, Wst = S[keep], T[keep], Wst[keep]
    if S.size == 0:
        return 0.0
    a1, w1 = gauss_legendre(n_a // 2, 0.0, math.pi / 2)
    a2, w2 = gauss_legendre(n_a // 2, math.pi / 2, math.pi)
    al, wa = np.concatenate([a1, a2]), np.concatenate([w1, w2])
    be, wb = periodic_nodes(n_b, 0.0, 2 * math.pi)

    C = np.stack(np.meshgrid(np.arange(S.size), np.arange(al.size), np.arange(be.size), indexing="ij"),
                 axis=-1).reshape(-1, 3)
    pts = np.stack([S[C[:, 0]], T[C[:, 0]], al[C[:, 1]], be[C[:, 2]]], axis=1)
    wts = Wst[C[:, 0]] * wa[C[:, 1]] * wb[C[:, 2]]

    def embed(c):
        s, t, a, b = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        x = patch(s, t)
        ts, tt = patch.tangents(s, t)
        ea = ts / np.linalg.norm(ts, axis=-1, keepdims=True)
        nrm = np.cross(ts, tt)
        nrm /= np.linalg.norm(nrm, axis=-1, keepdims=True)
        eb = np.cross(nrm, ea)
        u = (np.cos(a)[:, None] * nrm
             + (np.sin(a) * np.cos(b))[:, None] * ea
             + (np.sin(a) * np.sin(b))[:, None] * eb)
        return np.concatenate([x, legendre_covector(metric, x, u)], axis=1)

    total = 0.0
    for k in range(0, pts.shape[0], chunk):
        J = jacobian(embed, pts[k:k + chunk], scheme)       # (m, 6, 4)
        xd, xid = J[:, :3, :], J[:, 3:, :]
        dens = 2.0 * (_omega(xd, xid, 0, 1) * _omega(xd, xid, 2, 3)
                      - _omega(xd, xid, 0, 2) * _omega(xd, xid, 1, 3)
                      + _omega(xd, xid, 0, 3) * _omega(xd, xid, 1, 2))
        total += float(np.sum(wts[k:k + chunk] * np.abs(dens)))
    return total

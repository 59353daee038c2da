"""Smooth parametrised surface patches and their quadrature grids."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..derivatives import FDScheme, jacobian

_PARTIALS_SCHEME = FDScheme(base_step=1e-3)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def periodic_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    h = (b - a) / n
    return a + h * np.arange(n), np.full(n, h)


@dataclass(frozen=True)
class SurfacePatch:
    """chart(s, t) -> R^3 on [s0, s1] x [t0, t1].

    ``partials`` returns (dX/ds, dX/dt); finite differences of the chart are
    used when it is omitted. Periodic parameters get the trapezoid rule,
    the others Gauss-Legendre nodes.
    """

    chart: Callable
    s_range: tuple[float, float]
    t_range: tuple[float, float]
    s_periodic: bool = False
    t_periodic: bool = False
    partials: Callable | None = None
    label: str = "patch"

    def __call__(self, s, t) -> np.ndarray:
        return self.chart(np.asarray(s, float), np.asarray(t, float))

    def tangents(self, s, t) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        if self.partials is not None:
            return self.partials(s, t)
        st = np.stack(np.broadcast_arrays(s, t), axis=-1)
        J = jacobian(lambda c: self.chart(c[:, 0], c[:, 1]), st.reshape(-1, 2), _PARTIALS_SCHEME)
        J = J.reshape(st.shape[:-1] + (3, 2))
        return J[..., 0], J[..., 1]

    def grid(self, n_s: int, n_t: int):
        """Flattened nodes (s, t) and product weights."""
        s, ws = (periodic_nodes if self.s_periodic else gauss_legendre)(n_s, *self.s_range)
        t, wt = (periodic_nodes if self.t_periodic else gauss_legendre)(n_t, *self.t_range)
        S, T = np.meshgrid(s, t, indexing="ij")
        W = np.outer(ws, wt)
        return S.ravel(), T.ravel(), W.ravel()

    def euclidean_area(self, n_s: int = 64, n_t: int = 64) -> float:
        S, T, W = self.grid(n_s, n_t)
        Xs, Xt = self.tangents(S, T)
        return float(np.sum(W * np.linalg.norm(np.cross(Xs, Xt), axis=-1)))


def flat_disc_patch(radius: float = 1.0) -> SurfacePatch:
    """Polar chart (r, theta) of the disc of given radius in the x1x2-plane."""
    def chart(r, th):
        r, th = np.broadcast_arrays(r, th)
        return np.stack([r * np.cos(th), r * np.sin(th), np.zeros_like(r)], axis=-1)

    def partials(r, th):
        r, th = np.broadcast_arrays(r, th)
        z = np.zeros_like(r)
        return (np.stack([np.cos(th), np.sin(th), z], axis=-1),
                np.stack([-r * np.sin(th), r * np.cos(th), z], axis=-1))

    return SurfacePatch(chart, (0.0, radius), (0.0, 2 * math.pi), t_periodic=True,
                        partials=partials, label=f"flat disc r={radius:g}")


def spherical_cap_patch(theta_max: float = math.pi / 3, radius: float = 1.0) -> SurfacePatch:
    """Cap of the sphere around e3 with polar angle up to ``theta_max``."""
    def chart(th, ph):
        th, ph = np.broadcast_arrays(th, ph)
        return radius * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)

    def partials(th, ph):
        th, ph = np.broadcast_arrays(th, ph)
        return (radius * np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1),
                radius * np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), np.zeros_like(th)], axis=-1))

    return SurfacePatch(chart, (0.0, theta_max), (0.0, 2 * math.pi), t_periodic=True,
                        partials=partials, label=f"spherical cap theta<={theta_max:g}")


def degenerate_patch(point=(0.0, 0.0, 0.0)) -> SurfacePatch:
    """Constant chart: zero area, used as an edge case."""
    p = np.asarray(point, float)

    def chart(s, t):
        s, t = np.broadcast_arrays(s, t)
        return np.broadcast_to(p, s.shape + (3,)).copy()

    def partials(s, t):
        s, t = np.broadcast_arrays(s, t)
        z = np.zeros(s.shape + (3,))
        return z, z.copy()

    return SurfacePatch(chart, (0.0, 1.0), (0.0, 1.0), partials=partials, label="degenerate")

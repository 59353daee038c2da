"""Geodesic spray of E = phi^2 / 2 and fixed-step RK4 integration."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .derivatives import DEFAULT_SCHEME, FDScheme, derivative_terms, jacobian
from .norms import NormField


class SprayError(ArithmeticError):
    pass


class GeodesicIntegrationError(RuntimeError):
    def __init__(self, message: str, partial: "GeodesicPath"):
        super().__init__(message)
        self.partial = partial


def _energy_derivatives_fd(metric: NormField, X, V, scheme):
    n = X.shape[-1]

    def energy(c):
        return 0.5 * metric(c[:, :n], c[:, n:]) ** 2

    hv = [(n + i, n + j) for i in range(n) for j in range(i, n)]
    mx = [(n + i, j) for i in range(n) for j in range(n)]
    gx = [(j, -1) for j in range(n)]
    r = derivative_terms(energy, np.concatenate([X, V], axis=-1), hv + mx + gx, scheme).value
    H = np.empty(X.shape[:-1] + (n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            H[..., i, j] = H[..., j, i] = r[..., k]
            k += 1
    M = r[..., k:k + n * n].reshape(X.shape[:-1] + (n, n))
    g = r[..., k + n * n:]
    return H, M, g


def _energy_derivatives_exact(metric: NormField, X, V, scheme):
    n = X.shape[-1]

    def grad_energy(c):
        x, v = c[:, :n], c[:, n:]
        gx, gv = metric.gradients(x, v)
        phi = metric(x, v)[:, None]
        return np.concatenate([phi * gx, phi * gv], axis=1)

    C = np.concatenate([X, V], axis=-1)
    J = jacobian(grad_energy, C, scheme)              # (B, 2n, 2n), J[q, i] = dG_q/dc_i
    H = 0.5 * (J[..., n:, n:] + np.swapaxes(J[..., n:, n:], -1, -2))
    M = J[..., n:, :n]
    g = grad_energy(C.reshape(-1, 2 * n)).reshape(C.shape)[..., :n]
    return H, M, g


def spray_acceleration(metric: NormField, x, v, scheme: FDScheme = DEFAULT_SCHEME,
                       use_exact: bool = True) -> np.ndarray:
    """Acceleration solving H a = dE/dx - (d2E/dv dx) v for E = phi^2 / 2.

    Broadcasts over leading axes. When the metric registers exact first
    derivatives (and ``use_exact``), second derivatives are finite differences
    of those; otherwise everything is differenced from metric values.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    squeeze = x.ndim == 1
    X = np.atleast_2d(x)
    V = np.atleast_2d(v)
    if np.any(np.linalg.norm(V, axis=-1) == 0):
        raise ValueError("spray undefined at v = 0")
    if use_exact and metric.gradients(X[:1], V[:1]) is not None:
        H, M, g = _energy_derivatives_exact(metric, X, V, scheme)
    else:
        H, M, g = _energy_derivatives_fd(metric, X, V, scheme)
    evals = np.linalg.eigvalsh(H)
    if not np.all(np.isfinite(evals)) or np.any(evals[..., 0] <= 0):
        raise SprayError("metric not strongly convex at state")
    b = g - np.einsum("...ij,...j->...i", M, V)
    a = np.linalg.solve(H, b[..., None])[..., 0]
    return a[0] if squeeze else a


@dataclass
class GeodesicPath:
    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    speeds: np.ndarray
    label: str = ""

    @property
    def speed_drift(self) -> float:
        s0 = self.speeds[0]
        return float(np.max(np.abs(self.speeds - s0)) / s0)

    def csv_rows(self):
        for t, x, v, s in zip(self.times, self.xs, self.vs, self.speeds):
            yield [repr(float(t)), *(repr(float(c)) for c in x), *(repr(float(c)) for c in v), repr(float(s))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["t", "x1", "x2", "x3", "v1", "v2", "v3", "speed"])
        w.writerows(self.csv_rows())
        return buf.getvalue()


def integrate_geodesics(metric: NormField, x0, v0, T: float, steps: int,
                        scheme: FDScheme = DEFAULT_SCHEME, use_exact: bool = True) -> list[GeodesicPath]:
    """Classical RK4 with fixed step T/steps for a batch of initial states."""
    if steps < 8:
        raise ValueError("steps must be >= 8")
    X = np.atleast_2d(np.asarray(x0, float)).copy()
    V = np.atleast_2d(np.asarray(v0, float)).copy()
    if np.any(np.linalg.norm(V, axis=-1) == 0):
        raise ValueError("initial velocity must be nonzero")
    B = X.shape[0]
    dt = T / steps
    xs = np.empty((steps + 1, B, X.shape[1]))
    vs = np.empty_like(xs)
    xs[0], vs[0] = X, V
    times = dt * np.arange(steps + 1)

    def accel(x, v):
        return spray_acceleration(metric, x, v, scheme, use_exact)

    def paths(upto):
        sp = metric(xs[:upto], vs[:upto])
        return [GeodesicPath(times[:upto], xs[:upto, b].copy(), vs[:upto, b].copy(), sp[:, b].copy(), metric.label)
                for b in range(B)]

    for k in range(steps):
        try:
            k1x, k1v = V, accel(X, V)
            k2x, k2v = V + 0.5 * dt * k1v, accel(X + 0.5 * dt * k1x, V + 0.5 * dt * k1v)
            k3x, k3v = V + 0.5 * dt * k2v, accel(X + 0.5 * dt * k2x, V + 0.5 * dt * k2v)
            k4x, k4v = V + dt * k3v, accel(X + dt * k3x, V + dt * k3v)
        except (SprayError, ValueError, ArithmeticError) as exc:
            part = paths(k + 1)
            raise GeodesicIntegrationError(f"spray failed at step {k}: {exc}",
                                           part[0] if B == 1 else part) from exc
        X = X + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        V = V + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        xs[k + 1], vs[k + 1] = X, V
    return paths(steps + 1)


def integrate_geodesic(metric: NormField, x0, v0, T: float, steps: int,
                       scheme: FDScheme = DEFAULT_SCHEME, use_exact: bool = True) -> GeodesicPath:
    return integrate_geodesics(metric, [x0], [v0], T, steps, scheme, use_exact)[0]


def straightness_deviation(path) -> float:
    """Max distance of the path points from the chord line, divided by chord length."""
    pts = np.asarray(path.xs if isinstance(path, GeodesicPath) else path, float)
    if len(pts) < 3:
        raise ValueError("path needs at least 3 points")
    chord = pts[-1] - pts[0]
    L = float(np.linalg.norm(chord))
    if L == 0.0:
        raise ValueError("degenerate path: zero chord")
    u = chord / L
    rel = pts - pts[0]
    perp = rel - np.outer(rel @ u, u)
    return float(np.max(np.linalg.norm(perp, axis=1)) / L)

"""Radial functions, Funk transforms over great circles, Hausdorff 2-area integrands.

The numeric integrand path (radial function -> Funk transform of rho^2) never
calls the closed forms below; those exist as oracles and fast paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry_core import orthonormal_frame
from .norms import NormField

TWO_PI = 2.0 * math.pi


class NotANormError(ValueError):
    pass


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


@dataclass(frozen=True)
class RadialFunction:
    """u -> 1 / norm(x, u) on the Euclidean unit sphere."""

    norm: NormField
    x: np.ndarray
    provenance: str = ""

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        vals = np.asarray(self.norm(np.broadcast_to(self.x, u.shape), u), float)
        if np.any(~(vals > 0)):
            raise NotANormError(f"not a norm at this point: {self.provenance}")
        return 1.0 / vals

    def recover(self, w) -> np.ndarray:
        """norm(w) = |w| / rho(w / |w|)."""
        w = np.asarray(w, float)
        nw = np.sqrt(_dot(w, w))
        return nw / self(w / nw[..., None])


def radial_of_norm(norm: NormField, x) -> RadialFunction:
    x = np.asarray(x, float)
    return RadialFunction(norm, x, provenance=f"{norm.label} at x={x.tolist()}")


@dataclass(frozen=True)
class GreatCircleQuadrature:
    """Equispaced trapezoid rule on great circles (spectral for smooth integrands)."""

    node_count: int = 512
    frame_rule: Callable = field(default=orthonormal_frame, compare=False)

    def __post_init__(self):
        if self.node_count < 16 or self.node_count % 2:
            raise ValueError("node_count must be an even integer >= 16")

    @property
    def angles(self) -> np.ndarray:
        return TWO_PI * np.arange(self.node_count) / self.node_count

    def circle(self, a) -> np.ndarray:
        """Nodes v_k = cos(theta_k) b1 + sin(theta_k) b2 on the great circle normal to a."""
        b1, b2 = self.frame_rule(np.asarray(a, float))
        th = self.angles
        return np.cos(th)[:, None] * b1 + np.sin(th)[:, None] * b2


DEFAULT_QUADRATURE = GreatCircleQuadrature()


def _check_unit(a, tol=1e-10):
    a = np.asarray(a, float)
    if abs(math.sqrt(float(a @ a)) - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector, got |a| = {math.sqrt(float(a @ a))!r}")
    return a


def funk_transform(f: Callable, a, quad: GreatCircleQuadrature = DEFAULT_QUADRATURE) -> float:
    """Integral of f over the great circle perpendicular to unit a (arclength)."""
    a = _check_unit(a)
    vals = np.asarray(f(quad.circle(a)), float)
    return float(TWO_PI / quad.node_count * np.sum(vals))


def funk_closed_form(s: float, lam: float, x, a) -> float:
    """Funk transform of (s^2 + lam^2 <x,v>^2)^-2 at unit a, in closed form."""
    if not s > 0:
        raise ValueError("s must be positive")
    x = np.asarray(x, float)
    a = _check_unit(a)
    l2 = lam * lam
    y2 = float(x @ x) - float(x @ a) ** 2      # |projection of x onto a-perp|^2
    return math.pi / s ** 3 * (2 * s * s + l2 * y2) / (s * s + l2 * y2) ** 1.5


def funk_integrand(s: float, lam: float, x) -> Callable:
    x = np.asarray(x, float)
    return lambda v: (s * s + lam * lam * _dot(v, x) ** 2) ** -2


def hausdorff_area_integrand_numeric(norm: NormField, x, a,
                                     quad: GreatCircleQuadrature = DEFAULT_QUADRATURE) -> float:
    """Hausdorff 2-area integrand 2 pi |a| / F(rho^2)(a/|a|) of a norm on R^3."""
    a = np.asarray(a, float)
    na = math.sqrt(float(a @ a))
    if na == 0.0:
        raise ValueError("area integrand undefined at a = 0")
    rho = radial_of_norm(norm, x)
    F = funk_transform(lambda v: rho(v) ** 2, a / na, quad)
    return TWO_PI * na / F


def phi_lambda_area_integrand(lam: float, x, a):
    """Closed-form Hausdorff 2-area integrand of phi_lambda; broadcasts, 0 at a = 0."""
    x = np.asarray(x, float)
    a = np.asarray(a, float)
    l2 = lam * lam
    X2 = _dot(x, x)
    A2 = _dot(a, a)
    XA2 = _dot(x, a) ** 2
    num = 2.0 * (1.0 + l2 * X2) ** 1.5 * ((1.0 + 2.0 * l2 * X2) * A2 - l2 * XA2) ** 1.5
    den = (2.0 + 3.0 * l2 * X2) * A2 - l2 * XA2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(A2 > 0, num / np.where(A2 > 0, den, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out

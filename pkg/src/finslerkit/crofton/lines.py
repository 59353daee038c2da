"""Oriented lines, counter-based line sampling, and the Euclidean Crofton estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry_core import orthonormal_frame
from ._kernels import count_hits_bvh
from .mesh import SurfaceMesh

UINT64 = (1 << 64) - 1


class DegenerateHitError(ArithmeticError):
    """Line passes within tolerance of a triangle edge; resample."""


def unit_ball_volume(k: int) -> float:
    """Volume of the Euclidean unit k-ball, pi^(k/2) / Gamma(k/2 + 1)."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


@dataclass(frozen=True)
class OrientedLine:
    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, float)
        p = np.asarray(self.p, float)
        if abs(np.linalg.norm(u) - 1.0) > 1e-10:
            raise ValueError("line direction must be a unit vector")
        if abs(float(p @ u)) > 1e-10:
            raise ValueError("line offset must be orthogonal to its direction")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "p", p)

    @classmethod
    def through(cls, point, direction) -> "OrientedLine":
        u = np.asarray(direction, float)
        u = u / np.linalg.norm(u)
        q = np.asarray(point, float)
        return cls(u, q - (q @ u) * u)


def line_mesh_intersections(line: OrientedLine, mesh: SurfaceMesh) -> int:
    if len(mesh) == 0:
        return 0
    c = int(count_hits_bvh(line.p[None], line.u[None], mesh.bvh)[0])
    if c < 0:
        raise DegenerateHitError("resample: line grazes a triangle edge")
    return c


def line_generator(seed: int, stream: int, attempt: int = 0) -> np.random.Generator:
    """Philox keyed by (seed, stream); retries advance the counter's third word."""
    return np.random.Generator(np.random.Philox(key=[seed & UINT64, stream & UINT64],
                                                counter=[0, 0, attempt, 0]))


def sample_lines(rng: np.random.Generator, n: int, R: float) -> tuple[np.ndarray, np.ndarray]:
    """u uniform on S^2, p uniform on the radius-R disc in u-perp."""
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * math.pi, n)
    s = np.sqrt(1.0 - z * z)
    u = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    r = R * np.sqrt(rng.uniform(0.0, 1.0, n))
    psi = rng.uniform(0.0, 2 * math.pi, n)
    b1, b2 = orthonormal_frame(u)
    p = (r * np.cos(psi))[:, None] * b1 + (r * np.sin(psi))[:, None] * b2
    return u, p


@dataclass
class CroftonEstimate:
    estimate: float
    stderr: float
    n_samples: int
    seed: int
    R: float
    resampled: int = 0
    batches: list[tuple[int, float, float]] = field(default_factory=list)


def crofton_area_euclidean(mesh: SurfaceMesh, n_samples: int, seed: int, R: float,
                           batch_size: int = 1 << 16, max_attempts: int = 32) -> CroftonEstimate:
    """Monte Carlo Crofton estimate 2 pi R^2 * mean(#(line cap mesh)) of Euclidean area.

    Batch b draws from ``line_generator(seed, b)``, so results do not depend on
    evaluation order. Lines grazing an edge are redrawn from the same batch's
    next counter block.
    """
    if len(mesh) == 0:
        return CroftonEstimate(0.0, 0.0, n_samples, seed, R)
    if mesh.bounding_radius > R * (1 + 1e-12):
        raise ValueError(f"R={R} too small: mesh extends to radius {mesh.bounding_radius}")
    scale = 2 * math.pi * R * R
    bvh = mesh.bvh
    counts = np.empty(n_samples, np.int64)
    resampled = 0
    batches = []
    for b, a in enumerate(range(0, n_samples, batch_size)):
        m = min(batch_size, n_samples - a)
        u, p = sample_lines(line_generator(seed, b), m, R)
        c = count_hits_bvh(p, u, bvh)
        attempt = 0
        while np.any(c < 0):
            attempt += 1
            if attempt > max_attempts:
                raise DegenerateHitError("too many degenerate resamples")
            bad = np.nonzero(c < 0)[0]
            resampled += bad.size
            u2, p2 = sample_lines(line_generator(seed, b, attempt), bad.size, R)
            c[bad] = count_hits_bvh(p2, u2, bvh)
        counts[a:a + m] = c
        sd = float(np.std(c, ddof=1)) if m > 1 else 0.0
        batches.append((b, scale * float(np.mean(c)), scale * sd / math.sqrt(m)))
    est = scale * float(np.mean(counts))
    err = scale * float(np.std(counts, ddof=1)) / math.sqrt(n_samples) if n_samples > 1 else 0.0
    return CroftonEstimate(est, err, n_samples, seed, R, resampled, batches)

"""Vectors and bivectors in R^3.

Bivectors are stored in coordinates with respect to e2^e3, e3^e1, e1^e2, so
Lambda^2 R^3 is identified with R^3 and ``wedge`` is the cross product.
Everything broadcasts over leading axes.
"""
from __future__ import annotations

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def vec3(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1:] != (3,):
        raise ValueError(f"expected trailing dimension 3, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coordinates must be finite")
    return a


def wedge(v, w) -> np.ndarray:
    """Bivector v ^ w in (e2^e3, e3^e1, e1^e2) coordinates."""
    return np.cross(vec3(v), vec3(w))


def pair(v, a) -> np.ndarray | float:
    """Coefficient of v ^ a on e1^e2^e3."""
    out = np.einsum("...i,...i->...", vec3(v), vec3(a))
    return float(out) if np.ndim(out) == 0 else out


def norm(v) -> np.ndarray | float:
    """Euclidean norm, scaled so that tiny nonzero vectors do not underflow to 0."""
    v = np.asarray(v, dtype=float)
    m = np.max(np.abs(v), axis=-1)
    safe = np.where(m > 0, m, 1.0)
    w = v / safe[..., None]
    out = np.where(m > 0, safe * np.sqrt(np.einsum("...i,...i->...", w, w)), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.sqrt(np.einsum("...i,...i->...", v, v))
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / n[..., None]


def orthonormal_frame(a) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis (b1, b2) of the plane orthogonal to unit a.

    b1 = normalize(e_k x a) with k the index of the smallest |a_k| (lowest index
    on ties) and b2 = a x b1, so (b1, b2, a) is positively oriented.
    """
    a = np.asarray(a, dtype=float)
    k = np.argmin(np.abs(a), axis=-1)
    ek = np.zeros_like(a)
    np.put_along_axis(ek, np.asarray(k)[..., None], 1.0, axis=-1)
    b1 = normalize(np.cross(ek, a))
    b2 = np.cross(a, b1)
    return b1, b2


def random_unit_vectors(rng: np.random.Generator, size: int, dim: int = 3) -> np.ndarray:
    g = rng.standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    k = normalize(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)

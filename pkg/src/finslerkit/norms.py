"""Minkowski-norm certification and Finsler norm fields on R^n charts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .derivatives import DEFAULT_SCHEME, FDScheme, hessian


class RelativeEigenError(ValueError):
    pass


class AsymmetricMatrixError(ValueError):
    pass


def sym_matrix(entries) -> np.ndarray:
    """Validate a square, exactly symmetric real matrix."""
    A = np.array(entries, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise AsymmetricMatrixError("matrix is not symmetric")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def jacobi_eigenvalues(S: np.ndarray, tol: float = 1e-15, max_sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations (ascending)."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
    return np.sort(np.diag(A))


def relative_eigenvalues(A, B) -> np.ndarray:
    """All roots of det(A - lambda B) = 0, ascending."""
    A = sym_matrix(A)
    B = sym_matrix(B)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same shape")
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise RelativeEigenError("relative eigenproblem undefined: B is not positive definite") from None
    X = np.linalg.solve(L, A)            # L^-1 A
    C = np.linalg.solve(L, X.T)          # L^-1 A^T L^-T = L^-1 A L^-T
    return jacobi_eigenvalues(0.5 * (C + C.T))


def relative_eigen_range(A, B) -> tuple[float, float]:
    lam = relative_eigenvalues(A, B)
    return float(lam[0]), float(lam[-1])


@dataclass(frozen=True)
class MinkowskiCheck:
    lambda_min: float
    lambda_max: float

    @property
    def margin(self) -> float:
        return 2.0 * self.lambda_min - self.lambda_max

    @property
    def is_minkowski(self) -> bool:
        # strict, no tolerance: the boundary case lambda_max == 2 lambda_min fails
        return self.lambda_max < 2.0 * self.lambda_min

    @property
    def on_boundary(self) -> bool:
        """lambda_max == 2 lambda_min up to eigen-solver rounding: accepted by the non-strict reading only."""
        return abs(self.margin) <= 64 * np.finfo(float).eps * max(abs(self.lambda_max), 1.0)


def minkowski_check(A, B) -> MinkowskiCheck:
    return MinkowskiCheck(*relative_eigen_range(A, B))


def is_minkowski_quotient(A, B) -> bool:
    """Whether <Av,v>/sqrt(<Bv,v>) is a Minkowski norm."""
    return minkowski_check(A, B).is_minkowski


# --------------------------------------------------------------------------
# norm fields


class NormField:
    """A Finsler metric on an R^n chart, evaluated as ``norm(x, v)``.

    Evaluation broadcasts over leading axes. Subclasses may override
    :meth:`gradients` with exact first derivatives; everything else uses the
    finite-difference engine.
    """

    dim: int = 3
    label: str = "norm"

    def evaluate(self, x, v) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, v):
        return self.evaluate(x, v)

    def gradients(self, x, v) -> tuple[np.ndarray, np.ndarray] | None:
        """(d phi/dx, d phi/dv), or None when no closed form is registered."""
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label}>"


def _norm(v):
    return np.sqrt(np.einsum("...i,...i->...", v, v))


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


class FunctionNorm(NormField):
    def __init__(self, fn: Callable, dim: int = 3, label: str = "custom"):
        self.fn = fn
        self.dim = dim
        self.label = label

    def evaluate(self, x, v):
        return self.fn(np.asarray(x, float), np.asarray(v, float))


class EuclideanNorm(NormField):
    def __init__(self, dim: int = 3, scale: float = 1.0):
        self.dim = dim
        self.scale = float(scale)
        self.label = "euclidean" if scale == 1.0 else f"{scale:g}*euclidean"

    def evaluate(self, x, v):
        v = np.asarray(v, float)
        x = np.asarray(x, float)
        return self.scale * _norm(np.broadcast_to(v, np.broadcast_shapes(x.shape, v.shape)))

    def gradients(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        shape = np.broadcast_shapes(x.shape, v.shape)
        v = np.broadcast_to(v, shape)
        return np.zeros(shape), self.scale * v / _norm(v)[..., None]


class ConformalNorm(NormField):
    """factor(x) * |v|; geodesics are generally not straight."""

    def __init__(self, factor: Callable, dim: int = 3, label: str = "conformal"):
        self.factor = factor
        self.dim = dim
        self.label = label

    def evaluate(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        return self.factor(x) * _norm(v)


def linear_conformal(coefficient: float = 1.0) -> ConformalNorm:
    """The metric (1 + c*x1) |v|."""
    return ConformalNorm(lambda x: 1.0 + coefficient * x[..., 0],
                         label=f"(1+{coefficient:g}*x1)*euclidean")


class QuotientNorm(NormField):
    """F(v) = <Av,v> / sqrt(<Bv,v>), independent of the base point."""

    def __init__(self, A, B=None):
        self.A = sym_matrix(A)
        self.B = np.eye(self.A.shape[0]) if B is None else sym_matrix(B)
        self.dim = self.A.shape[0]
        self.label = "quotient"

    def evaluate(self, x, v):
        v = np.asarray(v, float)
        num = np.einsum("...i,ij,...j->...", v, self.A, v)
        den = np.sqrt(np.einsum("...i,ij,...j->...", v, self.B, v))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        return out


class GSqrtNorm(NormField):
    """g_x(v,v) / sqrt(h_x(v,v)) for two Riemannian metric fields g, h."""

    def __init__(self, g: Callable, h: Callable, dim: int = 3, label: str = "g/sqrt(h)"):
        self.g = g
        self.h = h
        self.dim = dim
        self.label = label

    def evaluate(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        G = self.g(x)
        H = self.h(x)
        num = np.einsum("...i,...ij,...j->...", v, G, v)
        den = np.sqrt(np.einsum("...i,...ij,...j->...", v, H, v))
        return num / den


def phi_lambda_eval(lam: float, x, v):
    """((1 + lam^2 |x|^2)|v|^2 + lam^2 <x,v>^2) / |v|, extended by 0 at v = 0."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    l2 = lam * lam
    nv = _norm(v)
    num = (1.0 + l2 * _dot(x, x)) * nv * nv + l2 * _dot(x, v) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(nv > 0, num / np.where(nv > 0, nv, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


class PhiLambda(NormField):
    """The projective family phi_lambda on R^n (Euclidean at lam = 0)."""

    def __init__(self, lam: float, dim: int = 3):
        self.lam = float(lam)
        self.dim = dim
        self.label = f"phi_lambda(lambda={self.lam:g})"

    def evaluate(self, x, v):
        return phi_lambda_eval(self.lam, x, v)

    def gradients(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        shape = np.broadcast_shapes(x.shape, v.shape)
        x = np.broadcast_to(x, shape)
        v = np.broadcast_to(v, shape)
        l2 = self.lam ** 2
        nv = _norm(v)[..., None]
        xv = _dot(x, v)[..., None]
        c = 1.0 + l2 * _dot(x, x)[..., None]
        gx = 2.0 * l2 * (x * nv + xv * v / nv)
        gv = (2.0 * c * v + 2.0 * l2 * xv * x) / nv - (c * nv ** 2 + l2 * xv ** 2) * v / nv ** 3
        return gx, gv

    def gram(self, x) -> np.ndarray:
        """Matrix of the quadratic form in the numerator, for the g/sqrt(h) test."""
        x = np.asarray(x, float)
        l2 = self.lam ** 2
        n = x.shape[-1]
        return (1.0 + l2 * _dot(x, x))[..., None, None] * np.eye(n) + l2 * (x[..., :, None] * x[..., None, :])


# --------------------------------------------------------------------------
# certification


def hessian_min_eigenvalue(norm: NormField, x, v, scheme: FDScheme = DEFAULT_SCHEME) -> float:
    """Smallest eigenvalue of the Hessian of v -> norm(x, v)^2 (finite differences)."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if not np.any(v):
        raise ValueError("hessian_min_eigenvalue: v must be nonzero")
    n = v.shape[-1]

    def f2(c):
        return norm(c[:, :n], c[:, n:]) ** 2

    H = hessian(f2, np.concatenate([x, v]), scheme, coords=range(n, 2 * n))
    return float(np.linalg.eigvalsh(H)[0])


@dataclass
class PointVerdict:
    x: list
    lambda_min: float | None = None
    lambda_max: float | None = None
    margin: float | None = None
    is_finsler: bool = False
    error: str | None = None


@dataclass
class GSqrtReport:
    points: list[PointVerdict] = field(default_factory=list)

    @property
    def all_finsler(self) -> bool:
        return all(p.is_finsler for p in self.points)

    @property
    def min_margin(self) -> float:
        m = [p.margin for p in self.points if p.margin is not None]
        return min(m) if m else float("nan")


def is_finsler_gsqrt(g: Callable, h: Callable, sample_points: Sequence) -> GSqrtReport:
    """Per-point check that max g/min g on the h-unit sphere is below 2."""
    report = GSqrtReport()
    for x in sample_points:
        x = np.asarray(x, float)
        entry = PointVerdict(x=x.tolist())
        try:
            check = minkowski_check(g(x), h(x))
        except ValueError as exc:
            entry.error = str(exc)
        else:
            entry.lambda_min = check.lambda_min
            entry.lambda_max = check.lambda_max
            entry.margin = check.margin
            entry.is_finsler = check.is_minkowski
        report.points.append(entry)
    return report

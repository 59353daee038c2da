"""Differential integrands and the Hamel / Berck projectivity residuals.

For k = n - 1 the coordinates a_i refer to the basis
(-1)^(i-1) e_1 ^ ... ^ (e_i omitted) ^ ... ^ e_n, which for n = 3 coincides
with the bivector coordinates of :mod:`finslerkit.geometry_core`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .derivatives import DEFAULT_SCHEME, FDScheme, derivative_terms
from .funk_area import phi_lambda_area_integrand
from .norms import NormField, phi_lambda_eval

MAIN_RESIDUAL_EXPRESSION = (
    "-24 (1 + 3 lam^2 t^2)^(3/2) lam^8 t^7 / ((2 + 7 lam^2 t^2)^3 sqrt(2 + 8 lam^2 t^2))"
)


@dataclass(frozen=True)
class DifferentialIntegrand:
    """Phi(x, a) on R^n x Lambda^k R^n, degree-1 homogeneous in a.

    ``evaluate`` broadcasts over leading axes of x and a.
    """

    n: int
    k: int
    evaluate: Callable
    label: str = "integrand"

    def __call__(self, x, a):
        return self.evaluate(np.asarray(x, float), np.asarray(a, float))

    @property
    def coordinate_count(self) -> int:
        return math.comb(self.n, self.k)

    def as_scalar_field(self) -> Callable:
        """c = (x, a) concatenated -> Phi, in the form the FD engine expects."""
        n = self.n
        return lambda c: self.evaluate(c[..., :n], c[..., n:])


def euclidean_length_integrand(n: int = 3) -> DifferentialIntegrand:
    return DifferentialIntegrand(n, 1, lambda x, v: np.linalg.norm(v, axis=-1), "euclidean length")


def euclidean_area_integrand() -> DifferentialIntegrand:
    return DifferentialIntegrand(3, 2, lambda x, a: np.linalg.norm(a, axis=-1), "euclidean area")


def norm_length_integrand(norm: NormField) -> DifferentialIntegrand:
    return DifferentialIntegrand(norm.dim, 1, norm.evaluate, f"length of {norm.label}")


def phi_lambda_length_integrand(lam: float, n: int = 3) -> DifferentialIntegrand:
    return DifferentialIntegrand(n, 1, lambda x, v: phi_lambda_eval(lam, x, v),
                                 f"phi_lambda length (lambda={lam:g})")


def phi_lambda_hausdorff_integrand(lam: float) -> DifferentialIntegrand:
    return DifferentialIntegrand(3, 2, lambda x, a: phi_lambda_area_integrand(lam, x, a),
                                 f"phi_lambda Hausdorff area (lambda={lam:g})")


def _nonzero(a, what):
    if not np.any(np.asarray(a, float)):
        raise ValueError(f"{what} must be nonzero: integrand is not smooth there")


def hamel_residual(phi: DifferentialIntegrand, x, v, scheme: FDScheme = DEFAULT_SCHEME,
                   return_error: bool = False):
    """R_ij = d2Phi/dx_i dv_j - d2Phi/dx_j dv_i (antisymmetric by construction)."""
    if phi.k != 1:
        raise ValueError("hamel_residual needs a degree-1 integrand")
    _nonzero(v, "v")
    n = phi.n
    terms = [(i, n + j) for i in range(n) for j in range(n)]
    r = derivative_terms(phi.as_scalar_field(), np.concatenate([np.asarray(x, float), np.asarray(v, float)]),
                         terms, scheme)
    M = r.value.reshape(n, n)
    E = r.error.reshape(n, n)
    R = np.zeros((n, n))
    err = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            R[i, j] = M[i, j] - M[j, i]
            R[j, i] = -R[i, j]
            err[i, j] = err[j, i] = E[i, j] + E[j, i]
    return (R, err) if return_error else R


def hamel_residual_transposed(phi: DifferentialIntegrand, x, v, scheme: FDScheme = DEFAULT_SCHEME):
    """Same residual computed with the (i, j) roles swapped, as an independent check."""
    n = phi.n
    terms = [(n + j, i) for i in range(n) for j in range(n)]
    r = derivative_terms(phi.as_scalar_field(), np.concatenate([np.asarray(x, float), np.asarray(v, float)]),
                         terms, scheme)
    M = r.value.reshape(n, n)
    return -(M.T - M)


def berck_residual(phi: DifferentialIntegrand, x, a, scheme: FDScheme = DEFAULT_SCHEME,
                   return_error: bool = False):
    """sum_i d2Phi/dx_i da_i for a degree-(n-1) integrand."""
    if phi.k != phi.n - 1:
        raise ValueError("berck_residual needs a degree n-1 integrand")
    _nonzero(a, "a")
    n = phi.n
    r = derivative_terms(phi.as_scalar_field(), np.concatenate([np.asarray(x, float), np.asarray(a, float)]),
                         [(i, n + i) for i in range(n)], scheme)
    val = float(np.sum(r.value))
    if not return_error:
        return val
    return val, float(np.sum(r.error)), float(np.sum(r.noise))


def main_theorem_residual_closed_form(lam: float, t: float) -> float:
    """Berck residual of the phi_lambda Hausdorff integrand at (t,t,t; 1,1,0)."""
    l2t2 = lam * lam * t * t
    return (-24.0 * (1.0 + 3.0 * l2t2) ** 1.5 * lam ** 8 * t ** 7
            / ((2.0 + 7.0 * l2t2) ** 3 * math.sqrt(2.0 + 8.0 * l2t2))) + 0.0   # no -0.0 at lam = 0


@dataclass
class ProjectivityReport:
    label: str
    k: int
    tol: float
    residuals: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.residuals)) if self.residuals else -1

    @property
    def projective(self) -> bool:
        return all(r <= self.tol for r in self.residuals)

    @property
    def verdict(self) -> str:
        return "projective on samples" if self.projective else "not projective"


def projectivity_report(phi: DifferentialIntegrand, samples: Sequence, scheme: FDScheme = DEFAULT_SCHEME,
                        tol: float = 1e-6) -> ProjectivityReport:
    """Residual norms of d_x delta Phi over sample points (x, a)."""
    if phi.k == 1:
        def residual(x, a):
            R, E = hamel_residual(phi, x, a, scheme, return_error=True)
            return float(np.max(np.abs(R))), float(np.max(E))
    elif phi.k == phi.n - 1:
        def residual(x, a):
            r, e, _ = berck_residual(phi, x, a, scheme, return_error=True)
            return abs(r), e
    else:
        raise ValueError("only k=1 and k=n-1 characterized")
    report = ProjectivityReport(phi.label, phi.k, tol)
    for x, a in samples:
        r, e = residual(x, a)
        report.residuals.append(r)
        report.errors.append(e)
    return report

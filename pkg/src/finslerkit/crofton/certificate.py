"""Berck-residual certificate that the phi_lambda Hausdorff integrand has no Crofton formula."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..derivatives import DEFAULT_SCHEME, FDScheme
from ..projectivity import (berck_residual, main_theorem_residual_closed_form,
                            phi_lambda_hausdorff_integrand)

NONEXISTENCE = "no Crofton formula for the Hausdorff area integrand"
CONSISTENT = "consistent with Crofton formula"


@dataclass
class CertificateRow:
    t: float
    residual_fd: float
    fd_error: float
    fd_noise: float
    residual_closed: float
    detected: bool
    matches_closed_form: bool


@dataclass
class CroftonCertificate:
    lam: float
    rows: list[CertificateRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def nonexistence(self) -> bool:
        return any(r.detected for r in self.rows)

    @property
    def verdict(self) -> str:
        return NONEXISTENCE if self.nonexistence else CONSISTENT

    @property
    def residuals_match_closed_form(self) -> bool:
        return all(r.matches_closed_form for r in self.rows)


def no_crofton_certificate(lam: float, curve_samples: Sequence[float], scheme: FDScheme = DEFAULT_SCHEME,
                           rel_tol: float = 1e-4, abs_tol: float = 1e-8) -> CroftonCertificate:
    """Evaluate the Berck residual along (t,t,t; 1,1,0) and compare with the closed form.

    A residual counts as detected when it exceeds ten times the larger of its
    Richardson error and rounding-noise estimates.
    """
    phi = phi_lambda_hausdorff_integrand(lam)
    cert = CroftonCertificate(float(lam))
    for t in curve_samples:
        r, err, noise = berck_residual(phi, [t, t, t], [1.0, 1.0, 0.0], scheme, return_error=True)
        closed = main_theorem_residual_closed_form(lam, t)
        resolution = 10.0 * max(err, noise)
        cert.rows.append(CertificateRow(
            t=float(t), residual_fd=r, fd_error=err, fd_noise=noise, residual_closed=closed,
            detected=abs(r) > resolution,
            matches_closed_form=abs(r - closed) <= max(rel_tol * abs(closed), abs_tol, resolution)))
    if not cert.nonexistence and any(row.residual_closed != 0.0 for row in cert.rows):
        cert.notes.append(
            "residuals are below finite-difference resolution; they were compared against the closed "
            "form, which is nonzero for this lambda, not against zero")
    return cert

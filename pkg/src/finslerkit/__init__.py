"""Numerical toolkit for Finsler length and area integrands on R^3.

Minkowski-norm certification, Funk transforms and Hausdorff area integrands,
Hamel/Berck projectivity residuals, geodesic integration, and Crofton /
Holmes-Thompson integral geometry.
"""
from ._accel import backend
from .norms import EuclideanNorm, PhiLambda, minkowski_check, phi_lambda_eval
from .funk_area import funk_closed_form, funk_transform, phi_lambda_area_integrand
from .projectivity import berck_residual, hamel_residual, main_theorem_residual_closed_form

__version__ = "0.1.0"

__all__ = ["backend", "EuclideanNorm", "PhiLambda", "minkowski_check", "phi_lambda_eval",
           "funk_closed_form", "funk_transform", "phi_lambda_area_integrand", "berck_residual",
           "hamel_residual", "main_theorem_residual_closed_form", "__version__"]

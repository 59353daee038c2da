"""Oriented lines, Crofton estimates, Holmes-Thompson areas and co-disc integrals."""
from .certificate import CONSISTENT, NONEXISTENCE, CroftonCertificate, no_crofton_certificate
from .holmes_thompson import (NonConvexNormError, codisc_integral, cosphere_restriction_integral,
                              dual_disc_areas, holmes_thompson_area)
from .lines import (CroftonEstimate, DegenerateHitError, OrientedLine, crofton_area_euclidean,
                    line_mesh_intersections, sample_lines, unit_ball_volume)
from .mesh import SurfaceMesh, empty_mesh, flat_disc_mesh, icosphere, read_off, write_off
from .patches import SurfacePatch, degenerate_patch, flat_disc_patch, spherical_cap_patch

__all__ = [
    "CONSISTENT", "NONEXISTENCE", "CroftonCertificate", "no_crofton_certificate",
    "NonConvexNormError", "codisc_integral", "cosphere_restriction_integral", "dual_disc_areas",
    "holmes_thompson_area", "CroftonEstimate", "DegenerateHitError", "OrientedLine",
    "crofton_area_euclidean", "line_mesh_intersections", "sample_lines", "unit_ball_volume",
    "SurfaceMesh", "empty_mesh", "flat_disc_mesh", "icosphere", "read_off", "write_off",
    "SurfacePatch", "degenerate_patch", "flat_disc_patch", "spherical_cap_patch",
]

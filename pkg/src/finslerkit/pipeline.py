"""Experiment stages and the end-to-end reproduction run.

Each stage maps a RunConfig to an ExperimentReport. Random draws come from
``numpy.random.default_rng([seed, stage_index])``, so a stage's output does
not depend on which other stages ran before it.
"""
from __future__ import annotations

import math
import time
import traceback
from pathlib import Path
from typing import Callable

import numpy as np

from .config import RunConfig
from .crofton import (codisc_integral, cosphere_restriction_integral, crofton_area_euclidean,
                      flat_disc_mesh, flat_disc_patch, icosphere, no_crofton_certificate)
from .derivatives import FDScheme
from .funk_area import (GreatCircleQuadrature, funk_closed_form, funk_transform,
                        funk_integrand, hausdorff_area_integrand_numeric, phi_lambda_area_integrand)
from .geodesics import integrate_geodesic, integrate_geodesics, straightness_deviation
from .geometry_core import random_unit_vectors, rotation_matrix
from .norms import (EuclideanNorm, NormField, PhiLambda, hessian_min_eigenvalue, is_finsler_gsqrt,
                    linear_conformal)
from .projectivity import (MAIN_RESIDUAL_EXPRESSION, berck_residual, hamel_residual,
                           main_theorem_residual_closed_form, phi_lambda_hausdorff_integrand,
                           phi_lambda_length_integrand)
from .report import ExperimentReport, write_csv

FUNK_EXPRESSION = ("pi / s^3 * (2 s^2 + lam^2 |y|^2) / (s^2 + lam^2 |y|^2)^(3/2),  "
                   "|y|^2 = |x|^2 - <x,a>^2, integrand (s^2 + lam^2 <x,v>^2)^-2")
AREA_EXPRESSION = ("2 (1 + lam^2|x|^2)^(3/2) ((1 + 2 lam^2|x|^2)|a|^2 - lam^2<x,a>^2)^(3/2) "
                   "/ ((2 + 3 lam^2|x|^2)|a|^2 - lam^2<x,a>^2)")
PHI_EXPRESSION = "phi_lambda(x, v) = ((1 + lam^2|x|^2)|v|^2 + lam^2<x,v>^2) / |v|"
MINKOWSKI_EXPRESSION = "relative eigenvalues of (g, h): lambda_max < 2 lambda_min"
CROFTON_EXPRESSION = "area = 2 pi R^2 * E[#(line cap surface)], lines uniform in the radius-R cylinder"
REDUCTION_EXPRESSION = "int_{S*M|N} |omega^2| = 2 int_{D*N} |omega_N^2|;  HT(N) = int_{D*N} |omega_N^2| / (2 pi)"
CONFORMAL_SEPARATION = 1e-2

STAGES = ("minkowski", "funk_transform", "area_integrand", "hamel", "geodesics", "berck",
          "crofton", "reduction", "no_crofton")


def stage_rng(cfg: RunConfig, stage: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, STAGES.index(stage)])


def scheme_of(cfg: RunConfig) -> FDScheme:
    return FDScheme(base_step=cfg.fd_base_step)


def ball_points(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Uniform points in the closed 3-ball of given radius."""
    d = random_unit_vectors(rng, n, 3)
    r = radius * rng.random(n) ** (1.0 / 3.0)
    return d * r[:, None]


# --------------------------------------------------------------------------
# metric labels shared with the CLI


class SpecError(ValueError):
    """Malformed textual spec; ``column`` is 1-based."""

    def __init__(self, message: str, text: str = "", column: int = 1, line: int = 1):
        super().__init__(message)
        self.text = text
        self.column = column
        self.line = line

    def __str__(self):
        return f"line {self.line}, column {self.column}: {self.args[0]}"


def parse_metric(label: str) -> NormField:
    """'euclidean', 'euclidean:2', 'phi-lambda:1', 'conformal:1'."""
    name, _, arg = label.partition(":")
    try:
        value = float(arg) if arg else None
    except ValueError:
        raise SpecError(f"expected a number after ':', got {arg!r}", label, len(name) + 2) from None
    if name == "euclidean":
        return EuclideanNorm(3, 1.0 if value is None else value)
    if name == "phi-lambda":
        return PhiLambda(1.0 if value is None else value)
    if name == "conformal":
        return linear_conformal(1.0 if value is None else value)
    raise SpecError(f"unknown metric {name!r} (euclidean, phi-lambda, conformal)", label, 1)


# --------------------------------------------------------------------------
# stages


def run_minkowski(cfg: RunConfig) -> ExperimentReport:
    rng = stage_rng(cfg, "minkowski")
    rep = ExperimentReport("minkowski", "phi_lambda Minkowski certification", cfg.snapshot())
    rep.oracle_expressions = {"criterion": MINKOWSKI_EXPRESSION, "metric": PHI_EXPRESSION,
                              "g": "(1 + lam^2|x|^2) I + lam^2 x x^T", "h": "I"}
    eye = np.eye(3)
    for lam in cfg.lams:
        pts = ball_points(rng, cfg.minkowski_points, 2.0)
        phi = PhiLambda(lam)
        g = is_finsler_gsqrt(phi.gram, lambda x: eye, pts)
        rep.add_check({"lam": lam, "points": len(pts), "radius": 2.0}, g.min_margin, g.all_finsler,
                      oracle="margin > 0", quantity="min relative-eigen margin 2*lmin - lmax")
        vs = random_unit_vectors(rng, len(pts), 3)
        hmin = min(hessian_min_eigenvalue(phi, x, v, scheme_of(cfg)) for x, v in zip(pts, vs))
        rep.add_check({"lam": lam, "points": len(pts)}, hmin, hmin > 0, oracle="> 0",
                      quantity="min Hessian eigenvalue of phi^2 in v")
    return rep


def run_funk(cfg: RunConfig) -> ExperimentReport:
    rng = stage_rng(cfg, "funk_transform")
    quad = GreatCircleQuadrature(cfg.funk_nodes)
    rep = ExperimentReport("funk_transform", "Funk transform vs closed form", cfg.snapshot())
    rep.oracle_expressions = {"funk_closed_form": FUNK_EXPRESSION}
    xs = ball_points(rng, cfg.funk_draws, 2.0)
    As = random_unit_vectors(rng, cfg.funk_draws, 3)
    ss = rng.uniform(0.5, 4.0, cfg.funk_draws)
    lams = rng.uniform(0.0, 2.0, cfg.funk_draws)
    for s, lam, x, a in zip(ss, lams, xs, As):
        num = funk_transform(funk_integrand(s, lam, x), a, quad)
        rep.add_comparison({"s": s, "lam": lam, "x": x, "a": a}, num, funk_closed_form(s, lam, x, a), cfg.funk_tol)
    return rep


def run_area_integrand(cfg: RunConfig) -> ExperimentReport:
    rng = stage_rng(cfg, "area_integrand")
    quad = GreatCircleQuadrature(cfg.funk_nodes)
    rep = ExperimentReport("area_integrand", "Hausdorff area integrand of phi_lambda", cfg.snapshot())
    rep.oracle_expressions = {"phi_lambda_area_integrand": AREA_EXPRESSION, "metric": PHI_EXPRESSION,
                              "numeric": "2 pi |a| / Funk(rho^2)(a/|a|), rho = 1/phi on the unit sphere"}
    for lam in cfg.area_grid:
        phi = PhiLambda(lam)
        for r in cfg.area_grid:
            x = r * random_unit_vectors(rng, 1, 3)[0]
            for a in rng.standard_normal((cfg.area_bivectors, 3)):
                num = hausdorff_area_integrand_numeric(phi, x, a, quad)
                rep.add_comparison({"lam": lam, "x": x, "a": a}, num, phi_lambda_area_integrand(lam, x, a),
                                   cfg.area_tol)
    return rep


def run_hamel(cfg: RunConfig) -> ExperimentReport:
    rng = stage_rng(cfg, "hamel")
    scheme = scheme_of(cfg)
    rep = ExperimentReport("hamel", "Hamel residuals of phi_lambda", cfg.snapshot())
    rep.oracle_expressions = {"hamel": "d2 phi / dx_i dv_j - d2 phi / dx_j dv_i = 0", "metric": PHI_EXPRESSION}
    rows = []
    for lam in cfg.lams:
        phi = phi_lambda_length_integrand(lam)
        xs = rng.uniform(-1.0, 1.0, (cfg.hamel_samples, 3))
        vs = random_unit_vectors(rng, cfg.hamel_samples, 3)
        worst, worst_err = 0.0, 0.0
        for x, v in zip(xs, vs):
            R, E = hamel_residual(phi, x, v, scheme, return_error=True)
            m = float(np.max(np.abs(R)))
            if m >= worst:
                worst, worst_err = m, float(np.max(E))
        rep.add_comparison({"lam": lam, "samples": cfg.hamel_samples}, worst, 0.0, cfg.hamel_tol, mode="abs",
                           fd_error=worst_err, quantity="max |R_ij|")
        rows.append([lam, worst, worst_err])
    rep.add_table("max_residual", ["lam", "max_abs_residual", "fd_error"], rows)
    return rep


def run_geodesics(cfg: RunConfig) -> ExperimentReport:
    rng = stage_rng(cfg, "geodesics")
    scheme = scheme_of(cfg)
    rep = ExperimentReport("geodesics", "straightness of phi_lambda geodesics", cfg.snapshot())
    rep.oracle_expressions = {"metric": PHI_EXPRESSION,
                              "straightness": "max distance to chord / chord length",
                              "conformal": "(1 + x1)|v| bends geodesics: deviation > 1e-2"}
    sample = None
    for lam in cfg.lams:
        x0 = rng.uniform(-1.0, 1.0, (cfg.geodesic_count, 3))
        v0 = random_unit_vectors(rng, cfg.geodesic_count, 3)
        paths = integrate_geodesics(PhiLambda(lam), x0, v0, cfg.geodesic_time, cfg.geodesic_steps, scheme)
        dev = max(straightness_deviation(p) for p in paths)
        drift = max(p.speed_drift for p in paths)
        rep.add_comparison({"lam": lam, "count": len(paths), "T": cfg.geodesic_time, "steps": cfg.geodesic_steps},
                           dev, 0.0, cfg.geodesic_tol, mode="abs", quantity="max straightness deviation")
        rep.add_comparison({"lam": lam, "count": len(paths)}, drift, 0.0, cfg.geodesic_tol, mode="abs",
                           quantity="max relative speed drift")
        sample = paths[0]
    conf = integrate_geodesic(linear_conformal(1.0), [0.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                              cfg.geodesic_time, cfg.geodesic_steps, scheme)
    dev = straightness_deviation(conf)
    rep.add_check({"metric": conf.label, "x0": [0, 0, 0], "v0": [0, 1, 0]}, dev, dev > CONFORMAL_SEPARATION,
                  tolerance=CONFORMAL_SEPARATION, oracle=f"> {CONFORMAL_SEPARATION:g}",
                  quantity="straightness deviation of the counterexample")
    if sample is not None:
        rep.add_table("path", ["t", "x1", "x2", "x3", "v1", "v2", "v3", "speed"],
                      [[float(c) for c in r] for r in sample.csv_rows()])
    return rep


def berck_table(lams, ts, scheme: FDScheme, rel_tol: float, abs_tol: float):
    """Rows lam, t, residual_fd, fd_error, residual_closed, rel_err, passed."""
    rows = []
    for lam in lams:
        phi = phi_lambda_hausdorff_integrand(lam)
        for t in ts:
            r, err, _ = berck_residual(phi, [t, t, t], [1.0, 1.0, 0.0], scheme, return_error=True)
            closed = main_theorem_residual_closed_form(lam, t)
            diff = abs(r - closed)
            rel = diff / abs(closed) if closed != 0 else None     # undefined against a zero oracle
            rows.append((float(lam), float(t), r, err, closed, rel, diff <= max(rel_tol * abs(closed), abs_tol)))
    return rows


def run_berck(cfg: RunConfig) -> ExperimentReport:
    rep = ExperimentReport("berck", "Berck residual sweep vs closed form", cfg.snapshot())
    rep.oracle_expressions = {"berck_residual_at_(t,t,t;1,1,0)": MAIN_RESIDUAL_EXPRESSION,
                              "integrand": AREA_EXPRESSION}
    rows = berck_table(cfg.lams, cfg.ts, scheme_of(cfg), cfg.berck_rel_tol, cfg.berck_abs_tol)
    for lam, t, r, err, closed, rel, _ in rows:
        rep.add_comparison({"lam": lam, "t": t}, r, closed, cfg.berck_rel_tol, floor=cfg.berck_abs_tol, fd_error=err)
    rep.add_table("sweep", ["lam", "t", "residual_fd", "residual_closed", "rel_err"],
                  [[lam, t, r, closed, rel] for lam, t, r, _, closed, rel, _ in rows])
    hit = [r for r in rows if r[0] == 1.0 and r[1] == 1.0]
    if hit:
        rep.summary["lam=1,t=1"] = {"residual_fd": hit[0][2], "residual_closed": hit[0][4]}
    return rep


def run_crofton(cfg: RunConfig) -> ExperimentReport:
    rep = ExperimentReport("crofton", "Euclidean Crofton estimate", cfg.snapshot())
    rep.oracle_expressions = {"crofton": CROFTON_EXPRESSION, "disc": "pi", "sphere": "4 pi"}
    cases = [("disc", flat_disc_mesh(1.0, cfg.crofton_disc_segments), 1.0, math.pi),
             ("sphere", icosphere(cfg.crofton_sphere_level, 1.0, rotation_matrix([1.0, 2.0, 3.0], 0.7)),
              cfg.crofton_sphere_radius, 4 * math.pi)]
    for name, mesh, R, exact in cases:
        est = crofton_area_euclidean(mesh, cfg.crofton_samples, cfg.seed, R)
        tol = cfg.crofton_sigmas * est.stderr
        rep.add_comparison({"surface": name, "seed": cfg.seed, "R": R, "samples": est.n_samples},
                           est.estimate, exact, tol, mode="abs", stderr=est.stderr, mesh_area=mesh.area,
                           resampled=est.resampled, sigmas=cfg.crofton_sigmas)
        if name == "disc":
            rep.add_check({"surface": name}, est.stderr / math.pi, est.stderr < 5e-3 * math.pi, tolerance=5e-3,
                          oracle="< 0.005", quantity="stderr / pi")
        rep.add_table("batches" if name == "disc" else f"{name}_batches", ["batch", "estimate", "stderr"],
                      [list(b) for b in est.batches])
    return rep


def reduction_metrics() -> list[NormField]:
    return [EuclideanNorm(), EuclideanNorm(scale=2.0), PhiLambda(0.5), PhiLambda(1.0)]


def run_reduction(cfg: RunConfig, metrics=None) -> ExperimentReport:
    rep = ExperimentReport("reduction", "co-sphere restriction vs co-disc integral", cfg.snapshot())
    rep.oracle_expressions = {"reduction": REDUCTION_EXPRESSION, "euclidean_cosphere": "4 pi^2",
                              "ht_euclidean": "pi", "ht_2|v|": "4 pi"}
    patch = flat_disc_patch(1.0)
    scheme = scheme_of(cfg)
    for metric in metrics or reduction_metrics():
        cod = codisc_integral(patch, metric, (cfg.dual_grid_s, cfg.dual_grid_t), cfg.dual_samples, cfg.polar_nodes)
        cos = cosphere_restriction_integral(patch, metric, (cfg.surface_nodes_s, cfg.surface_nodes_t),
                                            (cfg.fiber_nodes_alpha, cfg.fiber_nodes_beta), scheme)
        rep.add_comparison({"metric": metric.label, "surface": patch.label}, cos, 2 * cod, cfg.reduction_tol,
                           quantity="cosphere vs 2 * codisc", holmes_thompson=cod / (2 * math.pi))
        if isinstance(metric, EuclideanNorm) and metric.scale == 1.0:
            rep.add_comparison({"metric": metric.label, "surface": patch.label}, cos, 4 * math.pi ** 2, 1e-2,
                               quantity="euclidean cosphere vs 4 pi^2")
            rep.add_comparison({"metric": metric.label}, cod / (2 * math.pi), math.pi, 1e-3, mode="abs",
                               quantity="Holmes-Thompson area")
        if isinstance(metric, EuclideanNorm) and metric.scale == 2.0:
            rep.add_comparison({"metric": metric.label}, cod / (2 * math.pi), 4 * math.pi, 4e-3, mode="abs",
                               quantity="Holmes-Thompson area")
    return rep


def run_no_crofton(cfg: RunConfig) -> ExperimentReport:
    rep = ExperimentReport("no_crofton", "Crofton nonexistence certificate", cfg.snapshot())
    rep.oracle_expressions = {"berck_residual_at_(t,t,t;1,1,0)": MAIN_RESIDUAL_EXPRESSION}
    scheme = scheme_of(cfg)
    verdicts = {}
    for lam in cfg.lams:
        cert = no_crofton_certificate(lam, cfg.ts, scheme, cfg.berck_rel_tol, cfg.berck_abs_tol)
        expected_nonzero = lam != 0.0
        for row in cert.rows:
            rep.add_comparison({"lam": lam, "t": row.t}, row.residual_fd, row.residual_closed, cfg.berck_rel_tol,
                               floor=max(cfg.berck_abs_tol, 10 * max(row.fd_error, row.fd_noise)),
                               fd_error=row.fd_error, fd_noise=row.fd_noise, detected=row.detected)
        # at lam = 0 the certificate must not claim nonexistence; at lam != 0 a claim, if made, must be backed
        consistent = cert.nonexistence == expected_nonzero or (expected_nonzero and bool(cert.notes))
        rep.add_check({"lam": lam, "ts": list(cfg.ts)}, cert.verdict, consistent and cert.residuals_match_closed_form,
                      oracle="consistent with Crofton formula" if lam == 0 else "nonzero residual expected",
                      notes=cert.notes)
        verdicts[repr(float(lam))] = cert.verdict
    rep.summary["verdicts"] = verdicts
    return rep


RUNNERS: dict[str, Callable[[RunConfig], ExperimentReport]] = {
    "minkowski": run_minkowski,
    "funk_transform": run_funk,
    "area_integrand": run_area_integrand,
    "hamel": run_hamel,
    "geodesics": run_geodesics,
    "berck": run_berck,
    "crofton": run_crofton,
    "reduction": run_reduction,
    "no_crofton": run_no_crofton,
}


def run_stage(name: str, cfg: RunConfig) -> ExperimentReport:
    """Run one stage, converting an exception into a failed report."""
    t0 = time.perf_counter()
    try:
        rep = RUNNERS[name](cfg)
    except Exception as exc:  # recorded, later stages still run
        rep = ExperimentReport(name, "stage error", cfg.snapshot())
        rep.error = f"{type(exc).__name__}: {exc}"
        rep.notes.append(traceback.format_exc(limit=3))
    rep.wall_time = time.perf_counter() - t0
    return rep


def cmd_reproduce(cfg: RunConfig, out_dir=None, stages=STAGES, log: Callable[[str], None] | None = None):
    """Run the stages in order, write one report per stage plus summary CSVs. Returns (reports, passed)."""
    reports = []
    for name in stages:
        rep = run_stage(name, cfg)
        reports.append(rep)
        if log:
            status = "PASS" if rep.passed else ("ERROR " + rep.error if rep.error else "FAIL")
            log(f"[{name}] {status} ({rep.wall_time:.1f} s)")
    if out_dir is not None:
        out = Path(out_dir)
        for rep in reports:
            rep.write(out, cfg.format)
        write_summary(out, cfg, reports)
    return reports, all(r.passed for r in reports)


def write_summary(out: Path, cfg: RunConfig, reports) -> None:
    """summary.csv: the lam/t Berck residual table; stages.csv: one line per stage."""
    rows = berck_table(cfg.lams, cfg.ts, scheme_of(cfg), cfg.berck_rel_tol, cfg.berck_abs_tol)
    write_csv(out / "summary.csv", ["lam", "t", "residual_fd", "fd_error", "residual_closed", "rel_err", "verdict"],
              [[lam, t, r, e, c, rel, "pass" if ok else "fail"] for lam, t, r, e, c, rel, ok in rows])
    write_csv(out / "stages.csv", ["stage", "verdict", "error"],
              [[r.experiment_id, "pass" if r.passed else "fail", r.error or ""] for r in reports])

"""finslerkit command line.

    finslerkit check-norm diag:1,1.9
    finslerkit check-norm phi-lambda:2 --points 20 --seed 7
    finslerkit berck --lams 0.25,0.5,1,2 --ts 0.25,0.5,1,2
    finslerkit crofton --surface disc --samples 1000000 --seed 42
    finslerkit reproduce --config run.ini --out reports
    finslerkit plot-data berck --out reports

Exit status is 0 iff the report passes, 1 if it fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import pipeline
from .config import ConfigError, RunConfig
from .crofton import (codisc_integral, cosphere_restriction_integral, crofton_area_euclidean, flat_disc_mesh,
                      icosphere, read_off, spherical_cap_patch)
from .funk_area import (GreatCircleQuadrature, funk_closed_form, funk_transform,
                        funk_integrand, hausdorff_area_integrand_numeric, phi_lambda_area_integrand)
from .geodesics import integrate_geodesic, straightness_deviation
from .geometry_core import rotation_matrix
from .norms import PhiLambda, RelativeEigenError, AsymmetricMatrixError, minkowski_check
from .pipeline import SpecError, parse_metric
from .projectivity import hamel_residual, norm_length_integrand
from .report import ExperimentReport, csv_text, load_report

_NUMBER = re.compile(r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# spec parsing


def parse_numbers(text: str, offset: int = 0, line: int = 1, sep: str = ",") -> list[float]:
    """Comma separated floats; errors carry the 1-based column within the full spec."""
    out = []
    pos = 0
    if not text.strip():
        raise SpecError("expected a number", text, offset + 1, line)
    while True:
        m = _NUMBER.match(text, pos)
        if not m:
            raise SpecError(f"expected a number at {text[pos:pos + 8]!r}", text, offset + pos + 1, line)
        out.append(float(m.group(1)))
        pos = m.end()
        if pos == len(text):
            return out
        if text[pos] != sep:
            raise SpecError(f"expected {sep!r}, found {text[pos]!r}", text, offset + pos + 1, line)
        pos += 1


def parse_matrix(text: str, offset: int = 0, line: int = 1) -> np.ndarray:
    """Rows separated by ';', entries by ','."""
    rows, starts, pos = [], [], 0
    for chunk in text.split(";"):
        rows.append(parse_numbers(chunk, offset + pos, line))
        starts.append(offset + pos + 1)
        pos += len(chunk) + 1
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise SpecError(f"row {i + 1} has {len(r)} entries, expected {n} (square matrix)", text, starts[i], line)
    return np.array(rows)


def read_matrix_file(path) -> np.ndarray:
    """One row per line, entries separated by commas and/or whitespace; '#' starts a comment."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            body = raw.split("#", 1)[0].rstrip("\n")
            if not body.strip():
                continue
            row, prev = [], None
            for m in re.finditer(r"[^,\s]+", body):
                gap = body[prev.end():m.start()] if prev else ""
                if gap.count(",") > 1:
                    raise SpecError("empty entry", body, prev.end() + gap.index(",", gap.index(",") + 1) + 1, lineno)
                try:
                    row.append(float(m.group()))
                except ValueError:
                    raise SpecError(f"expected a number at {m.group()[:8]!r}", body, m.start() + 1, lineno) from None
                prev = m
            rows.append(row)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise SpecError("matrix file must hold a square matrix", str(path), 1, max(len(rows), 1))
    return np.array(rows)


def parse_norm_spec(spec: str):
    """Returns ('matrix', A) or ('phi-lambda', lam)."""
    try:
        return _parse_norm_spec(spec)
    except SpecError as exc:
        if not spec.startswith("file:"):
            exc.text = spec
        raise


def _parse_norm_spec(spec: str):
    kind, colon, body = spec.partition(":")
    if not colon:
        raise SpecError("expected KIND:VALUES (diag:, sym:, file:, phi-lambda:)", spec, len(spec) + 1)
    off = len(kind) + 1
    if kind == "diag":
        return "matrix", np.diag(parse_numbers(body, off))
    if kind == "sym":
        return "matrix", parse_matrix(body, off)
    if kind == "file":
        return "matrix", read_matrix_file(body)
    if kind == "phi-lambda":
        vals = parse_numbers(body, off)
        if len(vals) != 1:
            raise SpecError("phi-lambda takes one value", spec, off + 1)
        return "phi-lambda", vals[0]
    raise SpecError(f"unknown spec kind {kind!r}", spec, 1)


def parse_vector(text: str, n: int = 3) -> np.ndarray:
    v = parse_numbers(text)
    if len(v) != n:
        raise SpecError(f"expected {n} components, got {len(v)}", text, 1)
    return np.array(v)


# --------------------------------------------------------------------------
# commands


def cmd_check_norm(args, cfg: RunConfig) -> ExperimentReport:
    kind, value = parse_norm_spec(args.spec)
    rep = ExperimentReport("check_norm", "Minkowski check", cfg.snapshot())
    rep.oracle_expressions = {"criterion": pipeline.MINKOWSKI_EXPRESSION}
    if kind == "matrix":
        B = np.eye(len(value)) if args.b is None else parse_norm_spec(args.b)[1]
        try:
            chk = minkowski_check(value, B)
        except (RelativeEigenError, AsymmetricMatrixError) as exc:
            raise UsageError(str(exc)) from exc
        rep.add_check({"A": value, "B": B}, chk.margin, chk.is_minkowski, oracle="margin > 0",
                      lambda_min=chk.lambda_min, lambda_max=chk.lambda_max, on_boundary=chk.on_boundary)
        if chk.on_boundary:
            rep.notes.append("lambda_max == 2 lambda_min: rejected under the strict criterion; "
                             "a non-strict reading would accept it")
        return rep
    rep.oracle_expressions["metric"] = pipeline.PHI_EXPRESSION
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    phi = PhiLambda(value)
    for x in pipeline.ball_points(rng, args.points, args.radius):
        chk = minkowski_check(phi.gram(x), np.eye(3))
        rep.add_check({"lam": value, "x": x}, chk.margin, chk.is_minkowski, oracle="margin > 0",
                      lambda_min=chk.lambda_min, lambda_max=chk.lambda_max)
    return rep


def cmd_funk(args, cfg: RunConfig) -> ExperimentReport:
    x, a = parse_vector(args.x), parse_vector(args.a)
    a = a / np.linalg.norm(a)
    quad = GreatCircleQuadrature(cfg.funk_nodes)
    rep = ExperimentReport("funk", "Funk transform vs closed form", cfg.snapshot())
    rep.oracle_expressions = {"funk_closed_form": pipeline.FUNK_EXPRESSION}
    num = funk_transform(funk_integrand(args.s, args.lam, x), a, quad)
    rep.add_comparison({"s": args.s, "lam": args.lam, "x": x, "a": a, "nodes": quad.node_count},
                       num, funk_closed_form(args.s, args.lam, x, a), cfg.funk_tol)
    return rep


def cmd_area_integrand(args, cfg: RunConfig) -> ExperimentReport:
    x, a = parse_vector(args.x), parse_vector(args.a)
    quad = GreatCircleQuadrature(cfg.funk_nodes)
    rep = ExperimentReport("area_integrand_point", "Hausdorff area integrand", cfg.snapshot())
    rep.oracle_expressions = {"phi_lambda_area_integrand": pipeline.AREA_EXPRESSION}
    num = hausdorff_area_integrand_numeric(PhiLambda(args.lam), x, a, quad)
    rep.add_comparison({"lam": args.lam, "x": x, "a": a}, num, phi_lambda_area_integrand(args.lam, x, a), cfg.area_tol)
    return rep


def cmd_hamel(args, cfg: RunConfig) -> ExperimentReport:
    metric = parse_metric(args.metric)
    if args.x is None:
        if not isinstance(metric, PhiLambda):
            raise UsageError("the random sweep covers phi-lambda only; pass --x and --v for other metrics")
        if ":" in args.metric:
            cfg = cfg.updated(lams=[metric.lam])
        return pipeline.run_hamel(cfg)
    x, v = parse_vector(args.x), parse_vector(args.v)
    R = hamel_residual(norm_length_integrand(metric), x, v, pipeline.scheme_of(cfg))
    rep = ExperimentReport("hamel_point", "Hamel residual", cfg.snapshot())
    rep.oracle_expressions = {"hamel": "d2 phi / dx_i dv_j - d2 phi / dx_j dv_i = 0"}
    rep.add_comparison({"metric": metric.label, "x": x, "v": v}, float(np.max(np.abs(R))), 0.0, cfg.hamel_tol,
                       mode="abs", residual=R)
    return rep


def cmd_berck(args, cfg: RunConfig) -> ExperimentReport:
    return pipeline.run_berck(cfg)


def cmd_geodesic(args, cfg: RunConfig) -> ExperimentReport:
    metric = parse_metric(args.metric)
    x0, v0 = parse_vector(args.x0), parse_vector(args.v0)
    path = integrate_geodesic(metric, x0, v0, cfg.geodesic_time, cfg.geodesic_steps, pipeline.scheme_of(cfg))
    rep = ExperimentReport("geodesic", "single geodesic", cfg.snapshot())
    rep.oracle_expressions = {"straightness": "max distance to chord / chord length"}
    dev = straightness_deviation(path)
    if args.expect_curved:
        rep.add_check({"metric": metric.label, "x0": x0, "v0": v0}, dev, dev > pipeline.CONFORMAL_SEPARATION,
                      oracle=f"> {pipeline.CONFORMAL_SEPARATION:g}")
    else:
        rep.add_comparison({"metric": metric.label, "x0": x0, "v0": v0}, dev, 0.0, cfg.geodesic_tol, mode="abs",
                           quantity="straightness deviation")
        rep.add_comparison({"metric": metric.label}, path.speed_drift, 0.0, cfg.geodesic_tol, mode="abs",
                           quantity="speed drift")
    rep.add_table("path", ["t", "x1", "x2", "x3", "v1", "v2", "v3", "speed"],
                  [[float(c) for c in r] for r in path.csv_rows()])
    return rep


def cmd_crofton(args, cfg: RunConfig) -> ExperimentReport:
    if args.mesh:
        mesh = read_off(args.mesh)
        exact, label = mesh.area, str(args.mesh)
        R = args.R if args.R is not None else 1.01 * mesh.bounding_radius
    elif args.surface == "disc":
        mesh, exact, R, label = flat_disc_mesh(1.0, cfg.crofton_disc_segments), math.pi, args.R or 1.0, "disc"
    else:
        mesh = icosphere(cfg.crofton_sphere_level, 1.0, rotation_matrix([1.0, 2.0, 3.0], 0.7))
        exact, R, label = 4 * math.pi, args.R or cfg.crofton_sphere_radius, "sphere"
    est = crofton_area_euclidean(mesh, cfg.crofton_samples, cfg.seed, R)
    rep = ExperimentReport("crofton_run", "Euclidean Crofton estimate", cfg.snapshot())
    rep.oracle_expressions = {"crofton": pipeline.CROFTON_EXPRESSION}
    rep.add_comparison({"surface": label, "seed": cfg.seed, "R": R, "samples": est.n_samples}, est.estimate, exact,
                       cfg.crofton_sigmas * est.stderr, mode="abs", stderr=est.stderr, resampled=est.resampled,
                       mesh_area=mesh.area)
    rep.add_table("batches", ["batch", "estimate", "stderr"], [list(b) for b in est.batches])
    return rep


def cmd_reduce_check(args, cfg: RunConfig) -> ExperimentReport:
    metrics = [parse_metric(m) for m in args.metric] if args.metric else None
    if args.surface == "disc":
        return pipeline.run_reduction(cfg, metrics)
    patch = spherical_cap_patch()
    rep = ExperimentReport("reduction_cap", "co-sphere restriction vs co-disc integral", cfg.snapshot())
    rep.oracle_expressions = {"reduction": pipeline.REDUCTION_EXPRESSION}
    for metric in metrics or pipeline.reduction_metrics():
        cod = codisc_integral(patch, metric, (cfg.dual_grid_s, cfg.dual_grid_t), cfg.dual_samples, cfg.polar_nodes)
        cos = cosphere_restriction_integral(patch, metric, (cfg.surface_nodes_s, cfg.surface_nodes_t),
                                            (cfg.fiber_nodes_alpha, cfg.fiber_nodes_beta), pipeline.scheme_of(cfg))
        rep.add_comparison({"metric": metric.label, "surface": patch.label}, cos, 2 * cod, cfg.reduction_tol,
                           holmes_thompson=cod / (2 * math.pi))
    return rep


PLOT_TABLES = {
    "berck": ("berck", "sweep"),
    "crofton": ("crofton", "batches"),
    "crofton_run": ("crofton_run", "batches"),
    "geodesic": ("geodesic", "path"),
    "geodesics": ("geodesics", "path"),
    "hamel": ("hamel", "max_residual"),
}


def cmd_plot_data(args, cfg: RunConfig) -> str:
    """Tidy CSV of the plot table of a stored report."""
    if args.experiment not in PLOT_TABLES:
        raise UsageError(f"unknown experiment id {args.experiment!r}; known: {', '.join(sorted(PLOT_TABLES))}")
    stem, table = PLOT_TABLES[args.experiment]
    path = Path(args.out or cfg.out) / f"{stem}.json"
    if not path.exists():
        raise UsageError(f"no report for {args.experiment!r} at {path}; run it with --out first")
    t = load_report(path)["tables"].get(table)
    if t is None:
        raise UsageError(f"report {path} has no {table!r} table")
    return csv_text(t["columns"], t["rows"])


# --------------------------------------------------------------------------
# argument handling


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with sections")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory for reports")
    p.add_argument("--format", choices=("json", "csv"), help="report format")


def _overrides(p: argparse.ArgumentParser, keys) -> None:
    for k in keys:
        p.add_argument(f"--{k}", f"--{k.replace('_', '-')}", dest=f"cfg_{k}", metavar="VALUE", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="finslerkit", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    cfg_keys = [k for k in RunConfig.keys() if k not in ("seed", "out", "format")]

    def add(name, help_text, *config_keys):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        _overrides(p, [k for k in cfg_keys if k in config_keys] if config_keys else [])
        return p

    p = add("check-norm", "certify A/B or phi_lambda as a Minkowski norm")
    p.add_argument("spec", help="diag:1,1.9 | sym:1,0.2;0.2,1.5 | file:PATH | phi-lambda:2")
    p.add_argument("--b", help="denominator matrix spec (default identity)")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--radius", type=float, default=2.0)

    p = add("funk", "Funk transform of the test integrand vs closed form", "funk_nodes", "funk_tol")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--x", default="1,0,0")
    p.add_argument("--a", default="0,0,1")

    p = add("area-integrand", "numeric Hausdorff integrand of phi_lambda vs closed form", "funk_nodes", "area_tol")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--x", default="1,0,0")
    p.add_argument("--a", default="1,0,0")

    p = add("hamel", "Hamel residuals", "lams", "hamel_samples", "hamel_tol", "fd_base_step")
    p.add_argument("--metric", default="phi-lambda", help="phi-lambda[:LAM] | euclidean[:c] | conformal[:c]")
    p.add_argument("--x", help="single point (with --v); otherwise a random sweep")
    p.add_argument("--v", default="0,1,0")

    add("berck", "Berck residual sweep vs closed form", "lams", "ts", "berck_rel_tol", "berck_abs_tol", "fd_base_step")

    p = add("geodesic", "integrate one geodesic", "geodesic_time", "geodesic_steps", "geodesic_tol", "fd_base_step")
    p.add_argument("--metric", default="phi-lambda:1")
    p.add_argument("--x0", default="0.3,-0.2,0.5")
    p.add_argument("--v0", default="0.6,0.8,0")
    p.add_argument("--expect-curved", action="store_true", help="pass iff the path is visibly curved")

    p = add("crofton", "Monte Carlo Crofton area", "crofton_samples", "crofton_sigmas", "crofton_sphere_level",
            "crofton_disc_segments", "crofton_sphere_radius")
    p.add_argument("--surface", choices=("disc", "sphere"), default="disc")
    p.add_argument("--mesh", help="OFF file (oracle: its triangle area)")
    p.add_argument("--samples", type=int, dest="cfg_crofton_samples")
    p.add_argument("--R", type=float)

    p = add("reduce-check", "co-sphere restriction vs co-disc integral", "reduction_tol", "surface_nodes_s",
            "surface_nodes_t", "fiber_nodes_alpha", "fiber_nodes_beta", "dual_grid_s", "dual_grid_t",
            "dual_samples", "polar_nodes")
    p.add_argument("--metric", action="append", help="repeatable; default: the four reference metrics")
    p.add_argument("--surface", choices=("disc", "cap"), default="disc")

    p = add("reproduce", "run every stage", *cfg_keys)
    p.add_argument("--stages", help="comma separated subset, in pipeline order")

    p = add("plot-data", "tidy CSV from a stored report")
    p.add_argument("experiment", help="berck | crofton | crofton_run | geodesic | geodesics | hamel")
    return ap


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    over = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    for k in ("seed", "out", "format"):
        if getattr(args, k, None) is not None:
            over[k] = getattr(args, k)
    return cfg.updated(**over) if over else cfg


COMMANDS = {
    "check-norm": cmd_check_norm, "funk": cmd_funk, "area-integrand": cmd_area_integrand, "hamel": cmd_hamel,
    "berck": cmd_berck, "geodesic": cmd_geodesic, "crofton": cmd_crofton, "reduce-check": cmd_reduce_check,
}


def _print_report(rep: ExperimentReport) -> None:
    """Human summary on stderr; stdout is reserved for the machine-readable report."""
    err = sys.stderr
    for i, row in enumerate(rep.rows):
        c = row.computed
        shown = f"{c:.10g}" if isinstance(c, float) else str(c)
        print(f"  [{i}] {row.verdict.upper():4s} computed={shown}"
              + ("" if row.oracle is None else f" oracle={row.oracle:.10g}" if isinstance(row.oracle, float)
                 else f" oracle={row.oracle}"), file=err)
    print(f"{rep.experiment_id}: {'PASS' if rep.passed else 'FAIL'}", file=err)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "plot-data":
            sys.stdout.write(cmd_plot_data(args, cfg))
            return 0
        if args.command == "reproduce":
            stages = tuple(s.strip() for s in args.stages.split(",")) if args.stages else pipeline.STAGES
            bad = [s for s in stages if s not in pipeline.STAGES]
            if bad:
                raise UsageError(f"unknown stages: {', '.join(bad)}")
            stages = tuple(s for s in pipeline.STAGES if s in stages)
            _, ok = pipeline.cmd_reproduce(cfg, args.out or cfg.out, stages, log=print)
            print(f"reproduce: {'PASS' if ok else 'FAIL'} -> {args.out or cfg.out}")
            return 0 if ok else 1
        t0 = time.perf_counter()
        rep = COMMANDS[args.command](args, cfg)
        rep.wall_time = time.perf_counter() - t0
    except SpecError as exc:
        ap.error(f"malformed spec {exc.text!r}: {exc}")
    except (UsageError, ConfigError, OSError) as exc:
        ap.error(str(exc))
    if args.out:
        rep.write(args.out, cfg.format)
    _print_report(rep)
    if not args.out:
        sys.stdout.write(rep.to_json() if cfg.format == "json" else rep.rows_csv())
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())

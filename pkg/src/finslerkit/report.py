"""Experiment reports: JSON (UTF-8, sorted keys) plus RFC-4180 CSV tables.

Wall-clock timing lives in a sidecar file so that reports for the same
config and seed are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_csv(path_or_stream, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    """RFC-4180: comma separated, CRLF line endings, minimal quoting."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])

    if hasattr(path_or_stream, "write"):
        emit(path_or_stream)
    else:
        with open(path_or_stream, "w", encoding="utf-8", newline="") as fh:
            emit(fh)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows)
    return buf.getvalue()


@dataclass
class ReportRow:
    inputs: dict
    computed: Any
    oracle: Any
    tolerance: float
    passed: bool
    abs_err: float | None = None
    rel_err: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        d = {"inputs": self.inputs, "computed": self.computed, "oracle": self.oracle,
             "abs_err": self.abs_err, "rel_err": self.rel_err, "tolerance": self.tolerance,
             "verdict": self.verdict}
        d.update(self.extra)
        return d


@dataclass
class ExperimentReport:
    experiment_id: str
    operation: str
    config: dict = field(default_factory=dict)
    rows: list[ReportRow] = field(default_factory=list)
    oracle_expressions: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.rows) and all(r.passed for r in self.rows)

    def add_comparison(self, inputs: dict, computed: float, oracle: float, tolerance: float,
                       mode: str = "rel", floor: float = 0.0, **extra) -> ReportRow:
        """Compare against an oracle: ``rel`` passes when |c-o| <= max(tol*|o|, floor), ``abs`` when |c-o| <= tol."""
        abs_err = abs(computed - oracle)
        rel_err = abs_err / abs(oracle) if oracle != 0 else None
        bound = max(tolerance * abs(oracle), floor) if mode == "rel" else tolerance
        row = ReportRow(inputs, computed, oracle, tolerance, bool(abs_err <= bound), abs_err, rel_err, extra)
        self.rows.append(row)
        return row

    def add_check(self, inputs: dict, computed, passed: bool, tolerance: float = 0.0, oracle=None, **extra) -> ReportRow:
        row = ReportRow(inputs, computed, oracle, tolerance, bool(passed), extra=extra)
        self.rows.append(row)
        return row

    def add_table(self, name: str, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
        self.tables[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def payload(self) -> dict:
        return _clean({
            "experiment_id": self.experiment_id,
            "operation": self.operation,
            "config": self.config,
            "rows": [r.as_dict() for r in self.rows],
            "passed": self.passed,
            "oracle_expressions": self.oracle_expressions,
            "tables": self.tables,
            "notes": self.notes,
            "summary": self.summary,
            "error": self.error,
        })

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def rows_csv(self) -> str:
        cols = ["case", "inputs", "computed", "oracle", "abs_err", "rel_err", "tolerance", "verdict"]
        rows = [[i, json.dumps(_clean(r.inputs), sort_keys=True), r.computed, r.oracle,
                 r.abs_err, r.rel_err, r.tolerance, r.verdict] for i, r in enumerate(self.rows)]
        return csv_text(cols, [[_fmt(v) for v in row] for row in rows])

    def write(self, out_dir, fmt: str = "json") -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.experiment_id}.json"
        path.write_text(self.to_json(), encoding="utf-8")
        (out / f"{self.experiment_id}.timing.json").write_text(
            json.dumps({"experiment_id": self.experiment_id, "wall_time_s": self.wall_time}, sort_keys=True) + "\n",
            encoding="utf-8")
        if fmt == "csv":
            with open(out / f"{self.experiment_id}.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(self.rows_csv())
            for name, t in self.tables.items():
                write_csv(out / f"{self.experiment_id}.{name}.csv", t["columns"], t["rows"])
        return path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

"""Trace CSV and run-summary JSON, plus the audits computed from a trace."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .admm import TOL_MONO, CEstimate, RunResult, SolverConfig, TraceRecord, audit_monotonicity
from .exceptions import ValidationError

CSV_FIELDS = (
    "k",
    "L",
    "dx_norm",
    "consensus_residual",
    "dual_identity_residual",
    "objective",
    "max_z_violation",
    "empirical_C_ratio",
)


def _fmt(v: float) -> str:
    return "%.17g" % v


def trace_rows(trace: Sequence[TraceRecord]) -> list[list[str]]:
    return [
        [
            str(r.k),
            _fmt(r.L),
            _fmt(r.dx_norm),
            _fmt(r.consensus_residual),
            _fmt(r.dual_identity_residual),
            _fmt(r.objective),
            _fmt(r.max_constraint_violation_of_z),
            _fmt(r.empirical_C_ratio),
        ]
        for r in trace
    ]


def write_trace_csv(path, trace: Sequence[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        w.writerows(trace_rows(trace))


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_FIELDS:
            raise ValidationError(f"unexpected trace header {header!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_FIELDS):
                raise ValidationError(f"line {lineno}: expected {len(CSV_FIELDS)} fields, got {len(row)}")
            try:
                k = int(row[0])
                vals = [float(x) for x in row[1:]]
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
            out.append(TraceRecord(k, *vals))
    if not out:
        raise ValidationError("trace has no rows")
    return out


@dataclass(frozen=True)
class AuditThresholds:
    dual_identity: float = 1e-6
    z_violation: float = 1e-8
    final_dx: float | None = None
    tol_mono: float = TOL_MONO


def audit_trace(trace: Sequence[TraceRecord], thresholds: AuditThresholds = AuditThresholds()) -> dict:
    """Audit numbers for a trace. Everything here is derivable from the CSV alone."""
    mono = audit_monotonicity(trace, thresholds.tol_mono) if len(trace) >= 2 else None
    max_dual = max(r.dual_identity_residual for r in trace)
    max_viol = max(r.max_constraint_violation_of_z for r in trace)
    final_dx = trace[-1].dx_norm
    checks = {
        "dual_identity": max_dual <= thresholds.dual_identity,
        "monotonicity": mono is None or mono.ok,
        "z_feasibility": max_viol <= thresholds.z_violation,
    }
    if thresholds.final_dx is not None:
        checks["final_dx"] = final_dx <= thresholds.final_dx
    return {
        "iterations": len(trace),
        "max_dual_identity_residual": max_dual,
        "monotonicity_violations": [] if mono is None else mono.violations,
        "max_L_increase": 0.0 if mono is None else mono.max_increase,
        "max_z_violation": max_viol,
        "final_dx_norm": final_dx,
        "checks": checks,
        "passed": all(checks.values()),
    }


def _encode_complex(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def summary_dict(
    result: RunResult,
    config: SolverConfig,
    *,
    spectrum: tuple[float, float] | None = None,
    c_estimates: dict[str, CEstimate] | None = None,
    audit: dict | None = None,
    extra: dict | None = None,
) -> dict:
    doc = {
        "termination_reason": result.reason,
        "iterations": len(result.trace),
        "config": asdict(config),
        "L0": result.L0,
        "final": {
            "k": result.state.k,
            "x": _encode_complex(result.state.x),
            "L": result.trace[-1].L if result.trace else result.L0,
            "objective": result.trace[-1].objective if result.trace else result.initial.objective,
        },
    }
    if spectrum is not None:
        doc["A0_spectrum"] = {"lambda_min": spectrum[0], "lambda_max": spectrum[1]}
    if c_estimates:
        doc["C_estimates"] = {
            name: {
                "mu_hat": est.mu_hat,
                "sigma2_hat": est.sigma2_hat,
                "c_statistical": est.c_statistical,
                "c_empirical_max": est.c_empirical_max,
                "degenerate": est.degenerate,
            }
            for name, est in c_estimates.items()
        }
    if audit is not None:
        doc["audit"] = audit
    if extra:
        doc.update(extra)
    return _jsonable(doc)


def write_summary(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

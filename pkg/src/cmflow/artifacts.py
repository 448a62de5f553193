"""Run artifacts: trace CSV, JSON summary, field and snapshot files.

Everything here is written for regression diffing: floats at 17
significant digits (lossless round trip), fixed column order, no
timestamps or hostnames. Identical run, identical bytes.
"""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .flow import CSV_COLUMNS, FlowTrace, RawTrace
from .grids import SphereGrid, SupportField
from .residual import ResidualReport


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def write_trace_csv(path, trace: FlowTrace) -> None:
    """Monitor records, one row per record, header pinned to CSV_COLUMNS."""
    lines = [",".join(CSV_COLUMNS)]
    for r in trace.records:
        lines.append(",".join(_g17(v) for v in (
            r.t, r.eta, r.j, r.volume, r.min_radius,
            r.u_min, r.u_max, r.grad_q, r.residual, r.dt)))
    Path(path).write_text("\n".join(lines) + "\n")


def write_raw_csv(path, raw: RawTrace) -> None:
    """Raw-flow sample summary: t with the field's min/max per sample."""
    lines = ["t,u_min,u_max"]
    for t, vals in zip(raw.times, raw.values):
        lines.append(",".join((_g17(t), _g17(np.min(vals)), _g17(np.max(vals)))))
    Path(path).write_text("\n".join(lines) + "\n")


def write_field_txt(path, field: SupportField) -> None:
    """One node value per line, latitude-major order (phi fastest)."""
    flat = np.asarray(field.values).reshape(-1)
    Path(path).write_text("\n".join(_g17(v) for v in flat) + "\n")


def read_field_txt(path, grid: SphereGrid) -> SupportField:
    flat = np.loadtxt(path, dtype=float).reshape(-1)
    if flat.size != int(np.prod(grid.shape)):
        raise ValueError(
            f"field file has {flat.size} values, grid wants {np.prod(grid.shape)}")
    return SupportField(grid, flat.reshape(grid.shape))


def _clean(value):
    """JSON-friendly copy; non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def summary_payload(echo: dict, trace: FlowTrace,
                    report: ResidualReport | None = None,
                    forced_inadmissible: bool = False) -> dict:
    """Everything a rerun needs to double-check a finished run."""
    payload = {
        "config": echo,
        "converged": trace.converged,
        "reason": trace.reason,
        "t_final": trace.t_final,
        "steps_accepted": trace.steps_accepted,
        "steps_rejected": trace.steps_rejected,
        "eta0": trace.eta0,
        "eta_final": trace.eta_final,
        "j_final": trace.j_final,
        "residual_final": trace.residual_final,
        "invariants": {
            "max_eta": trace.max_eta,
            "min_eta": trace.min_eta,
            "max_volume_drift": trace.max_volume_drift,
            "max_volume_defect": trace.max_volume_defect,
            "min_min_radius": trace.min_min_radius,
            "max_j_step_increase": trace.max_j_step_increase,
            "max_evenness_defect": trace.max_evenness_defect,
        },
        "warnings": list(trace.warnings),
    }
    if report is not None:
        payload["residual_report"] = dataclasses.asdict(report)
    if forced_inadmissible:
        payload["note"] = "outside theorem hypotheses: psi forced inadmissible"
    return payload


def write_summary_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def write_snapshots(out_dir, trace: FlowTrace, grid: SphereGrid) -> list:
    """Each snapshot as its own field file plus an index CSV."""
    out_dir = Path(out_dir)
    index = ["idx,t,file"]
    names = []
    for i, (t, vals) in enumerate(trace.snapshots):
        name = f"snapshot_{i:04d}.txt"
        write_field_txt(out_dir / name, SupportField(grid, vals))
        index.append(f"{i},{_g17(t)},{name}")
        names.append(name)
    (out_dir / "snapshots.csv").write_text("\n".join(index) + "\n")
    return names


def write_sweep_csv(path, rows: list) -> None:
    """Aggregate over sweep runs; one row per (label, result) pair."""
    lines = ["label,alpha,epsilon,resolution,converged,steps,residual,c_lp"]
    for row in rows:
        lines.append(",".join(str(v) if not isinstance(v, float) else _g17(v)
                              for v in row))
    Path(path).write_text("\n".join(lines) + "\n")

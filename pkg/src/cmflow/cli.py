"""Command-line front end.

Subcommands: check-psi, evolve, evolve-raw, verify, sweep, export-mesh.

Exit codes form a stable contract:
    0  success (converged / admissible / all checks pass)
    2  anisotropy rejected (inadmissible or uneven without the override)
    3  configuration problem (parse error, schema violation, sweep cap)
    4  flow did not converge (artifacts still written)
    5  invariant violation during evolution (monotonicity, convexity,
       eta bound, volume restoration)
    1  verify battery failure
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .anisotropy import (ADMISSIBLE_MARGIN, check_admissible, check_even,
                         eval_psi, load_sampled_psi)
from .artifacts import (read_field_txt, summary_payload, write_field_txt,
                        write_raw_csv, write_snapshots, write_summary_json,
                        write_sweep_csv, write_trace_csv)
from .calculus import embed, write_mesh
from .checks import run_verify
from .config import RunConfig, config_echo, expand_sweep, load_config
from .errors import (AdmissibilityError, CmflowError, ConfigError,
                     ConvexityError, FlowAbort)
from .flow import EVEN_PSI_TOL, build_initial, evolve, evolve_unnormalized
from .grids import SupportField, build_grid
from .residual import stationarity_residual

_INVARIANT_REASONS = {"eta_bound", "j_increase", "convexity_lost", "volume"}


def _thread_cap() -> int:
    raw = os.environ.get("CMFLOW_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"CMFLOW_THREADS must be an integer, got {raw!r}")
    return min(4, os.cpu_count() or 1)


def _load(args) -> RunConfig:
    rc = load_config(args.config)
    if args.out is not None:
        rc = dataclasses.replace(rc, out_dir=Path(args.out))
    if args.seed is not None:
        rc = dataclasses.replace(rc, seed=args.seed)
    flow = rc.flow
    if args.force:
        flow = dataclasses.replace(flow, force_inadmissible=True)
    if args.allow_uneven:
        flow = dataclasses.replace(flow, allow_uneven=True)
    return dataclasses.replace(rc, flow=flow)


def cmd_check_psi(args) -> int:
    rc = _load(args)
    fc = rc.flow
    grid = build_grid(fc.grid_variant, fc.n_dim, fc.resolution)
    if rc.psi_field_path is not None:
        psi = load_sampled_psi(rc.psi_field_path, grid)
    else:
        psi = eval_psi(fc.psi, grid)
    defect = check_even(psi)
    even = defect <= EVEN_PSI_TOL * float(psi.values.max())
    print(f"evenness defect: {defect:.6e} ({'even' if even else 'NOT even'})")
    try:
        margin = check_admissible(psi, fc.k, fc.alpha)
    except AdmissibilityError as exc:
        print(f"min eigenvalue: undefined ({exc})")
        print("verdict: inadmissible")
        return 2
    admissible = margin > ADMISSIBLE_MARGIN
    print(f"min eigenvalue: {margin:.6e} (threshold {ADMISSIBLE_MARGIN:.0e})")
    print(f"verdict: {'admissible' if admissible else 'inadmissible'}")
    return 0 if (admissible and even) else 2


def _evolve_artifacts(rc: RunConfig, fc, u, trace, forced: bool) -> None:
    out = rc.out_dir
    out.mkdir(parents=True, exist_ok=True)
    report = None
    if u is not None:
        try:
            report = stationarity_residual(u, eval_psi(fc.psi, u.grid),
                                           fc.k, fc.alpha)
        except CmflowError:
            report = None
    if rc.write_trace:
        write_trace_csv(out / "trace.csv", trace)
    if rc.write_summary:
        write_summary_json(out / "summary.json",
                           summary_payload(config_echo(rc), trace, report,
                                           forced_inadmissible=forced))
    if u is not None:
        write_field_txt(out / "final_u.txt", u)
        if rc.write_mesh and u.grid.variant == "full_s2":
            write_mesh(embed(u), out / "body.obj")
        if rc.write_snapshots and trace.snapshots:
            write_snapshots(out, trace, u.grid)


def cmd_evolve(args) -> int:
    rc = _load(args)
    fc = rc.resolved_flow()
    forced = fc.force_inadmissible
    try:
        u, trace = evolve(fc)
    except FlowAbort as abort:
        if abort.trace is not None:
            _evolve_artifacts(rc, fc, None, abort.trace, forced)
        print(f"flow aborted: {abort.reason} ({abort})")
        return 5 if abort.reason in _INVARIANT_REASONS else 4
    _evolve_artifacts(rc, fc, u, trace, forced)
    status = "converged" if trace.converged else f"stopped: {trace.reason}"
    print(f"{status} at t={trace.t_final:.6g} after {trace.steps_accepted} steps, "
          f"residual {trace.residual_final:.3e}")
    return 0 if trace.converged else 4


def cmd_evolve_raw(args) -> int:
    rc = _load(args)
    fc = rc.resolved_flow()
    raw = evolve_unnormalized(fc)
    out = rc.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_raw_csv(out / "raw.csv", raw)
    write_field_txt(out / "final_u.txt", SupportField(raw.grid, raw.values[-1]))
    write_summary_json(out / "summary.json", {
        "config": config_echo(rc), "reason": raw.reason,
        "steps_accepted": raw.steps_accepted,
        "steps_rejected": raw.steps_rejected,
        "t_final": raw.times[-1], "samples": len(raw.times)})
    print(f"raw flow stopped: {raw.reason} at t={raw.times[-1]:.6g} "
          f"({raw.steps_accepted} steps)")
    return 4 if raw.reason == "dt_min_underrun" else 0


def cmd_verify(args) -> int:
    results = run_verify(resolution=args.resolution, fault=args.fault)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 1


def _run_one(label, fc, out_dir, echo):
    run_dir = out_dir / label
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        u, trace = evolve(fc)
    except FlowAbort as abort:
        if abort.trace is not None:
            write_trace_csv(run_dir / "trace.csv", abort.trace)
        return (label, fc, False, abort.trace.steps_accepted
                if abort.trace else 0, float("nan"), float("nan"))
    write_trace_csv(run_dir / "trace.csv", trace)
    report = stationarity_residual(u, eval_psi(fc.psi, u.grid), fc.k, fc.alpha)
    write_summary_json(run_dir / "summary.json",
                       summary_payload(echo, trace, report))
    return (label, fc, trace.converged, trace.steps_accepted,
            trace.residual_final, report.c_lp)


def cmd_sweep(args) -> int:
    rc = _load(args)
    runs = expand_sweep(rc, allow_large=args.force)
    threads = _thread_cap()
    rc.out_dir.mkdir(parents=True, exist_ok=True)
    echo = config_echo(rc)
    if threads == 1 or len(runs) == 1:
        results = [_run_one(label, fc, rc.out_dir, echo) for label, fc in runs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_one, label, fc, rc.out_dir, echo)
                       for label, fc in runs]
            results = [f.result() for f in futures]
    rows = []
    for label, fc, converged, steps, residual, c_lp in results:
        eps = fc.psi.params.get("epsilon", "")
        res = fc.resolution
        res_s = "x".join(map(str, res)) if isinstance(res, tuple) else str(res)
        rows.append((label, float(fc.alpha), eps, res_s,
                     converged, steps, float(residual), float(c_lp)))
    write_sweep_csv(rc.out_dir / "sweep.csv", rows)
    n_conv = sum(1 for r in rows if r[4])
    print(f"{n_conv}/{len(rows)} sweep runs converged "
          f"({threads} thread{'s' if threads != 1 else ''})")
    return 0 if n_conv == len(rows) else 4


def cmd_export_mesh(args) -> int:
    rc = _load(args)
    fc = rc.resolved_flow()
    if fc.grid_variant != "full_s2":
        raise ConfigError("mesh export needs a full_s2 grid")
    grid = build_grid(fc.grid_variant, fc.n_dim, fc.resolution)
    if args.field is not None:
        u = read_field_txt(args.field, grid)
    else:
        u = build_initial(grid, fc.init, fc.k)
    path = Path(args.mesh_out) if args.mesh_out else rc.out_dir / "body.obj"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(embed(u), path)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmflow",
        description="Normalized anisotropic curvature flow on support functions")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for random initial bodies")
        p.add_argument("--force", action="store_true",
                       help="run despite inadmissible psi / oversized sweep")
        p.add_argument("--allow-uneven", action="store_true",
                       help="accept a non-even psi (no convergence claim)")

    common(sub.add_parser("check-psi", help="evenness and admissibility report"))
    common(sub.add_parser("evolve", help="normalized flow run with artifacts"))
    common(sub.add_parser("evolve-raw", help="unnormalized flow run"))

    p_verify = sub.add_parser("verify", help="self-check battery")
    p_verify.add_argument("--resolution", type=int, default=32)
    p_verify.add_argument("--fault", default=None, choices=["corrupt_weights"],
                          help="fault injection hook (negative testing)")

    common(sub.add_parser("sweep", help="cartesian parameter sweep"))

    p_mesh = sub.add_parser("export-mesh", help="OBJ/PLY export of a body")
    common(p_mesh)
    p_mesh.add_argument("--field", default=None,
                        help="field file to export (default: the initial body)")
    p_mesh.add_argument("--mesh-out", default=None,
                        help="mesh path, .obj or .ply")
    return parser


_DISPATCH = {
    "check-psi": cmd_check_psi,
    "evolve": cmd_evolve,
    "evolve-raw": cmd_evolve_raw,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "export-mesh": cmd_export_mesh,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except AdmissibilityError as exc:
        print(f"anisotropy rejected: {exc}", file=sys.stderr)
        return 2
    except ConvexityError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

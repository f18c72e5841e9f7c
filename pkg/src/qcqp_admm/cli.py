"""Command-line entry point: ``qcqp-admm {generate,solve,replicate,check}``.

Exit codes: 0 success, 2 divergence flagged, 3 parameter error,
4 I/O or parse error, 5 audit failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .admm import ConsensusADMM, SolverConfig, auto_rho, estimate_C
from .exceptions import ParameterError, QcqpError, ValidationError
from .generate import GenSpec, generate
from .linalg import eig_hermitian
from .model import QcqpInstance
from .traceio import AuditThresholds, audit_trace, read_trace_csv, summary_dict, write_summary, write_trace_csv

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_PARAM = 3
EXIT_IO = 4
EXIT_AUDIT = 5

FIG2_RHOS = (2.0, 5.0, 10.0, 20.0)
FIG4_MS = (2, 5, 10, 20)

log = logging.getLogger("qcqp_admm")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcqp-admm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--pd-a0", action="store_true", help="shift A0 to be positive definite")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run consensus-ADMM on an instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--rho", type=float, default=10.0)
    s.add_argument("--auto-rho", action="store_true", help="pick rho from the monotone-descent condition")
    s.add_argument("--c-mode", default="fixed:1", help="empirical | statistical | fixed:<C>")
    s.add_argument("--safety", type=float, default=1.1)
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--tol-dx", type=float, default=1e-8)
    s.add_argument("--tol-consensus", type=float, default=1e-6)
    s.add_argument("--fixed-budget", action="store_true", help="ignore tolerances and run exactly --iters")
    s.add_argument("--trace", help="trace CSV output")
    s.add_argument("--summary", help="summary JSON output")
    s.add_argument("--threads", type=int, default=1)

    r = sub.add_parser("replicate", help="emit curve data for one of the convergence figures")
    r.add_argument("figure", choices=["fig1", "fig2", "fig3", "fig4", "fig5"])
    r.add_argument("--out-dir", required=True)
    r.add_argument("--n", type=int, default=10)
    r.add_argument("--m", type=int, default=5)
    r.add_argument("--iters", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0, help="instance seed (first seed for fig3)")
    r.add_argument("--seeds", type=int, default=20, help="number of runs for fig3")
    r.add_argument("--rho", type=float, default=None, help="override the figure's rho")
    r.add_argument("--rhos", type=_floats, default=FIG2_RHOS, help="comma list for fig2")
    r.add_argument("--ms", type=_ints, default=FIG4_MS, help="comma list for fig4")
    r.add_argument("--threads", type=int, default=1)

    c = sub.add_parser("check", help="audit a trace (or re-run an instance and audit it)")
    c.add_argument("--trace", help="trace CSV to audit")
    c.add_argument("--instance", help="instance JSON (with --rerun)")
    c.add_argument("--rerun", action="store_true")
    c.add_argument("--rho", type=float, default=10.0)
    c.add_argument("--iters", type=int, default=1000)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--dual-tol", type=float, default=1e-6, help="absolute bound on the dual-identity residual")
    c.add_argument("--z-tol", type=float, default=1e-8)
    c.add_argument("--final-dx", type=float, default=None)
    c.add_argument("--tol-mono", type=float, default=1e-9)
    c.add_argument("--report", help="write the audit report JSON here")
    return p


def cmd_generate(args) -> int:
    inst, x_feas = generate(GenSpec(n=args.n, m=args.m, pd_A0=args.pd_a0, seed=args.seed))
    inst.save(args.out)
    eig = eig_hermitian(inst.A0)
    rep = inst.check_feasible(x_feas)
    print(f"wrote {args.out}: n={inst.n} m={inst.m} seed={args.seed}")
    print(f"A0 spectrum: lambda_min={eig.lambda_min:.6g} lambda_max={eig.lambda_max:.6g}")
    print(f"x_feas slack: min={min(rep.per_constraint_slack):.6g} max={max(rep.per_constraint_slack):.6g}")
    return EXIT_OK


def _solve_config(args) -> SolverConfig:
    tol_dx, tol_cons = (None, None) if args.fixed_budget else (args.tol_dx, args.tol_consensus)
    return SolverConfig(
        rho=args.rho,
        max_iters=args.iters,
        tol_dx=tol_dx,
        tol_consensus=tol_cons,
        c_mode=args.c_mode,
        rho_safety=args.safety,
        threads=args.threads,
    )


def cmd_solve(args) -> int:
    inst = QcqpInstance.load(args.instance)
    config = _solve_config(args)
    extra = {"instance": str(args.instance)}
    if args.auto_rho:
        rho, est = auto_rho(inst, config)
        extra["auto_rho"] = {"rho": rho, "c_mode": config.c_mode, "C": None if est is None else est.value}
        config = replace(config, rho=rho)
    with ConsensusADMM(inst, config) as eng:
        result = eng.run()
    eig = eig_hermitian(inst.A0)
    c_est = None
    if result.dual_diffs:
        c_est = {mode: estimate_C(result.dual_diffs, mode) for mode in ("empirical", "statistical")}
    audit = audit_trace(result.trace) if result.trace else None
    if args.trace:
        write_trace_csv(args.trace, result.trace)
    doc = summary_dict(
        result, config, spectrum=(eig.lambda_min, eig.lambda_max), c_estimates=c_est, audit=audit, extra=extra
    )
    if args.summary:
        write_summary(args.summary, doc)
    last = result.trace[-1]
    print(
        f"{result.reason} after {len(result.trace)} iterations: L={last.L:.10g} "
        f"objective={last.objective:.10g} dx={last.dx_norm:.3e} consensus={last.consensus_residual:.3e}"
    )
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _fig_runs(args) -> list[tuple[str, GenSpec, float]]:
    n, m, seed = args.n, args.m, args.seed
    if args.figure == "fig1":
        return [("fig1_indefinite", GenSpec(n, m, False, seed), args.rho or 10.0)]
    if args.figure == "fig2":
        rhos = [args.rho] if args.rho else args.rhos
        return [(f"fig2_rho{rho:g}", GenSpec(n, m, True, seed), rho) for rho in rhos]
    if args.figure == "fig3":
        return [(f"fig3_run{j:02d}_seed{seed + j}", GenSpec(n, m, True, seed + j), args.rho or 10.0) for j in range(args.seeds)]
    if args.figure == "fig4":
        return [(f"fig4_m{mm}", GenSpec(n, mm, True, seed), args.rho or 20.0) for mm in args.ms]
    return [("fig5_distance", GenSpec(n, m, True, seed), args.rho or 10.0)]


def cmd_replicate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for name, spec, rho in _fig_runs(args):
        inst, _ = generate(spec)
        config = SolverConfig(rho=rho, max_iters=args.iters, tol_dx=None, tol_consensus=None, threads=args.threads)
        with ConsensusADMM(inst, config) as eng:
            result = eng.run()
        path = out / f"{name}.csv"
        write_trace_csv(path, result.trace)
        audit = audit_trace(result.trace) if len(result.trace) >= 2 else None
        index.append(
            {
                "curve": name,
                "file": path.name,
                "seed": spec.seed,
                "n": spec.n,
                "m": spec.m,
                "pd_A0": spec.pd_A0,
                "rho": rho,
                "L0": result.L0,
                "termination_reason": result.reason,
                "monotonicity_violations": None if audit is None else len(audit["monotonicity_violations"]),
            }
        )
        print(f"{name}: {result.reason}, {len(result.trace)} iterations -> {path}")
    (out / f"{args.figure}_index.json").write_text(json.dumps(index, indent=2) + "\n")
    # divergence is the expected outcome for fig1, so it is reported but not an error here
    return EXIT_OK


def cmd_check(args) -> int:
    thresholds = AuditThresholds(
        dual_identity=args.dual_tol, z_violation=args.z_tol, final_dx=args.final_dx, tol_mono=args.tol_mono
    )
    if args.rerun:
        if not args.instance:
            raise ParameterError("--rerun needs --instance")
        inst = QcqpInstance.load(args.instance)
        config = SolverConfig(rho=args.rho, max_iters=args.iters, tol_dx=None, tol_consensus=None, threads=args.threads)
        with ConsensusADMM(inst, config) as eng:
            result = eng.run()
        trace = result.trace
        report = audit_trace(trace, thresholds)
        rel = max(r.dual_identity_residual / r.dual_scale for r in trace)
        report["max_relative_dual_identity_residual"] = rel
        report["checks"]["relative_dual_identity"] = rel <= 1e-8
        report["passed"] = all(report["checks"].values())
        report["termination_reason"] = result.reason
    elif args.trace:
        trace = read_trace_csv(args.trace)
        report = audit_trace(trace, thresholds)
    else:
        raise ParameterError("check needs --trace or --instance with --rerun")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    print(f"max dual-identity residual: {report['max_dual_identity_residual']:.3e}")
    viol = report["monotonicity_violations"]
    print(f"monotonicity violations: {len(viol)}" + (f" at k = {viol[:20]}" if viol else ""))
    print(f"max z violation: {report['max_z_violation']:.3e}")
    print(f"final dx_norm: {report['final_dx_norm']:.3e}")
    for name, ok in report["checks"].items():
        print(f"  {name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_AUDIT


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "replicate": cmd_replicate, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (OSError, ValidationError, json.JSONDecodeError) as exc:
        print(f"I/O or parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QcqpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front door.

Subcommands: simulate, qv, forward, convergence, ito-check, dirichlet-check,
list.  Configuration is a flat key=value file plus flag overrides; flags
win.  Artifacts are CSV (paths: t,value,left_value,is_jump; convergence
tables: epsilon,sup_gap) and JSON reports carrying a schema_version field.
Identical configuration, seeds included, produces byte-identical reports.

Exit codes: 0 all requested checks pass, 1 check failure (including
expected failures, which the catalog flags as such), 2 unknown scenario or
bad configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dirichlet as dd
from . import ito as imod
from . import jumps as jmod
from .catalog import ORTH_SCENARIOS, SCENARIOS, list_catalog
from .ito import FUNCTION_CATALOG
from .jumps import parse_jump_law
from .regularize import (DEFAULT_TOL, EpsilonSchedule, ScheduleError,
                         forward_integral, qv_limit, ucp_limit)
from .simulate import SimSpec, SimulationError, simulate

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_IO = 3

OUT_ENV = "PATHCALC_OUT"


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or "."
    return Path(out)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO)


def _write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _convergence_csv(epsilons, gaps) -> str:
    lines = ["epsilon,sup_gap"]
    lines += [f"{float(e)!r},{float(g)!r}" for e, g in zip(epsilons[1:], gaps)]
    return "\n".join(lines) + "\n"


def _residual_csv(path) -> str:
    lines = ["t,residual"]
    lines += [f"{float(t)!r},{float(v)!r}" for t, v in zip(path.grid, path.values)]
    return "\n".join(lines) + "\n"


def _schedule(args, base_dt, scenario=None) -> EpsilonSchedule:
    eps0 = args.eps0 if args.eps0 is not None else getattr(
        scenario, "default_eps0", 0.05)
    levels = args.levels if args.levels is not None else getattr(
        scenario, "default_levels", 8)
    try:
        sched = EpsilonSchedule.geometric(eps0, levels).snapped(base_dt)
    except ScheduleError as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    return sched


def _scenario(args):
    if args.scenario is None:
        raise CliError("a scenario is required (flag or config file)",
                       EXIT_BAD_CONFIG)
    sc = SCENARIOS.get(args.scenario)
    if sc is None:
        raise CliError(f"unknown scenario {args.scenario!r}", EXIT_BAD_CONFIG)
    return sc


def _function(name):
    F = FUNCTION_CATALOG.get(name)
    if F is None:
        raise CliError(f"unknown function {name!r}", EXIT_BAD_CONFIG)
    return F


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        law = parse_jump_law(args.jump_law) if args.jump_law else None
        spec = SimSpec(args.kind, T=args.T, n=args.n, seed=args.seed,
                       sigma=args.sigma, drift=args.drift,
                       intensity=args.intensity, jump_law=law,
                       hurst=args.hurst, switch_rate=args.switch_rate,
                       regimes=((lambda t: np.asarray(t)),)
                       if args.kind == "deterministic" else ())
        path, gt = simulate(spec)
    except (SimulationError, ValueError) as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    out = _out_dir(args)
    stem = f"{args.kind}_seed{args.seed}"
    _write_text(out / f"{stem}_path.csv", path.to_csv())
    _write_json(out / f"{stem}_truth.json", gt.to_json_dict())
    print(f"wrote {stem}_path.csv and {stem}_truth.json to {out}")
    return EXIT_OK


def _run_limit(args, estimator_name: str):
    sc = _scenario(args)
    X, gt = sc.build(seed=args.seed, n=args.n)
    sched = _schedule(args, gt.base_dt, sc)
    try:
        sched.validate_for(X, gt.base_dt)
    except ScheduleError as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    if estimator_name == "qv":
        rep = qv_limit(X, schedule=sched, tol=args.tol)
    else:
        Y = imod.path_of_function(_function(args.fn), X)
        rep = ucp_limit(lambda A, B, e: forward_integral(B, A, e), X, Y,
                        schedule=sched, tol=args.tol)
    return sc, rep


def cmd_qv(args) -> int:
    sc, rep = _run_limit(args, "qv")
    out = _out_dir(args)
    stem = f"{args.scenario}_qv"
    _write_text(out / f"{stem}_convergence.csv",
                _convergence_csv(rep.epsilons, rep.sup_gaps))
    _write_text(out / f"{stem}_limit.csv", rep.limit.to_csv())
    payload = rep.to_json_dict()
    payload["scenario"] = sc.id
    payload["expected_converged"] = sc.expect_qv_converges
    _write_json(out / f"{stem}_report.json", payload)
    status = "converged" if rep.converged else "did not converge"
    expected = "" if rep.converged == sc.expect_qv_converges else " (unexpected)"
    print(f"{sc.id}: window study {status}{expected}; final gap "
          f"{rep.sup_gaps[-1] if rep.sup_gaps.size else 0.0:.3g}")
    return EXIT_OK if rep.converged else EXIT_CHECK_FAILED


def cmd_forward(args) -> int:
    sc, rep = _run_limit(args, "forward")
    out = _out_dir(args)
    stem = f"{args.scenario}_forward_{args.fn}"
    _write_text(out / f"{stem}_convergence.csv",
                _convergence_csv(rep.epsilons, rep.sup_gaps))
    _write_text(out / f"{stem}_limit.csv", rep.limit.to_csv())
    payload = rep.to_json_dict()
    payload["scenario"] = sc.id
    payload["integrand"] = args.fn
    _write_json(out / f"{stem}_report.json", payload)
    print(f"{sc.id}: forward study {'converged' if rep.converged else 'did not converge'}")
    return EXIT_OK if rep.converged else EXIT_CHECK_FAILED


def cmd_convergence(args) -> int:
    return cmd_qv(args) if args.op == "qv" else cmd_forward(args)


def cmd_ito_check(args) -> int:
    sc = _scenario(args)
    X, gt = sc.build(seed=args.seed, n=args.n)
    F = _function(args.fn)
    sched = _schedule(args, gt.base_dt, sc)
    try:
        sched.validate_for(X, gt.base_dt)
    except ScheduleError as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    try:
        if args.measure_form:
            if gt.compensator is None:
                raise CliError(
                    f"scenario {sc.id} has no compensator model", EXIT_BAD_CONFIG)
            rep = imod.ito_terms_measure_form(F, X, gt.compensator,
                                              schedule=sched, tol=args.tol)
        else:
            rep = imod.ito_terms_c12(F, X, schedule=sched, tol=args.tol)
    except imod.NonConvergenceError as exc:
        print(f"{sc.id}: {exc}")
        return EXIT_CHECK_FAILED
    except (jmod.IntegrabilityError, jmod.QuadratureError,
            imod.BundleValidationError, ValueError) as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    out = _out_dir(args)
    stem = f"{args.scenario}_ito_{args.fn}"
    _write_text(out / f"{stem}_residual.csv", _residual_csv(rep.residual))
    payload = rep.to_json_dict()
    payload["scenario"] = sc.id
    payload["threshold"] = args.threshold
    _write_json(out / f"{stem}_report.json", payload)
    if args.measure_form:
        diag = jmod.integrability_report(X, F)
        _write_json(out / f"{stem}_integrability.json", diag.to_json_dict())
    rel = rep.relative_residual()
    ok = rel < args.threshold
    print(f"{sc.id}/{args.fn}: relative residual {rel:.3g} "
          f"({'pass' if ok else 'fail'} at {args.threshold:g})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_dirichlet_check(args) -> int:
    if args.chain:
        return _run_chain_check(args)
    if args.scenario is None:
        raise CliError("a scenario is required (flag or config file)",
                       EXIT_BAD_CONFIG)
    sc = ORTH_SCENARIOS.get(args.scenario)
    if sc is None:
        raise CliError(f"unknown scenario {args.scenario!r}", EXIT_BAD_CONFIG)
    A, N, base_dt = sc.build(seed=args.seed, n=args.n)
    sched = _schedule(args, base_dt, sc)
    try:
        sched.validate_for(A, base_dt)
    except ScheduleError as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    rep = dd.orthogonality_test(A, N, sched, tol=args.tol)
    out = _out_dir(args)
    payload = rep.to_json_dict()
    payload["scenario"] = sc.id
    payload["expected_decision"] = sc.expect_decision
    _write_json(out / f"{args.scenario}_orth_report.json", payload)
    expected = "" if rep.decision == sc.expect_decision else " (unexpected)"
    print(f"{sc.id}: orthogonal={rep.decision}{expected}; final estimate "
          f"sup-norm {rep.sup_norms[-1]:.3g}")
    return EXIT_OK if rep.decision else EXIT_CHECK_FAILED


def _run_chain_check(args) -> int:
    """Full decomposition of F(t, X_t) for a scenario with labeled parts,
    with the residual component submitted to the orthogonality battery."""
    sc = SCENARIOS.get(args.chain)
    if sc is None or not sc.has_decomposition:
        raise CliError(f"no labeled decomposition for scenario {args.chain!r}",
                       EXIT_BAD_CONFIG)
    X, gt = sc.build(seed=args.seed, n=args.n)
    F = _function(args.fn)
    sched = _schedule(args, gt.base_dt, sc)
    try:
        sched.validate_for(X, gt.base_dt)
    except ScheduleError as exc:
        raise CliError(str(exc), EXIT_BAD_CONFIG)
    dec = dd.LabeledDecomposition.from_ground_truth(gt)
    rep = dd.chain_rule_c01(F, X, dec, gt.compensator, sched,
                            tol=max(args.tol, 0.05), orth_tol=args.tol,
                            battery_seed=args.seed)
    out = _out_dir(args)
    payload = rep.to_json_dict()
    payload["scenario"] = sc.id
    _write_json(out / f"{sc.id}_chain_{args.fn}_report.json", payload)
    print(f"{sc.id}/{args.fn}: residual part "
          f"{'orthogonal' if rep.decision else 'not orthogonal'} "
          f"across {len(rep.orth_reports)} test paths at tol {args.tol:g}")
    return EXIT_OK if rep.decision else EXIT_CHECK_FAILED


def cmd_list(args) -> int:
    sys.stdout.write(list_catalog(args.filter or ""))
    return EXIT_OK


# -- argument plumbing ----------------------------------------------------------


def _add_common(p, scenario=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="grid cells (scenario default)")
    p.add_argument("--eps0", type=float, default=None,
                   help="largest window width; the schedule halves from here")
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", default=None, help=f"output dir (default ${OUT_ENV} or .)")
    p.add_argument("--config", default=None, help="flat key=value defaults file")
    if scenario:
        p.add_argument("--scenario", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pathcalc",
        description="window-smoothing calculus toolkit for cadlag paths")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a path plus ground truth")
    p.add_argument("--kind", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--jump-law", default=None,
                   help="dirac:c | normal:loc,scale | uniform:lo,hi")
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--switch-rate", type=float, default=1.0)
    _add_common(p, scenario=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qv", help="quadratic variation window study")
    _add_common(p)
    p.set_defaults(func=cmd_qv)

    p = sub.add_parser("forward", help="forward integral window study")
    _add_common(p)
    p.add_argument("--fn", default="identity",
                   help="catalog function F; the integrand is F(t, X_t)")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("convergence", help="emit (epsilon, sup_gap) for qv or forward")
    _add_common(p)
    p.add_argument("--op", choices=("qv", "forward"), default="qv")
    p.add_argument("--fn", default="identity")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("ito-check", help="term-by-term identity verification")
    _add_common(p)
    p.add_argument("--fn", default="square")
    p.add_argument("--measure-form", action="store_true")
    p.add_argument("--threshold", type=float, default=1e-2,
                   help="pass when relative residual is below this")
    p.set_defaults(func=cmd_ito_check)

    p = sub.add_parser("dirichlet-check", help="orthogonality scenario check")
    _add_common(p)
    p.add_argument("--chain", default=None,
                   help="run the full chain-rule decomposition for a main "
                        "catalog scenario with labeled parts")
    p.add_argument("--fn", default="square")
    p.set_defaults(func=cmd_dirichlet_check, tol=0.05)

    p = sub.add_parser("list", help="print the catalogs")
    p.add_argument("filter", nargs="?", default="")
    p.set_defaults(func=cmd_list)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load key=value defaults from --config; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    try:
        text = Path(known.config).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_BAD_CONFIG)
    defaults = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"bad config line: {line!r}", EXIT_BAD_CONFIG)
        key, _, value = line.partition("=")
        defaults[key.strip().replace("-", "_")] = value.strip()
    for action in ap._subparsers._group_actions[0].choices.values():
        known_dests = {a.dest: a for a in action._actions}
        overrides = {}
        for key, value in defaults.items():
            if key in known_dests:
                a = known_dests[key]
                overrides[key] = a.type(value) if a.type else value
        if overrides:
            action.set_defaults(**overrides)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv = _apply_config(ap, argv)
        args = ap.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())

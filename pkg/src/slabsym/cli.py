"""Command-line front end.

    slab-symmetry <verb> --scenario <file-or-id> [options]

Verbs:
    solve      run the solver stage, write the solution artifact
    sweep      solve, mesh, and run the reflection sweeps
    linearize  solve and export the linearized operator at the solution
    touching   solve and run the touching-principle self check
    verify     full pipeline + checks, write a verification report
    export     full pipeline, write every artifact

``--scenario`` accepts a JSON file or a built-in id (T1, T2, T3, T4).

Exit codes: 0 = success (for ``verify``/``touching``: all checks passed),
1 = the run completed but a verification check failed, 2 = execution error
(bad input, solver failure, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import SlabSymError
from .linearization import assemble_difference_operator
from .scenarios import (
    Scenario,
    canonical_scenario,
    export_artifacts,
    run_scenario,
)

_BUILTIN_IDS = ("T1", "T2", "T3", "T4")


def _load_scenario(spec: str) -> Scenario:
    if spec.upper() in _BUILTIN_IDS and not Path(spec).exists():
        return canonical_scenario(spec.upper())
    path = Path(spec)
    if not path.exists():
        raise SlabSymError(
            f"scenario {spec!r} is neither a file nor one of {_BUILTIN_IDS}"
        )
    return Scenario.load(path)


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if args.resolution is not None:
        scenario.resolution = float(args.resolution)
    if args.seed is not None:
        scenario.seed = int(args.seed)
    return scenario


def _print(args, *items) -> None:
    if not args.quiet:
        print(*items)


def _outdir(args, default: str) -> Path:
    out = Path(args.out) if args.out else Path(default)
    return out


def _cmd_solve(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    report = run_scenario(scenario, until="mesh")
    if report.error is not None and report.error["stage"] in ("validate", "solve"):
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        return 2
    outdir = _outdir(args, "artifacts")
    written = export_artifacts(report, outdir)
    _print(args, f"solver: {json.dumps(report.solver, sort_keys=True)}")
    for name, path in sorted(written.items()):
        _print(args, f"wrote {name}: {path}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    if args.directions is not None:
        scenario.sweep_directions = int(args.directions)
    report = run_scenario(scenario)
    if report.error is not None:
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        return 2
    sym = report.symmetry
    _print(args, f"verdict: {sym['verdict']}  max deviation "
                 f"{sym['max_deviation']:.3e} (tolerance {sym['tolerance']:.3e})")
    if sym["axis"] is not None:
        _print(args, f"axis through {sym['axis']['point']} residual "
                     f"{sym['axis_residual']:.3e}")
    if args.out:
        outdir = _outdir(args, "artifacts")
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "symmetry.json"
        path.write_text(json.dumps(sym, indent=2, sort_keys=True) + "\n")
        _print(args, f"wrote symmetry: {path}")
        export_artifacts(report, outdir)
    return 0


def _cmd_linearize(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    report = run_scenario(scenario, until="solve")
    if report.error is not None and report.error["stage"] in ("validate", "solve"):
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        return 2
    field = report.attachments.get("field")
    if field is None:
        _print(args, "linearize requires a graph scenario (meridian "
                     "realizations have no grid operator)")
        return 2
    op = assemble_difference_operator(field, field, scenario.profile)
    outdir = _outdir(args, "artifacts")
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "linearization.json"
    op.save_json(path)
    min_eig = float(np.min(np.linalg.eigvalsh(op.second_order)[:, 0]))
    _print(args, f"ellipticity constant {op.ellipticity:.6e}, smallest "
                 f"coefficient eigenvalue {min_eig:.6e}")
    _print(args, f"wrote linearization: {path}")
    return 0


def _cmd_touching(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    report = run_scenario(scenario)
    if report.error is not None:
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        return 2
    if report.touching is None:
        _print(args, "no lattice mirror available for the touching self check "
                     "(meridian realization or asymmetric grid)")
        return 2
    if args.out:
        outdir = _outdir(args, "artifacts")
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "touching.json"
        path.write_text(json.dumps(report.touching, indent=2, sort_keys=True) + "\n")
        _print(args, f"wrote touching: {path}")
    status = report.touching["conclusion_status"]
    _print(args, f"touching conclusion: {status} "
                 f"(max |w| = {report.touching['max_abs_w']:.3e})")
    return 0 if status == "holds" else 1


def _cmd_verify(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    report = run_scenario(scenario)
    out = Path(args.out) if args.out else Path("report.json")
    report.save(out)
    for c in report.criteria:
        detail = ""
        if c.value is not None and c.tolerance is not None:
            detail = f"  ({c.value:.3e} vs {c.tolerance:.3e})"
        _print(args, f"{'PASS' if c.passed else 'FAIL'}  {c.name}{detail}")
    if report.error is not None:
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        _print(args, f"wrote report: {out}")
        return 2
    _print(args, f"report hash {report.report_hash()}")
    _print(args, f"wrote report: {out}")
    if report.passed:
        _print(args, "verification PASSED")
        return 0
    _print(args, "verification FAILED")
    return 1


def _cmd_export(args) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    report = run_scenario(scenario)
    outdir = _outdir(args, "artifacts")
    written = export_artifacts(report, outdir)
    for name, path in sorted(written.items()):
        _print(args, f"wrote {name}: {path}")
    if report.error is not None:
        _print(args, f"error in stage {report.error['stage']}: "
                     f"{report.error['message']}")
        return 2
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "linearize": _cmd_linearize,
    "touching": _cmd_touching,
    "verify": _cmd_verify,
    "export": _cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slab-symmetry",
        description="solve, sweep, and verify symmetry of surfaces between "
                    "two parallel plates",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, fn in _COMMANDS.items():
        p = sub.add_parser(verb, help=fn.__doc__)
        p.add_argument("--scenario", required=True,
                       help="scenario JSON file or built-in id (T1..T4)")
        p.add_argument("--out", default=None,
                       help="output file (verify) or directory (other verbs)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed (default 0)")
        p.add_argument("--resolution", type=float, default=None,
                       help="override the grid spacing")
        p.add_argument("--quiet", action="store_true")
        if verb == "sweep":
            p.add_argument("--directions", type=int, default=None,
                           help="number of sweep directions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except SlabSymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: generate, solve, bound, validate, export-mps.

Exit codes: 0 success, 64 usage error, 65 invalid data, 70 solver or backend failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import instance as instance_mod
from .bounds import trivial_bound, ub1, ub2
from .disaggregate import PreconditionError, disaggregate
from .instance import GeneratorParams, Instance, InstanceFormatError, generate, summary, validate_instance
from .lexico import LexicoError, StageLimits, procedure1, procedure2, stage1
from .model import (
    KOptParams,
    build_AF1,
    build_AF2,
    build_AF3,
    build_F1_complete,
)
from .report import InvalidScheduleError, emit, evaluate, from_json, simulate_waits, validate_schedule
from .solver import OracleSizeError, SolveOptions, SolverError, write_model

EX_OK = 0
EX_USAGE = 64
EX_DATAERR = 65
EX_SOFTWARE = 70

MODELS = ("f1", "af1", "af2", "af3", "ub1", "ub2")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


# -- flag parsing ------------------------------------------------------------------


def parse_backend(text: str) -> SolveOptions:
    if text.startswith("external:"):
        cmd = text[len("external:"):].strip()
        if not cmd:
            raise UsageError("external backend needs a command: --backend external:<cmd>")
        return SolveOptions(backend="external", command=cmd)
    if text in ("internal", "oracle", "highs"):
        return SolveOptions(backend=text)
    raise UsageError(f"unknown backend {text!r}; use internal, highs, oracle or external:<cmd>")


def parse_kopt(text: str, limits: StageLimits) -> KOptParams:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 4:
        raise UsageError("--kopt takes four radii: k_x,k_y,k_zB,k_zS")
    try:
        ks = [int(s) for s in parts]
    except ValueError:
        raise UsageError(f"--kopt radii must be integers, got {text!r}") from None
    try:
        return KOptParams(*ks, iteration_time_limit=limits.kopt_iter, overall_time_limit=limits.p3_overall)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_v2(text: str) -> dict[int, int]:
    """``1=0,2=3,...`` (day=wait)."""
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        day, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"bad --v2 entry {part!r}; expected day=wait")
        try:
            out[int(day)] = int(val)
        except ValueError:
            raise UsageError(f"bad --v2 entry {part!r}; expected integers") from None
    return out


def _load_instance(path: str | None) -> Instance:
    if not path:
        raise UsageError("--instance is required")
    try:
        inst = instance_mod.load(path)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except InstanceFormatError as exc:
        raise DataError(f"{path}: {exc}") from None
    problems = validate_instance(inst)
    hard = [v for v in problems if v.rule != "unschedulable patient"]
    for v in problems:
        if v.rule == "unschedulable patient":
            print(f"warning: {v}", file=sys.stderr)
    if hard:
        raise DataError(f"{path}: invalid instance: " + "; ".join(str(v) for v in hard))
    return inst


def _common(args: argparse.Namespace) -> tuple[SolveOptions, StageLimits, KOptParams]:
    try:
        limits = StageLimits.parse(args.limits) if args.limits else StageLimits()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        opts = parse_backend(args.backend)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    opts.deterministic_seed = getattr(args, "seed", 0)
    return opts, limits, parse_kopt(args.kopt, limits)


def _levels(args, inst: Instance, opts: SolveOptions, limits: StageLimits) -> tuple[int, dict[int, int], bool]:
    """v1 and per-day v2 from the flags, running procedure1 for anything missing."""
    v2 = parse_v2(args.v2) if args.v2 else None
    if args.v1 is not None and v2 is not None:
        missing = [t for t in inst.day_range if t not in v2]
        if missing:
            raise UsageError(f"--v2 lacks days {missing}")
        return args.v1, v2, False
    p1 = procedure1(inst, limits, opts)
    return (args.v1 if args.v1 is not None else p1.v1), (v2 if v2 is not None else p1.v2), True


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# -- subcommands ------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        params = GeneratorParams(
            seed=args.seed,
            total_patients=args.patients,
            critical_fraction=args.critical_fraction,
            mcp_policy=args.mcp_policy,
        )
        inst = generate(params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stats = json.dumps(summary(inst), indent=2)
    if args.out:
        _write(Path(args.out), inst.dumps())
        print(stats)
    else:
        sys.stdout.write(inst.dumps())
        print(stats, file=sys.stderr)
    return EX_OK


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    opts, limits, kopt = _common(args)
    logs: list[dict[str, Any]] = []
    result: dict[str, Any]
    if args.stage == 1:
        v1, agg, _ = stage1(inst, opts, limits.af1, logs)
        result = {"stage": 1, "v1": v1}
    elif args.stage == 2:
        p1 = procedure1(inst, limits, opts)
        logs, agg = p1.logs, p1.aggregate
        result = {"stage": 2, "v1": p1.v1, "v2": {str(t): w for t, w in sorted(p1.v2.items())}}
    else:
        out = procedure2(inst, limits, kopt, opts)
        logs, agg = out.logs, out.aggregate
        result = {"stage": 3, **out.summary()}
    schedule = disaggregate(agg, inst)
    metrics = evaluate(schedule, inst)
    waits = simulate_waits(schedule, inst)
    if any(waits[pid] != a.infusion_start - a.visit_start - inst.patient(pid).visit_duration
           for pid, a in schedule):
        raise LexicoError("simulated waits disagree with the schedule", logs)
    result["metrics"] = metrics.to_dict()
    if args.bound and args.stage == 3:
        b = ub2(inst, result["v1"], out.v2, opts.with_limit(args.ub2_limit))
        gap = (b.value - metrics.phi3) / b.value if b.value else 0.0
        result["bound"] = {**b.to_dict(), "gap": round(gap, 6)}
    if args.out:
        out_dir = Path(args.out)
        _write(out_dir / "schedule.json", emit(schedule, metrics, "json"))
        _write(out_dir / "schedule.csv", emit(schedule, metrics, "csv", inst))
        _write(out_dir / "gantt.txt", emit(schedule, metrics, "gantt-text", inst))
        _write(out_dir / "log.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in logs))
        _write(out_dir / "result.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(json.dumps(result, indent=2, sort_keys=True))
    return EX_OK


def cmd_bound(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    opts, limits, _ = _common(args)
    v1, v2, derived = _levels(args, inst, opts, limits)
    rows = [trivial_bound(inst), ub1(inst, opts.with_limit(args.ub1_limit)), ub2(inst, v1, v2, opts.with_limit(args.ub2_limit))]
    doc = {
        "v1": v1,
        "v2": {str(t): w for t, w in sorted(v2.items())},
        "levels_from_procedure1": derived,
        "bounds": [b.to_dict() for b in rows],
    }
    if args.out:
        _write(Path(args.out), json.dumps(doc, indent=2) + "\n")
    print(" | ".join(f"{b.method} {b.value} ({b.status})" for b in rows))
    print(json.dumps(doc, indent=2))
    return EX_OK


def cmd_validate(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    if not args.schedule:
        raise UsageError("--schedule is required")
    try:
        schedule = from_json(Path(args.schedule).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{args.schedule}: no such file") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{args.schedule}: unreadable schedule: {exc}") from None
    bad = validate_schedule(schedule, inst)
    if bad:
        for line in bad:
            print(line, file=sys.stderr)
        return EX_DATAERR
    print(json.dumps(evaluate(schedule, inst, check=False).to_dict(), indent=2))
    return EX_OK


def cmd_export_mps(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    if not args.out:
        raise UsageError("--out is required")
    name = args.model
    if name == "f1":
        model, _ = build_F1_complete(inst)
    elif name == "af1":
        model, _ = build_AF1(inst)
    elif name == "ub1":
        from .bounds import build_ub1

        model, _ = build_ub1(inst)
    else:
        opts, limits, _ = _common(args)
        if name == "af2":
            v1 = args.v1 if args.v1 is not None else stage1(inst, opts, limits.af1)[0]
            model, _ = build_AF2(inst, v1)
        else:
            v1, v2, _ = _levels(args, inst, opts, limits)
            if name == "af3":
                model, _ = build_AF3(inst, v1, v2)
            else:
                from .bounds import build_ub2

                model, _, _ = build_ub2(inst, v1, v2)
    write_model(model, args.out)
    print(f"{name}: {model.num_vars} variables, {model.num_constraints} rows -> {args.out}")
    return EX_OK


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chemosched", description="Weekly chemotherapy appointment scheduling.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--backend", default="highs", help="internal | highs | oracle | external:<cmd>")
        p.add_argument("--limits", default="", help="af1=300,af2day=60,af2warm=300,p3day=90,kopt=60,p3all=600")
        p.add_argument("--kopt", default="20,20,20,20", help="Hamming radii k_x,k_y,k_zB,k_zS")

    def level_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--v1", type=int, default=None, help="treated-patient level")
        p.add_argument("--v2", default=None, help="per-day wait levels, e.g. 1=0,2=3")

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--patients", type=int, default=614)
    g.add_argument("--critical-fraction", type=float, default=0.2848)
    g.add_argument("--mcp-policy", choices=("proportional", "round_robin"), default="proportional")
    g.add_argument("--out", default=None, help="instance file (stdout if omitted)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the lexicographic chain")
    s.add_argument("--instance", required=True)
    s.add_argument("--out", default=None, help="directory for schedule, gantt, csv, logs")
    s.add_argument("--stage", type=int, choices=(1, 2, 3), default=3)
    s.add_argument("--seed", type=int, default=0, help="seeds the constructive start and the solver; runs are deterministic per seed")
    s.add_argument("--bound", action="store_true", help="also compute UB2 and the chair gap (stage 3)")
    s.add_argument("--ub2-limit", type=float, default=60.0)
    solver_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bound", help="trivial, UB1 and UB2 bounds on chair use")
    b.add_argument("--instance", required=True)
    b.add_argument("--out", default=None)
    b.add_argument("--ub1-limit", type=float, default=60.0)
    b.add_argument("--ub2-limit", type=float, default=60.0)
    level_flags(b)
    solver_flags(b)
    b.set_defaults(func=cmd_bound)

    v = sub.add_parser("validate", help="check a schedule file against an instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--schedule", required=True)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("export-mps", help="write a formulation as an MPS file")
    e.add_argument("--instance", required=True)
    e.add_argument("--model", choices=MODELS, required=True)
    e.add_argument("--out", required=True)
    level_flags(e)
    solver_flags(e)
    e.set_defaults(func=cmd_export_mps)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and usage errors; keeps main() callable in-process
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"chemosched: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (DataError, InvalidScheduleError, PreconditionError) as exc:
        print(f"chemosched: invalid data: {exc}", file=sys.stderr)
        return EX_DATAERR
    except LexicoError as exc:
        for rec in exc.logs:
            print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        print(f"chemosched: solver failure: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    except (SolverError, OracleSizeError, RuntimeError, OSError) as exc:
        print(f"chemosched: solver failure: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    except ValueError as exc:
        # model-level inconsistencies such as an infeasible bound model
        print(f"chemosched: invalid data: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())

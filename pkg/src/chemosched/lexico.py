"""The three-stage lexicographic chain: treated patients, then daily waits, then chairs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

from .construct import constructive_start, move_to_chairs, treatable_upper_bound
from .disaggregate import disaggregate
from .instance import Instance
from .model import (
    KOptParams,
    MilpModel,
    VarMap,
    add_kopt_constraints,
    aggregate_to_assignment,
    assignment_to_aggregate,
    build_AF1,
    build_AF2,
    build_AF3,
    build_single_day,
)
from .report import evaluate
from .schedule import AggregateSchedule, CompleteSchedule
from .solver import Deadline, SolveOptions, SolveResult, Status, solve


@dataclass(frozen=True)
class StageLimits:
    """Time limits in seconds for each solver call of the chain."""

    af1: float = 300.0
    af2_day: float = 60.0
    af2_warm: float = 300.0
    p3_day: float = 90.0
    kopt_iter: float = 60.0
    p3_overall: float = 600.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"time limit {f.name} must be > 0")

    def total(self) -> float:
        return sum(getattr(self, f.name) for f in fields(self))

    _KEYS = {"af1": "af1", "af2day": "af2_day", "af2warm": "af2_warm", "p3day": "p3_day",
             "kopt": "kopt_iter", "p3all": "p3_overall"}

    @classmethod
    def parse(cls, text: str) -> "StageLimits":
        """From ``af1=300,af2day=60,...``; omitted keys keep their defaults."""
        values: dict[str, float] = {}
        for part in filter(None, (s.strip() for s in text.split(","))):
            key, sep, val = part.partition("=")
            if not sep or key.strip() not in cls._KEYS:
                raise ValueError(f"bad limit {part!r}; keys are {', '.join(cls._KEYS)}")
            values[cls._KEYS[key.strip()]] = float(val)
        return cls(**values)


class LexicoError(RuntimeError):
    def __init__(self, message: str, logs: list[dict[str, Any]]):
        super().__init__(message)
        self.logs = logs


@dataclass
class Procedure1Result:
    v1: int
    v2: dict[int, int]
    aggregate: AggregateSchedule
    logs: list[dict[str, Any]]
    v1_optimal: bool
    v2_optimal: bool


@dataclass
class LexicoOutcome:
    v1: int
    v2: dict[int, int]
    phi3: int
    schedule: CompleteSchedule
    aggregate: AggregateSchedule
    logs: list[dict[str, Any]] = field(default_factory=list)
    kopt_trace: list[int] = field(default_factory=list)
    phi3_before_kopt: int = 0
    bound_info: dict[str, Any] | None = None

    def logs_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.logs)

    def summary(self) -> dict[str, Any]:
        return {
            "v1": self.v1,
            "v2": {str(t): w for t, w in sorted(self.v2.items())},
            "phi3": self.phi3,
            "phi3_before_kopt": self.phi3_before_kopt,
            "kopt_trace": list(self.kopt_trace),
        }


def _solve_logged(
    model: MilpModel,
    opts: SolveOptions,
    limit: float,
    logs: list[dict[str, Any]],
    stage: str,
    day: int | None = None,
) -> SolveResult:
    res = solve(model, opts.with_limit(limit))
    rec: dict[str, Any] = {"stage": stage}
    if day is not None:
        rec["day"] = day
    rec.update(status=str(res.status), objective=res.objective, bound=res.best_bound, runtime=round(res.runtime, 4))
    if res.message:
        rec["message"] = res.message
    logs.append(rec)
    if res.status == Status.BACKEND_ERROR:
        raise LexicoError(f"{stage}: backend failure: {res.message}", logs)
    return res


def stage1(
    inst: Instance, opts: SolveOptions | None = None, limit: float = 300.0, logs: list | None = None
) -> tuple[int, AggregateSchedule, SolveResult]:
    """Maximize the number of treated patients, starting from a constructive schedule."""
    opts = opts or SolveOptions()
    logs = [] if logs is None else logs
    model, vm = build_AF1(inst)
    model.warm_start = aggregate_to_assignment(vm, constructive_start(inst, seed=opts.deterministic_seed), inst)
    model.objective_bound = treatable_upper_bound(inst)
    res = _solve_logged(model, opts, limit, logs, "AF1")
    if not res.has_solution:
        raise LexicoError("AF1: no feasible schedule found within the time limit", logs)
    agg = assignment_to_aggregate(vm, res.assignment)
    return agg.phi1(), agg, res


def _day_subproblem(
    inst: Instance,
    day: int,
    current: AggregateSchedule,
    stage: str,
    cap: int | None,
    opts: SolveOptions,
    limit: float,
    logs: list[dict[str, Any]],
) -> tuple[AggregateSchedule, SolveResult]:
    """Re-optimize one day with its roster fixed, starting from the current times."""
    part = current.restricted_to_day(day)
    model, vm = build_single_day(inst, day, part.visits, stage, cap)
    model.warm_start = aggregate_to_assignment(vm, part, inst)
    # no wait is negative, and at most every non-critical patient of the roster sits on a chair
    model.objective_bound = 0 if stage == "P2" else sum(not inst.patient(pid).critical for pid in part.visits)
    res = _solve_logged(model, opts, limit, logs, stage, day)
    if res.has_solution:
        return assignment_to_aggregate(vm, res.assignment), res
    return part, res


def procedure1(
    inst: Instance, limits: StageLimits | None = None, opts: SolveOptions | None = None
) -> Procedure1Result:
    """Treated-patient maximum, then the smallest sum of daily maximum waits keeping it."""
    limits = limits or StageLimits()
    opts = opts or SolveOptions()
    logs: list[dict[str, Any]] = []
    v1, agg1, res1 = stage1(inst, opts, limits.af1, logs)

    union = AggregateSchedule()
    for t in inst.day_range:
        if not agg1.day_roster(t):
            continue
        part, _ = _day_subproblem(inst, t, agg1, "P2", None, opts, limits.af2_day, logs)
        union = union.merged(part)

    model, vm = build_AF2(inst, v1)
    model.warm_start = aggregate_to_assignment(vm, union, inst)
    model.objective_bound = 0
    res = _solve_logged(model, opts, limits.af2_warm, logs, "AF2")
    best = union
    if res.has_solution:
        cand = assignment_to_aggregate(vm, res.assignment)
        if sum(cand.phi2_by_day(inst).values()) < sum(union.phi2_by_day(inst).values()):
            best = cand
    v2 = best.phi2_by_day(inst)
    return Procedure1Result(
        v1=v1,
        v2=v2,
        aggregate=best,
        logs=logs,
        v1_optimal=res1.status == Status.OPTIMAL,
        v2_optimal=res.status == Status.OPTIMAL,
    )


def kopt_search(
    inst: Instance,
    start: AggregateSchedule,
    v1: int,
    v2: Mapping[int, int],
    kopt: KOptParams | None = None,
    opts: SolveOptions | None = None,
    deadline: Deadline | None = None,
    logs: list | None = None,
    trace: list[int] | None = None,
    base: tuple[MilpModel, VarMap] | None = None,
) -> AggregateSchedule:
    """Steepest ascent on chair count over Hamming balls around the incumbent.

    Each step solves the chair-maximization model restricted to the ball; the
    incumbent is replaced only by a strictly better solution. The solve starts
    from a few bed-to-chair moves of the incumbent when they stay inside the
    ball and gain chairs. Each moved patient flips at most two visit
    variables and one variable of each infusion family.
    """
    kopt = kopt or KOptParams()
    opts = opts or SolveOptions()
    deadline = deadline or Deadline(kopt.overall_time_limit)
    logs = [] if logs is None else logs
    trace = [] if trace is None else trace
    model, vm = base or build_AF3(inst, v1, v2)
    incumbent = start
    while deadline.remaining() > 0:
        ball = add_kopt_constraints(model, vm, incumbent, kopt, inst)
        ball.warm_start = aggregate_to_assignment(vm, incumbent, inst)
        moved = move_to_chairs(inst, incumbent, v2, max_moves=min(kopt.k_x // 2, kopt.k_zB, kopt.k_zS))
        if moved.phi3() > incumbent.phi3():
            seed = aggregate_to_assignment(vm, moved, inst)
            if ball.is_feasible(seed):
                ball.warm_start = seed
        limit = min(kopt.iteration_time_limit, deadline.remaining())
        res = _solve_logged(ball, opts, limit, logs, "kopt")
        if not res.has_solution:
            break
        cand = assignment_to_aggregate(vm, res.assignment)
        if cand.phi3() <= incumbent.phi3():
            break
        incumbent = cand
        trace.append(cand.phi3())
    return incumbent


def procedure2(
    inst: Instance,
    limits: StageLimits | None = None,
    kopt: KOptParams | None = None,
    opts: SolveOptions | None = None,
    final_warm_start: bool = False,
) -> LexicoOutcome:
    """Full chain: procedure1, per-day chair maximization, k-opt search, resource assignment."""
    limits = limits or StageLimits()
    kopt = kopt or KOptParams(iteration_time_limit=limits.kopt_iter, overall_time_limit=limits.p3_overall)
    opts = opts or SolveOptions()
    p1 = procedure1(inst, limits, opts)
    logs = list(p1.logs)
    deadline = Deadline(limits.p3_overall)
    # same-day chair moves keep the rosters and the daily wait levels
    start = move_to_chairs(inst, p1.aggregate, p1.v2, other_days=False)

    union = AggregateSchedule()
    for t in inst.day_range:
        if not p1.aggregate.day_roster(t):
            continue
        limit = max(min(limits.p3_day, deadline.remaining()), 1e-3)
        part, _ = _day_subproblem(inst, t, start, "P3", p1.v2[t], opts, limit, logs)
        union = union.merged(part)
    before = union.phi3()

    trace: list[int] = []
    base = build_AF3(inst, p1.v1, p1.v2)
    base[0].objective_bound = len(inst.noncritical_patients)
    final = kopt_search(inst, union, p1.v1, p1.v2, kopt, opts, deadline, logs, trace, base)

    if final_warm_start:
        model, vm = base
        model = model.copy()
        model.warm_start = aggregate_to_assignment(vm, final, inst)
        res = _solve_logged(model, opts, limits.p3_overall, logs, "AF3")
        if res.has_solution:
            cand = assignment_to_aggregate(vm, res.assignment)
            if cand.phi3() > final.phi3():
                final = cand

    schedule = disaggregate(final, inst)
    metrics = evaluate(schedule, inst)
    if metrics.phi1 < p1.v1 or any(metrics.phi2_by_day[t] > p1.v2[t] for t in inst.day_range):
        raise LexicoError("final schedule breaks the earlier stages' levels", logs)
    return LexicoOutcome(
        v1=p1.v1,
        v2=dict(p1.v2),
        phi3=metrics.phi3,
        schedule=schedule,
        aggregate=final,
        logs=logs,
        kopt_trace=trace,
        phi3_before_kopt=before,
    )

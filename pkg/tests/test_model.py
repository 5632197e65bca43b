import random
import re

import pytest
from hypothesis import given, settings, strategies as st

from chemosched.model import (
    KOptParams,
    add_kopt_constraints,
    aggregate_to_assignment,
    assignment_to_aggregate,
    build_AF1,
    build_AF2,
    build_AF3,
    build_F1_complete,
    build_single_day,
)
from chemosched.schedule import AggregateSchedule
from chemosched.solver import SolveOptions, solve

from helpers import oracle, sample_aggregate, tiny

ORACLE = SolveOptions(backend="oracle", time_limit=60)
HIGHS = SolveOptions(backend="highs", time_limit=60)

NAME_RE = re.compile(
    r"^(x|y|zB|zS)_[A-Za-z0-9.-]+_\d+_\d+$|^W_\d+$|^(alpha|beta|gB|gS)_[A-Za-z0-9.-]+_\d+_\d+_\d+$"
)


def test_micro1_stage_optima_by_enumeration(m1):
    # (2, 0, 1) from the schedule-level enumeration of micro-1
    assert solve(build_AF1(m1)[0], ORACLE).objective == 2
    assert solve(build_AF2(m1, 2)[0], ORACLE).objective == 0
    assert solve(build_AF3(m1, 2, {1: 0})[0], ORACLE).objective == 1
    assert solve(build_F1_complete(m1)[0], ORACLE).objective == 2


def test_variable_names_follow_scheme(m1):
    for build in (lambda: build_AF1(m1), lambda: build_AF2(m1, 2), lambda: build_F1_complete(m1)):
        model, _ = build()
        assert all(NAME_RE.match(n) for n in model.var_names), model.var_names
        assert len(set(model.var_names)) == model.num_vars


def test_only_legal_indices_exist():
    inst = tiny(7)
    _, vm = build_AF1(inst)
    H, HV = inst.slots_per_day, inst.visit_slots
    for (pid, t, h) in vm.family("x"):
        p = inst.patient(pid)
        assert h + p.visit_duration - 1 <= HV
        assert inst.room_capacity(p.pathology, t) > 0
    for fam in ("y", "zB", "zS"):
        for (pid, t, h) in vm.family(fam):
            p = inst.patient(pid)
            assert h + p.infusion_duration - 1 <= H
            assert p.critical == (fam == "y")


def test_f1_infeasible_v1_floor(m1):
    model, _ = build_AF2(m1, 3)
    assert solve(model, ORACLE).status.value == "Infeasible"


@pytest.mark.parametrize("seed", [0, 4, 7, 9, 10, 12, 21, 33])
def test_complete_and_aggregate_agree(seed):
    inst = tiny(seed)
    af1 = solve(build_AF1(inst)[0], HIGHS)
    f1 = solve(build_F1_complete(inst)[0], HIGHS)
    assert af1.objective == f1.objective == oracle(seed).phi1


@pytest.mark.parametrize("seed", range(0, 40, 3))
def test_oracle_schedule_is_feasible_in_all_stage_models(seed):
    inst, opt = tiny(seed), oracle(seed)
    agg = opt.schedule.aggregate()
    for model, vm in (build_AF1(inst), build_AF2(inst, opt.phi1), build_AF3(inst, opt.phi1, opt.phi2_by_day)):
        values = aggregate_to_assignment(vm, agg, inst)
        assert model.violations(values) == []
    m2, vm2 = build_AF2(inst, opt.phi1)
    assert m2.objective_value(aggregate_to_assignment(vm2, agg, inst)) == opt.phi2
    m3, vm3 = build_AF3(inst, opt.phi1, opt.phi2_by_day)
    assert m3.objective_value(aggregate_to_assignment(vm3, agg, inst)) == opt.phi3


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 199), st.integers(0, 2**31))
def test_model_rows_match_direct_counting(seed, rs):
    """Random aggregate schedules: the model accepts exactly what slot counting accepts."""
    inst = tiny(seed)
    rng = random.Random(rs)
    agg = sample_aggregate(inst, rng)
    model, vm = build_AF1(inst)
    values = aggregate_to_assignment(vm, agg, inst)
    assert agg.violations(inst) == []
    assert model.violations(values) == []
    assert assignment_to_aggregate(vm, values) == agg


def test_overfull_bed_is_rejected_by_both_checks(m1):
    agg = AggregateSchedule({"p1": (1, 1), "p2": (1, 2)}, {"p1": (1, 3, "bed"), "p2": (1, 3, "bed")})
    model, vm = build_AF1(m1)
    assert agg.violations(m1)
    assert model.violations(aggregate_to_assignment(vm, agg, m1))


def test_single_day_forces_the_roster(m1):
    model, vm = build_single_day(m1, 1, ["p1", "p2"], "P2")
    res = solve(model, ORACLE)
    agg = assignment_to_aggregate(vm, res.assignment)
    assert set(agg.visits) == {"p1", "p2"}
    assert res.objective == 0
    model, vm = build_single_day(m1, 1, ["p1", "p2"], "P3", 0)
    assert solve(model, ORACLE).objective == 1


def test_single_day_rejects_unknown_stage(m1):
    with pytest.raises(ValueError):
        build_single_day(m1, 1, ["p1"], "P4")


def test_kopt_ball_radius_zero_keeps_only_the_incumbent():
    inst, opt = tiny(4), oracle(4)
    model, vm = build_AF3(inst, opt.phi1, opt.phi2_by_day)
    agg = opt.schedule.aggregate()
    ball = add_kopt_constraints(model, vm, agg, KOptParams(0, 0, 0, 0), inst)
    res = solve(ball, HIGHS)
    assert assignment_to_aggregate(vm, res.assignment) == agg
    wide = add_kopt_constraints(model, vm, agg, KOptParams(), inst)
    assert wide.violations(aggregate_to_assignment(vm, agg, inst)) == []
    assert model.num_constraints + 4 >= wide.num_constraints > model.num_constraints


def test_kopt_params_reject_negative_radius():
    with pytest.raises(ValueError):
        KOptParams(-1, 0, 0, 0)


def test_warm_start_assignment_sets_daily_wait_variables():
    inst, opt = tiny(3), oracle(3)
    model, vm = build_AF2(inst, opt.phi1)
    values = aggregate_to_assignment(vm, opt.schedule.aggregate(), inst)
    for (t,), vid in vm.family("W").items():
        assert values[vid] == opt.phi2_by_day[t]

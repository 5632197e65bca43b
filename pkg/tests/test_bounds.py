import pytest

from chemosched.bounds import (
    BEDS,
    CHAIRS,
    build_ub1,
    build_ub2,
    compute_empty_slot_profile,
    trivial_bound,
    ub1,
    ub2,
)
from chemosched.instance import GeneratorParams, Instance, Patient, generate, tiny_instance
from chemosched.schedule import BED, CHAIR
from chemosched.solver import SolveOptions

from helpers import enumerate_schedules, oracle, tiny


def _levels(prof, t):
    counts = list(prof.N[t])
    counts[-1] += prof.leftover[t]
    return sorted(i for i, c in enumerate(counts) for _ in range(c))


def test_micro1_bounds(m1):
    assert trivial_bound(m1).value == 1
    assert ub1(m1).value == 1
    b = ub2(m1, 2, {1: 0})
    assert (b.value, b.status, b.method) == (1, "exact", "UB2")
    assert set(b.to_dict()) == {"method", "value", "status", "runtime"}


def test_all_critical_gives_zero():
    inst = Instance(
        days=1, slots_per_day=6, visit_slots=4, pathologies=("A",), room_count=1, bed_count=2, chair_count=2,
        patients=(Patient("p1", "A", 1, 2, True), Patient("p2", "A", 1, 3, True)), mcp=[[[1]]],
    )
    assert trivial_bound(inst).value == ub1(inst).value == ub2(inst, 2, {1: 0}).value == 0


def test_ub1_capacity_full_week():
    inst = generate(GeneratorParams(seed=7, total_patients=614))
    model, _ = build_ub1(inst)
    caps = {c.rhs for c in model.constraints if c.name.startswith("capacity_")}
    assert caps == {5 * (54 - 1)}


def test_chair_groups_reduce_capacity():
    inst = Instance(
        days=1, slots_per_day=10, visit_slots=6, pathologies=("A",), room_count=2, bed_count=1, chair_count=6,
        patients=(Patient("p1", "A", 1, 4, False), Patient("p2", "A", 2, 4, True)), mcp=[[[1]], [[1]]],
    )
    model, _, _ = build_ub2(inst, 2, {1: 0})
    rhs = [c.rhs for c in model.constraints if c.name.startswith("chairs_capacity_1_")]
    assert rhs == [9, 9, 8, 8, 7, 7]
    beds = [c.rhs for c in model.constraints if c.name.startswith("beds_capacity_1_")]
    assert beds == [9]


def test_bound_model_names(m1):
    model, _, _ = build_ub2(m1, 2, {1: 0})
    prefixes = {n.split("_")[0] for n in model.var_names}
    assert prefixes <= {"lam", "muB", "muS", "rhoB", "rhoS"}
    assert {"lam", "muB", "muS"} <= prefixes


def test_short_infusions_start_contributing_late():
    # |H| = 10, |H_V| = 4, no waiting: a 3-slot infusion ends by slot 8, leaving 2 or more empty
    inst = Instance(
        days=1, slots_per_day=10, visit_slots=4, pathologies=("A",), room_count=1, bed_count=0, chair_count=1,
        patients=(Patient("p1", "A", 1, 3, False),), mcp=[[[1]]],
    )
    prof = compute_empty_slot_profile(inst, {1: 0}, CHAIRS)
    M = prof.M[(3, 1, 1)]
    assert M[0] == 0
    assert M.index(1) == 10 - (4 + 0 + 3)
    assert prof.N[1][:4] == [0, 0, 0, 1]


def test_no_long_patient_means_no_full_chair():
    inst = Instance(
        days=1, slots_per_day=10, visit_slots=4, pathologies=("A",), room_count=1, bed_count=1, chair_count=2,
        patients=(Patient("p1", "A", 1, 2, False), Patient("p2", "A", 1, 5, False)), mcp=[[[1]]],
    )
    assert compute_empty_slot_profile(inst, {1: 0}, CHAIRS).N[1][0] == 0


def test_micro1_profile_matches_exhaustive_packing(m1):
    prof = compute_empty_slot_profile(m1, {1: 0}, CHAIRS)
    assert prof.N[1] == [1, 0, 0, 0, 0, 0, 0]
    best = min(
        6 - max((a.infusion_start + m1.patient(pid).infusion_duration - 1
                 for pid, a in s if a.resource_type == CHAIR), default=0)
        for s in enumerate_schedules(m1, {1: 0})
    )
    assert best == 0


def test_profile_rejects_negative_wait(m1):
    with pytest.raises(ValueError):
        compute_empty_slot_profile(m1, {1: -1})


@pytest.mark.parametrize("seed", range(40))
def test_profile_conserves_resources(seed):
    inst = tiny(seed)
    for side, n in ((CHAIRS, inst.chair_count), (BEDS, inst.bed_count)):
        prof = compute_empty_slot_profile(inst, {t: 1 for t in inst.day_range}, side)
        for t in inst.day_range:
            assert sum(prof.N[t]) + prof.leftover[t] == n
            assert sum(prof.N[t]) <= n


def _small_seeds(count):
    out = []
    seed = 0
    while len(out) < count:
        inst = tiny_instance(seed, max_patients=3, max_slots=7, max_days=1)
        if len(inst.patients) <= 3:
            out.append(seed)
        seed += 1
    return out


@pytest.mark.parametrize("seed", _small_seeds(25))
def test_profile_levels_never_exceed_real_unused_slots(seed):
    """Every real schedule leaves at least the counted end-of-day slots empty, resource by resource."""
    inst = tiny_instance(seed, max_patients=3, max_slots=7, max_days=1)
    H = inst.slots_per_day
    for cap in (0, 2):
        caps = {1: cap}
        for side, cls, n in ((CHAIRS, CHAIR, inst.chair_count), (BEDS, BED, inst.bed_count)):
            levels = _levels(compute_empty_slot_profile(inst, caps, side), 1)
            for sched in enumerate_schedules(inst, caps):
                end = {q: 0 for q in range(1, n + 1)}
                for pid, a in sched:
                    if a.resource_type == cls:
                        finish = a.infusion_start + inst.patient(pid).infusion_duration - 1
                        end[a.resource_id] = max(end[a.resource_id], finish)
                unused = sorted(H - e for e in end.values())
                assert all(u >= lv for u, lv in zip(unused, levels))


@pytest.mark.parametrize("seed", range(0, 200, 5))
def test_bounds_are_valid_and_ordered(seed):
    inst, opt = tiny(seed), oracle(seed)
    b1 = ub1(inst, SolveOptions(time_limit=30))
    b2 = ub2(inst, opt.phi1, opt.phi2_by_day, SolveOptions(time_limit=30))
    assert opt.phi3 <= b2.value
    assert opt.phi3 <= b1.value <= len(inst.noncritical_patients)
    if b1.status == b2.status == "exact":
        assert b2.value <= b1.value


def test_ub2_infeasible_levels_raise(m1):
    with pytest.raises(ValueError, match="infeasible"):
        ub2(m1, 3, {1: 0})


def test_ub2_time_limit_reports_a_valid_bound():
    inst = generate(GeneratorParams(seed=2, total_patients=40, days=2))
    exact = ub2(inst, 20, {1: 3, 2: 3}, SolveOptions(backend="highs", time_limit=60))
    rushed = ub2(inst, 20, {1: 3, 2: 3}, SolveOptions(time_limit=1e-3))
    assert rushed.value >= exact.value
    if rushed.status == "time-limit":
        assert rushed.value <= len(inst.noncritical_patients)

import random

import pytest
from hypothesis import given, settings, strategies as st

from chemosched.disaggregate import PreconditionError, assign_beds, assign_chairs, assign_rooms, disaggregate
from chemosched.instance import Instance, Patient
from chemosched.report import evaluate, validate_schedule
from chemosched.schedule import AggregateSchedule, Appointment

from helpers import oracle, sample_aggregate, tiny


def test_micro1_assignment(m1):
    agg = AggregateSchedule({"p1": (1, 1), "p2": (1, 2)}, {"p1": (1, 2, "chair"), "p2": (1, 3, "bed")})
    out = disaggregate(agg, m1)
    assert out.appointments == {
        "p1": Appointment(1, 1, 1, 2, "chair", 1),
        "p2": Appointment(1, 2, 1, 3, "bed", 1),
    }
    assert validate_schedule(out, m1) == []


def _two_chairs():
    return Instance(
        days=1, slots_per_day=8, visit_slots=4, pathologies=("A",), room_count=2, bed_count=1, chair_count=2,
        patients=tuple(Patient(f"p{i}", "A", 1, 3, False) for i in range(1, 4)), mcp=[[[1]], [[1]]],
    )


def test_lowest_free_resource_and_release():
    inst = _two_chairs()
    # p1 and p2 overlap; p3 starts exactly when p1 ends and reuses chair 1
    agg = AggregateSchedule(
        {"p1": (1, 1), "p2": (1, 1), "p3": (1, 3)},
        {"p1": (1, 2, "chair"), "p2": (1, 3, "chair"), "p3": (1, 5, "chair")},
    )
    assert assign_rooms(agg, inst) == {"p1": 1, "p2": 2, "p3": 1}
    assert assign_chairs(agg, inst) == {"p1": 1, "p2": 2, "p3": 1}
    assert assign_beds(agg, inst) == {}


def test_overfull_slot_raises_precondition_error():
    inst = _two_chairs()
    agg = AggregateSchedule(
        {"p1": (1, 1), "p2": (1, 2), "p3": (1, 3)},
        {"p1": (1, 4, "chair"), "p2": (1, 4, "chair"), "p3": (1, 5, "chair")},
    )
    with pytest.raises(PreconditionError) as err:
        disaggregate(agg, inst)
    assert (err.value.day, err.value.slot, err.value.pool) == (1, 5, "chair")


def test_mismatched_patient_sets_raise(m1):
    with pytest.raises(PreconditionError):
        disaggregate(AggregateSchedule({"p1": (1, 1)}, {}), m1)


def test_empty_schedule(m1):
    assert len(disaggregate(AggregateSchedule(), m1)) == 0


@pytest.mark.parametrize("seed", range(0, 60, 7))
def test_oracle_schedules_survive_collapse_and_rebuild(seed):
    inst, opt = tiny(seed), oracle(seed)
    rebuilt = disaggregate(opt.schedule.aggregate(), inst)
    assert validate_schedule(rebuilt, inst) == []
    m = evaluate(rebuilt, inst)
    assert (m.phi1, m.phi2_by_day, m.phi3) == opt.as_tuple()


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 199), st.integers(0, 2**31))
def test_random_feasible_aggregates_disaggregate(seed, rs):
    inst = tiny(seed)
    agg = sample_aggregate(inst, random.Random(rs))
    out = disaggregate(agg, inst)
    assert validate_schedule(out, inst) == []
    assert out.aggregate() == agg
    m = evaluate(out, inst)
    assert (m.phi1, m.phi2_by_day, m.phi3) == (agg.phi1(), agg.phi2_by_day(inst), agg.phi3())

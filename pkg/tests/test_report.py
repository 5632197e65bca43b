import csv
import io
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from chemosched.disaggregate import disaggregate
from chemosched.report import (
    CSV_COLUMNS,
    InvalidScheduleError,
    emit,
    evaluate,
    from_json,
    simulate_waits,
    to_gantt,
    to_json,
    validate_schedule,
)
from chemosched.schedule import Appointment, CompleteSchedule

from helpers import sample_aggregate, tiny


@pytest.fixture
def m1_schedule():
    return CompleteSchedule({
        "p1": Appointment(1, 1, 1, 2, "chair", 1),
        "p2": Appointment(1, 2, 1, 3, "bed", 1),
    })


def test_metrics_of_micro1(m1, m1_schedule):
    m = evaluate(m1_schedule, m1)
    assert (m.phi1, m.phi2_by_day, m.phi3) == (2, {1: 0}, 1)
    d = m.to_dict()
    assert d["unscheduled"]["total"] == {"count": 0, "pct": 0.0}


def test_unscheduled_breakdown(m1):
    only_p1 = CompleteSchedule({"p1": Appointment(1, 1, 1, 4, "chair", 1)})
    m = evaluate(only_p1, m1)
    assert m.phi2_by_day == {1: 2}
    assert (m.unscheduled_critical, m.unscheduled_noncritical) == (1, 0)
    assert m.to_dict()["unscheduled"]["critical"] == {"count": 1, "pct": 50.0}
    assert m.unscheduled_by_pathology == {"A": 1}


def test_overlap_is_reported(m1):
    sched = CompleteSchedule({
        "p1": Appointment(1, 1, 1, 2, "bed", 1),
        "p2": Appointment(1, 2, 1, 3, "bed", 1),
    })
    bad = validate_schedule(sched, m1)
    assert bad == ["bed 1, day 1, slot 3: shared by p1, p2"]
    with pytest.raises(InvalidScheduleError):
        evaluate(sched, m1)


def test_precedence_and_window_violations(m1):
    sched = CompleteSchedule({"p2": Appointment(1, 3, 1, 3, "chair", 1)})
    bad = validate_schedule(sched, m1)
    assert any("precedence" in b for b in bad)
    assert any("critical patient" in b for b in bad)
    sched = CompleteSchedule({"p1": Appointment(1, 5, 1, 6, "chair", 2)})
    bad = validate_schedule(sched, m1)
    assert any("visit slots" in b for b in bad)
    assert any("chair 2 does not exist" in b for b in bad)


def test_simulated_waits_match_formula(m1):
    sched = CompleteSchedule({"p1": Appointment(1, 1, 1, 5, "chair", 1)})
    assert simulate_waits(sched, m1) == {"p1": 3}
    assert evaluate(sched, m1).phi2_by_day == {1: 3}


def test_json_round_trip(m1, m1_schedule):
    text = to_json(m1_schedule, evaluate(m1_schedule, m1))
    assert from_json(text) == m1_schedule
    assert json.loads(text)["metrics"]["phi3"] == 1


def test_json_rejects_duplicate_patients(m1_schedule):
    doc = m1_schedule.to_dict()
    doc["appointments"].append(dict(doc["appointments"][0]))
    with pytest.raises(ValueError, match="twice"):
        from_json(json.dumps(doc))


def test_csv_columns(m1, m1_schedule):
    rows = list(csv.reader(io.StringIO(emit(m1_schedule, None, "csv", m1))))
    assert rows[0] == CSV_COLUMNS
    assert rows[1] == ["p1", "A", "0", "1", "1", "1", "1", "2", "3", "chair", "1", "0"]
    assert rows[2] == ["p2", "A", "1", "1", "2", "2", "1", "3", "5", "bed", "1", "0"]


def test_gantt_text(m1, m1_schedule):
    assert to_gantt(m1_schedule, m1) == (
        "Day 1\n"
        "R1: p1 p2 .. ..\n"
        "S1: .. p1 p1 .. .. ..\n"
        "B1: .. .. p2 p2 p2 ..\n"
    )


def test_unknown_format(m1, m1_schedule):
    with pytest.raises(ValueError, match="unknown format"):
        emit(m1_schedule, None, "pdf", m1)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 199), st.integers(0, 2**31))
def test_timeline_waits_equal_formula(seed, rs):
    inst = tiny(seed)
    sched = disaggregate(sample_aggregate(inst, random.Random(rs)), inst)
    waits = simulate_waits(sched, inst)
    per_day = {t: 0 for t in inst.day_range}
    for pid, a in sched:
        per_day[a.day] = max(per_day[a.day], waits[pid])
    assert per_day == evaluate(sched, inst).phi2_by_day

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemosched.instance import (
    GeneratorParams,
    Instance,
    InstanceFormatError,
    Patient,
    generate,
    load,
    loads,
    micro1,
    save,
    summary,
    tiny_instance,
    validate_instance,
)


def test_micro1_validates(m1):
    assert validate_instance(m1) == []


def test_room_with_two_pathologies_is_flagged():
    inst = Instance(
        days=1, slots_per_day=6, visit_slots=4, pathologies=("A", "B"), room_count=1, bed_count=1,
        chair_count=1, patients=(), mcp=[[[1], [1]]],
    )
    bad = validate_instance(inst)
    assert len(bad) == 1
    assert "r=1" in bad[0].entity and "t=1" in bad[0].entity


def test_too_long_patient_is_unschedulable():
    m = micro1()
    inst = Instance(
        days=1, slots_per_day=6, visit_slots=4, pathologies=("A",), room_count=1, bed_count=1, chair_count=1,
        patients=(Patient("p9", "A", 2, 5, False),), mcp=m.mcp,
    )
    rules = [v.rule for v in validate_instance(inst)]
    assert rules == ["unschedulable patient"]


def test_patient_without_any_room_is_unschedulable():
    inst = Instance(
        days=1, slots_per_day=6, visit_slots=4, pathologies=("A", "B"), room_count=1, bed_count=1,
        chair_count=1, patients=(Patient("p1", "B", 1, 2, False),), mcp=[[[1], [0]]],
    )
    assert [v.rule for v in validate_instance(inst)] == ["unschedulable patient"]


def test_save_load_round_trip(tmp_path, m1):
    path = tmp_path / "m1.json"
    save(m1, path)
    assert load(path) == m1
    assert path.read_text() == m1.dumps()


def test_truncated_file_reports_byte_offset(m1):
    text = m1.dumps()[:40]
    with pytest.raises(InstanceFormatError, match="byte offset"):
        loads(text)


def test_negative_infusion_is_a_schema_violation(m1):
    doc = m1.to_dict()
    doc["patients"][1]["infusion"] = -3
    with pytest.raises(InstanceFormatError) as err:
        loads(json.dumps(doc))
    assert any(p.startswith("patients/1/infusion") for p in err.value.problems)


def test_generate_is_deterministic():
    a = generate(GeneratorParams(seed=3, total_patients=80))
    b = generate(GeneratorParams(seed=3, total_patients=80))
    assert a.dumps() == b.dumps()
    assert generate(GeneratorParams(seed=4, total_patients=80)).dumps() != a.dumps()


def test_generate_full_week_defaults():
    inst = generate(GeneratorParams(seed=7, total_patients=614, critical_fraction=0.2848))
    assert len(inst.patients) == 614
    assert (inst.room_count, inst.bed_count, inst.chair_count) == (6, 27, 26)
    assert (inst.slots_per_day, inst.visit_slots, inst.days) == (54, 36, 5)
    crit = summary(inst)["critical_pct"]
    assert abs(crit - 28.48) < 4.0
    assert validate_instance(inst) == []
    he = inst.pathologies.index("HE")
    for t in range(5):
        assert sum(inst.mcp[r][he][t] for r in range(6)) == 3
    for p in inst.patients:
        assert p.visit_duration == (2 if p.pathology == "HE" else 1)
        assert 6 <= p.infusion_duration <= 24


def test_empty_instance_validates():
    inst = generate(GeneratorParams(seed=1, total_patients=0))
    assert inst.patients == ()
    assert validate_instance(inst) == []


def test_bad_generator_params_are_rejected():
    with pytest.raises(ValueError, match="critical_fraction"):
        generate(GeneratorParams(critical_fraction=1.5))


def test_pathology_mix_chi_square():
    params = GeneratorParams(seed=11, total_patients=3000)
    inst = generate(params)
    shares = params.normalized_shares()
    observed = np.array([sum(p.pathology == k for p in inst.patients) for k in shares])
    expected = np.array([shares[k] * 3000 for k in shares])
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    # 6 degrees of freedom, 99.9% quantile is about 22.46
    assert chi2 < 22.46


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_tiny_instances_validate_and_round_trip(seed):
    inst = tiny_instance(seed, max_patients=8)
    # a pathology may end up without any room; such patients are flagged, nothing else
    assert {v.rule for v in validate_instance(inst)} <= {"unschedulable patient"}
    assert loads(inst.dumps()) == inst
    assert len(inst.patients) <= 8 and inst.room_count <= 2 and inst.slots_per_day <= 12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 60))
def test_generated_instances_validate(seed, n):
    inst = generate(GeneratorParams(seed=seed, total_patients=n))
    assert validate_instance(inst) == []

"""Metrics, schedule validation by timeline simulation, and JSON / CSV / text Gantt output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any

from .instance import Instance
from .schedule import BED, CHAIR, Appointment, CompleteSchedule

FORMATS = ("json", "csv", "gantt-text")
CSV_COLUMNS = [
    "patient_id", "pathology", "critical", "day", "visit_start", "visit_end", "room",
    "infusion_start", "infusion_end", "resource_type", "resource_id", "wait_slots",
]


class InvalidScheduleError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("schedule is infeasible: " + "; ".join(violations[:5]))
        self.violations = violations


@dataclass
class MetricsRecord:
    phi1: int
    phi2_by_day: dict[int, int]
    phi3: int
    total_patients: int
    unscheduled_by_pathology: dict[str, int] = field(default_factory=dict)
    unscheduled_critical: int = 0
    unscheduled_noncritical: int = 0

    @property
    def phi2_total(self) -> int:
        return sum(self.phi2_by_day.values())

    @property
    def unscheduled_total(self) -> int:
        return self.total_patients - self.phi1

    def _pct(self, count: int) -> float:
        return round(100.0 * count / self.total_patients, 2) if self.total_patients else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "phi1": self.phi1,
            "phi2_total": self.phi2_total,
            "phi2_by_day": {str(t): w for t, w in sorted(self.phi2_by_day.items())},
            "phi3": self.phi3,
            "patients": self.total_patients,
            "unscheduled": {
                "total": {"count": self.unscheduled_total, "pct": self._pct(self.unscheduled_total)},
                "critical": {"count": self.unscheduled_critical, "pct": self._pct(self.unscheduled_critical)},
                "noncritical": {
                    "count": self.unscheduled_noncritical, "pct": self._pct(self.unscheduled_noncritical)
                },
                "by_pathology": {
                    k: {"count": c, "pct": self._pct(c)} for k, c in self.unscheduled_by_pathology.items()
                },
            },
        }


def wait_of(a: Appointment, inst: Instance, pid: str) -> int:
    return a.infusion_start - (a.visit_start + inst.patient(pid).visit_duration)


def validate_schedule(schedule: CompleteSchedule, inst: Instance) -> list[str]:
    """Every broken rule of the complete formulation; empty means feasible.

    Windows and resource eligibility are checked per appointment; exclusivity of
    rooms, chairs and beds by replaying each day slot by slot.
    """
    out: list[str] = []
    H, HV = inst.slots_per_day, inst.visit_slots
    occupancy: dict[tuple[int, str, int, int], list[str]] = {}
    for pid, a in schedule:
        if pid not in inst.patient_index:
            out.append(f"{pid}: unknown patient")
            continue
        p = inst.patient(pid)
        if a.day not in inst.day_range:
            out.append(f"{pid}: day {a.day} outside 1..{inst.days}")
            continue
        if not 1 <= a.room <= inst.room_count:
            out.append(f"{pid}: room {a.room} does not exist")
        elif not inst.w(a.room, p.pathology, a.day):
            out.append(f"{pid}: room {a.room} is not devoted to {p.pathology} on day {a.day}")
        if a.visit_start < 1 or a.visit_start + p.visit_duration - 1 > HV:
            out.append(f"{pid}: visit slots {a.visit_start}..{a.visit_start + p.visit_duration - 1} leave 1..{HV}")
        if a.infusion_start < a.visit_start + p.visit_duration:
            out.append(
                f"{pid}: precedence, infusion starts at {a.infusion_start} before visit ends "
                f"(slot {a.visit_start + p.visit_duration - 1})"
            )
        if a.infusion_start < 1 or a.infusion_start + p.infusion_duration - 1 > H:
            out.append(f"{pid}: infusion slots leave 1..{H}")
        if a.resource_type not in (BED, CHAIR):
            out.append(f"{pid}: unknown resource type {a.resource_type!r}")
            continue
        if p.critical and a.resource_type != BED:
            out.append(f"{pid}: critical patient must be infused in a bed")
        pool = inst.bed_count if a.resource_type == BED else inst.chair_count
        if not 1 <= a.resource_id <= pool:
            out.append(f"{pid}: {a.resource_type} {a.resource_id} does not exist")
        for h in range(a.visit_start, a.visit_start + p.visit_duration):
            occupancy.setdefault((a.day, "room", a.room, h), []).append(pid)
        for h in range(a.infusion_start, a.infusion_start + p.infusion_duration):
            occupancy.setdefault((a.day, a.resource_type, a.resource_id, h), []).append(pid)
    for (t, kind, rid, h), who in sorted(occupancy.items()):
        if len(who) > 1:
            out.append(f"{kind} {rid}, day {t}, slot {h}: shared by {', '.join(who)}")
    return out


def simulate_waits(schedule: CompleteSchedule, inst: Instance) -> dict[str, int]:
    """Waiting slots per patient, counted by walking the day: after the visit, before the infusion."""
    waits = {}
    for pid, a in schedule:
        p = inst.patient(pid)
        visit_end = a.visit_start + p.visit_duration - 1
        count = 0
        for h in range(1, inst.slots_per_day + 1):
            if visit_end < h < a.infusion_start:
                count += 1
        waits[pid] = count
    return waits


def evaluate(schedule: CompleteSchedule, inst: Instance, check: bool = True) -> MetricsRecord:
    if check:
        bad = validate_schedule(schedule, inst)
        if bad:
            raise InvalidScheduleError(bad)
    phi2 = {t: 0 for t in inst.day_range}
    phi3 = 0
    for pid, a in schedule:
        phi2[a.day] = max(phi2[a.day], wait_of(a, inst, pid))
        phi3 += a.resource_type == CHAIR
    treated = set(schedule.appointments)
    by_k = {k: 0 for k in inst.pathologies}
    crit = nc = 0
    for p in inst.patients:
        if p.id in treated:
            continue
        by_k[p.pathology] += 1
        if p.critical:
            crit += 1
        else:
            nc += 1
    return MetricsRecord(len(treated), phi2, phi3, len(inst.patients), by_k, crit, nc)


# -- output ----------------------------------------------------------------------


def to_json(schedule: CompleteSchedule, metrics: MetricsRecord | None = None) -> str:
    doc: dict[str, Any] = dict(schedule.to_dict())
    if metrics is not None:
        doc["metrics"] = metrics.to_dict()
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> CompleteSchedule:
    doc = json.loads(text)
    rows = doc.get("appointments")
    if not isinstance(rows, list):
        raise ValueError("schedule document needs an 'appointments' list")
    seen = set()
    for row in rows:
        pid = str(row.get("patient"))
        if pid in seen:
            raise ValueError(f"patient {pid} appears twice")
        seen.add(pid)
    return CompleteSchedule.from_dict(doc)


def to_csv(schedule: CompleteSchedule, inst: Instance) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pid, a in schedule:
        p = inst.patient(pid)
        writer.writerow([
            pid, p.pathology, int(p.critical), a.day, a.visit_start, a.visit_start + p.visit_duration - 1,
            a.room, a.infusion_start, a.infusion_start + p.infusion_duration - 1,
            a.resource_type, a.resource_id, wait_of(a, inst, pid),
        ])
    return buf.getvalue()


def to_gantt(schedule: CompleteSchedule, inst: Instance) -> str:
    """Per day, one strip per used room (R), chair (S) and bed (B); '..' marks a free slot."""
    width = max([2] + [len(pid) for pid in schedule.appointments])
    empty = "." * width
    lines = []
    for t in inst.day_range:
        lines.append(f"Day {t}")
        strips: dict[tuple[int, int], list[str]] = {}
        for pid, a in schedule:
            if a.day != t:
                continue
            p = inst.patient(pid)
            room = strips.setdefault((0, a.room), [empty] * inst.visit_slots)
            for h in range(a.visit_start, a.visit_start + p.visit_duration):
                room[h - 1] = pid.ljust(width)
            kind = 1 if a.resource_type == CHAIR else 2
            res = strips.setdefault((kind, a.resource_id), [empty] * inst.slots_per_day)
            for h in range(a.infusion_start, a.infusion_start + p.infusion_duration):
                res[h - 1] = pid.ljust(width)
        for (kind, rid), cells in sorted(strips.items()):
            lines.append(f"{'RSB'[kind]}{rid}: " + " ".join(cells))
    return "\n".join(lines) + "\n"


def emit(schedule: CompleteSchedule, metrics: MetricsRecord | None, fmt: str, inst: Instance | None = None) -> str:
    if fmt == "json":
        return to_json(schedule, metrics)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    if inst is None:
        raise ValueError(f"format {fmt} needs the instance")
    return to_csv(schedule, inst) if fmt == "csv" else to_gantt(schedule, inst)

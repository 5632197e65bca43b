"""Schedule representations shared by the model, disaggregation and reporting layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from .instance import Instance

BED = "bed"
CHAIR = "chair"


@dataclass
class AggregateSchedule:
    """Day and start slots per treated patient; rooms, chairs and beds stay anonymous.

    ``visits[pid] = (day, visit_start)`` and
    ``infusions[pid] = (day, infusion_start, BED | CHAIR)``.
    """

    visits: dict[str, tuple[int, int]] = field(default_factory=dict)
    infusions: dict[str, tuple[int, int, str]] = field(default_factory=dict)

    @property
    def treated(self) -> list[str]:
        return sorted(self.visits, key=_natural_key)

    def day_roster(self, t: int) -> set[str]:
        return {pid for pid, (d, _) in self.visits.items() if d == t}

    def wait(self, inst: Instance, pid: str) -> int:
        _, hv = self.visits[pid]
        _, hi, _ = self.infusions[pid]
        return hi - (hv + inst.patient(pid).visit_duration)

    def phi1(self) -> int:
        return len(self.visits)

    def phi2_by_day(self, inst: Instance) -> dict[int, int]:
        out = {t: 0 for t in inst.day_range}
        for pid, (t, _) in self.visits.items():
            out[t] = max(out[t], self.wait(inst, pid))
        return out

    def phi3(self) -> int:
        return sum(1 for _, _, c in self.infusions.values() if c == CHAIR)

    def restricted_to_day(self, t: int) -> "AggregateSchedule":
        keep = self.day_roster(t)
        return AggregateSchedule(
            {p: self.visits[p] for p in keep}, {p: self.infusions[p] for p in keep if p in self.infusions}
        )

    def merged(self, other: "AggregateSchedule") -> "AggregateSchedule":
        return AggregateSchedule({**self.visits, **other.visits}, {**self.infusions, **other.infusions})

    def violations(self, inst: Instance) -> list[str]:
        """Aggregate feasibility: windows, precedence, and per-slot capacity counts."""
        out: list[str] = []
        H, HV = inst.slots_per_day, inst.visit_slots
        if set(self.visits) != set(self.infusions):
            out.append("visit and infusion patient sets differ")
        for pid, (t, hv) in self.visits.items():
            if pid not in inst.patient_index:
                out.append(f"unknown patient {pid}")
                continue
            p = inst.patient(pid)
            if inst.room_capacity(p.pathology, t) == 0:
                out.append(f"{pid}: no room for {p.pathology} on day {t}")
            if hv < 1 or hv + p.visit_duration - 1 > HV:
                out.append(f"{pid}: visit window")
            if pid not in self.infusions:
                continue
            ti, hi, cls = self.infusions[pid]
            if ti != t:
                out.append(f"{pid}: infusion day differs from visit day")
            if hi < hv + p.visit_duration:
                out.append(f"{pid}: infusion before visit end")
            if hi + p.infusion_duration - 1 > H:
                out.append(f"{pid}: infusion window")
            if p.critical and cls != BED:
                out.append(f"{pid}: critical patient not in a bed")
        for t in inst.day_range:
            for h in range(1, H + 1):
                visits: dict[str, int] = {}
                chairs = beds = 0
                for pid, (d, hv) in self.visits.items():
                    if d != t or pid not in inst.patient_index:
                        continue
                    p = inst.patient(pid)
                    if hv <= h < hv + p.visit_duration:
                        visits[p.pathology] = visits.get(p.pathology, 0) + 1
                    if pid in self.infusions:
                        _, hi, cls = self.infusions[pid]
                        if hi <= h < hi + p.infusion_duration:
                            if cls == CHAIR:
                                chairs += 1
                            else:
                                beds += 1
                for k, n in visits.items():
                    if n > inst.room_capacity(k, t):
                        out.append(f"day {t} slot {h}: {n} visits of {k} exceed rooms")
                if chairs > inst.chair_count:
                    out.append(f"day {t} slot {h}: {chairs} chair infusions exceed {inst.chair_count}")
                if beds > inst.bed_count:
                    out.append(f"day {t} slot {h}: {beds} bed infusions exceed {inst.bed_count}")
        return out


@dataclass(frozen=True)
class Appointment:
    day: int
    visit_start: int
    room: int
    infusion_start: int
    resource_type: str
    resource_id: int


@dataclass
class CompleteSchedule:
    """Per treated patient: day, visit slot and room, infusion slot and concrete bed or chair."""

    appointments: dict[str, Appointment] = field(default_factory=dict)

    def __iter__(self) -> Iterator[tuple[str, Appointment]]:
        for pid in sorted(self.appointments, key=_natural_key):
            yield pid, self.appointments[pid]

    def __len__(self) -> int:
        return len(self.appointments)

    def aggregate(self) -> AggregateSchedule:
        """Forget resource identities (the collapse x = sum over rooms of alpha, etc.)."""
        agg = AggregateSchedule()
        for pid, a in self.appointments.items():
            agg.visits[pid] = (a.day, a.visit_start)
            agg.infusions[pid] = (a.day, a.infusion_start, a.resource_type)
        return agg

    def to_dict(self) -> dict[str, Any]:
        return {
            "appointments": [
                {
                    "patient": pid,
                    "day": a.day,
                    "visit_start": a.visit_start,
                    "room": a.room,
                    "infusion_start": a.infusion_start,
                    "resource_type": a.resource_type,
                    "resource_id": a.resource_id,
                }
                for pid, a in self
            ]
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "CompleteSchedule":
        out = cls()
        for row in doc.get("appointments", []):
            out.appointments[str(row["patient"])] = Appointment(
                day=int(row["day"]),
                visit_start=int(row["visit_start"]),
                room=int(row["room"]),
                infusion_start=int(row["infusion_start"]),
                resource_type=str(row["resource_type"]),
                resource_id=int(row["resource_id"]),
            )
        return out


def _natural_key(pid: str) -> tuple:
    head = pid.rstrip("0123456789")
    tail = pid[len(head):]
    return (head, int(tail) if tail else -1, pid)

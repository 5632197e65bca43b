"""Give every treated patient of an aggregate schedule a concrete room, bed or chair.

Each resource carries a busy label. Days are scanned slot by slot: first the
resources whose occupant finishes at this slot are released, then every
patient starting at this slot takes the lowest-numbered free resource of its
pool. Feasible aggregate counts guarantee a free resource always exists.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .instance import Instance
from .schedule import BED, CHAIR, AggregateSchedule, Appointment, CompleteSchedule

__all__ = [
    "PreconditionError",
    "assign_rooms",
    "assign_chairs",
    "assign_beds",
    "disaggregate",
    "AggregateSchedule",
    "CompleteSchedule",
]


class PreconditionError(ValueError):
    """The aggregate schedule breaks a counting constraint, so no resource is free."""

    def __init__(self, message: str, day: int, slot: int, pool: str):
        super().__init__(message)
        self.day = day
        self.slot = slot
        self.pool = pool


def _label_sweep(
    inst: Instance,
    jobs: Sequence[tuple[str, int, int, int]],
    pool_of: Callable[[str, int], Sequence[int]],
    horizon: int,
    pool_name: Callable[[str], str],
) -> dict[str, int]:
    """jobs: (pid, day, start, duration) in patient order; returns pid -> resource id."""
    assigned: dict[str, int] = {}
    by_day: dict[int, list[tuple[str, int, int]]] = {}
    for pid, t, start, dur in jobs:
        by_day.setdefault(t, []).append((pid, start, dur))
    for t in sorted(by_day):
        day_jobs = by_day[t]
        busy: set[int] = set()
        for h in range(1, horizon + 1):
            for pid, start, dur in day_jobs:
                if start + dur == h and pid in assigned:
                    busy.discard(assigned[pid])
            for pid, start, _ in day_jobs:
                if start != h:
                    continue
                free = [r for r in pool_of(pid, t) if r not in busy]
                if not free:
                    raise PreconditionError(
                        f"day {t} slot {h}: no free {pool_name(pid)} for {pid}", t, h, pool_name(pid)
                    )
                assigned[pid] = free[0]
                busy.add(free[0])
        for pid, start, _ in day_jobs:
            if pid not in assigned:
                raise PreconditionError(
                    f"day {t}: {pid} starts at slot {start}, outside 1..{horizon}", t, start, pool_name(pid)
                )
    return assigned


def _ordered(inst: Instance, pids) -> list[str]:
    index = inst.patient_index
    return sorted(pids, key=lambda pid: index[pid])


def assign_rooms(agg: AggregateSchedule, inst: Instance) -> dict[str, int]:
    jobs = []
    for pid in _ordered(inst, agg.visits):
        t, hv = agg.visits[pid]
        jobs.append((pid, t, hv, inst.patient(pid).visit_duration))
    return _label_sweep(
        inst,
        jobs,
        lambda pid, t: inst.rooms_for(inst.patient(pid).pathology, t),
        inst.visit_slots,
        lambda pid: f"room for {inst.patient(pid).pathology}",
    )


def _infusion_jobs(agg: AggregateSchedule, inst: Instance, cls: str) -> list[tuple[str, int, int, int]]:
    jobs = []
    for pid in _ordered(inst, agg.infusions):
        t, hi, c = agg.infusions[pid]
        if c == cls:
            jobs.append((pid, t, hi, inst.patient(pid).infusion_duration))
    return jobs


def assign_chairs(agg: AggregateSchedule, inst: Instance) -> dict[str, int]:
    chairs = list(range(1, inst.chair_count + 1))
    for pid, (_, _, c) in agg.infusions.items():
        if c == CHAIR and inst.patient(pid).critical:
            raise PreconditionError(f"critical patient {pid} on a chair", agg.infusions[pid][0], 0, "chair")
    return _label_sweep(
        inst, _infusion_jobs(agg, inst, CHAIR), lambda pid, t: chairs, inst.slots_per_day, lambda pid: "chair"
    )


def assign_beds(agg: AggregateSchedule, inst: Instance) -> dict[str, int]:
    beds = list(range(1, inst.bed_count + 1))
    return _label_sweep(
        inst, _infusion_jobs(agg, inst, BED), lambda pid, t: beds, inst.slots_per_day, lambda pid: "bed"
    )


def disaggregate(agg: AggregateSchedule, inst: Instance) -> CompleteSchedule:
    if set(agg.visits) != set(agg.infusions):
        raise PreconditionError("visits and infusions cover different patients", 0, 0, "-")
    rooms = assign_rooms(agg, inst)
    chairs = assign_chairs(agg, inst)
    beds = assign_beds(agg, inst)
    out = CompleteSchedule()
    for pid in _ordered(inst, agg.visits):
        t, hv = agg.visits[pid]
        _, hi, cls = agg.infusions[pid]
        res = chairs[pid] if cls == CHAIR else beds[pid]
        out.appointments[pid] = Appointment(t, hv, rooms[pid], hi, cls, res)
    return out

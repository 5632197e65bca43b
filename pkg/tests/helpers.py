"""Shared test utilities: a cached oracle over the tiny suite, a random sampler of feasible
aggregate schedules, and a plain enumerator of complete schedules for very small cases."""

from __future__ import annotations

import random
from functools import lru_cache

from chemosched.instance import Instance, tiny_instance
from chemosched.schedule import BED, CHAIR, AggregateSchedule, Appointment, CompleteSchedule
from chemosched.solver import brute_force_lexico

TINY_SEEDS = range(200)
TINY_MAX_PATIENTS = 8


@lru_cache(maxsize=None)
def tiny(seed: int) -> Instance:
    return tiny_instance(seed, max_patients=TINY_MAX_PATIENTS)


@lru_cache(maxsize=None)
def oracle(seed: int):
    return brute_force_lexico(tiny(seed))


def sample_aggregate(inst: Instance, rng: random.Random, p_try: float = 0.85) -> AggregateSchedule:
    """A random aggregate schedule that respects every counting constraint.

    Patients are visited in random order; each one is placed at a uniformly
    chosen start combination that keeps the per-slot room, bed and chair counts
    within capacity, or left out.
    """
    H, HV = inst.slots_per_day, inst.visit_slots
    room_use = {}
    res_use = {}
    agg = AggregateSchedule()
    order = list(inst.patients)
    rng.shuffle(order)
    for p in order:
        if rng.random() > p_try:
            continue
        v, f = p.visit_duration, p.infusion_duration
        cands = []
        for t in inst.treatable_days(p):
            cap_r = inst.room_capacity(p.pathology, t)
            for hv in range(1, HV - v + 2):
                if any(room_use.get((t, p.pathology, h), 0) >= cap_r for h in range(hv, hv + v)):
                    continue
                for hi in range(hv + v, H - f + 2):
                    for cls, cap in ((BED, inst.bed_count), (CHAIR, inst.chair_count)):
                        if cls == CHAIR and p.critical:
                            continue
                        if all(res_use.get((t, cls, h), 0) < cap for h in range(hi, hi + f)):
                            cands.append((t, hv, hi, cls))
        if not cands:
            continue
        t, hv, hi, cls = rng.choice(cands)
        for h in range(hv, hv + v):
            room_use[(t, p.pathology, h)] = room_use.get((t, p.pathology, h), 0) + 1
        for h in range(hi, hi + f):
            res_use[(t, cls, h)] = res_use.get((t, cls, h), 0) + 1
        agg.visits[p.id] = (t, hv)
        agg.infusions[p.id] = (t, hi, cls)
    return agg


def enumerate_schedules(inst: Instance, caps: dict[int, int] | None = None):
    """Every complete schedule (including partial treatment) with waits within ``caps``.

    Exponential; only for instances with a handful of patients and slots.
    """
    H, HV = inst.slots_per_day, inst.visit_slots
    patients = list(inst.patients)
    busy: set[tuple] = set()
    chosen: dict[str, Appointment] = {}

    def options(p):
        v, f = p.visit_duration, p.infusion_duration
        for t in inst.treatable_days(p):
            cap = H if caps is None else caps.get(t, 0)
            for r in inst.rooms_for(p.pathology, t):
                for hv in range(1, HV - v + 2):
                    vkeys = [(t, "room", r, h) for h in range(hv, hv + v)]
                    if any(k in busy for k in vkeys):
                        continue
                    for hi in range(hv + v, min(H - f + 1, hv + v + cap) + 1):
                        kinds = [(BED, inst.bed_count)] + ([] if p.critical else [(CHAIR, inst.chair_count)])
                        for cls, n in kinds:
                            for q in range(1, n + 1):
                                ikeys = [(t, cls, q, h) for h in range(hi, hi + f)]
                                if any(k in busy for k in ikeys):
                                    continue
                                yield Appointment(t, hv, r, hi, cls, q), vkeys + ikeys

    def rec(i):
        if i == len(patients):
            yield CompleteSchedule(dict(chosen))
            return
        yield from rec(i + 1)
        p = patients[i]
        for appt, keys in list(options(p)):
            busy.update(keys)
            chosen[p.id] = appt
            yield from rec(i + 1)
            del chosen[p.id]
            busy.difference_update(keys)

    yield from rec(0)

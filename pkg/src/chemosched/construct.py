"""Constructive list scheduling on the aggregate capacities.

Used to seed the solver stages with a full incumbent: time-indexed models of a
whole week are large enough that a general solver may spend its entire budget
before finding a good first solution on its own.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .instance import Instance, Patient
from .schedule import BED, CHAIR, AggregateSchedule


def placeable_alone(inst: Instance, p: Patient) -> bool:
    """Whether ``p`` could be treated in an otherwise empty week."""
    if p.visit_duration > inst.visit_slots or p.visit_duration + p.infusion_duration > inst.slots_per_day:
        return False
    if inst.bed_count == 0 and (p.critical or inst.chair_count == 0):
        return False
    return bool(inst.treatable_days(p))


def treatable_upper_bound(inst: Instance) -> int:
    """Patients that fit an empty week; no schedule treats more."""
    return sum(placeable_alone(inst, p) for p in inst.patients)


class _Usage:
    """Per-slot occupancy of rooms (by pathology), beds and chairs."""

    def __init__(self, inst: Instance):
        self.inst = inst
        H, D = inst.slots_per_day, inst.days
        self.rooms = np.zeros((D + 1, len(inst.pathologies), H + 2), dtype=np.int32)
        self.room_cap = np.zeros((D + 1, len(inst.pathologies)), dtype=np.int32)
        for t in inst.day_range:
            for k, name in enumerate(inst.pathologies):
                self.room_cap[t, k] = inst.room_capacity(name, t)
        self.pools = {BED: np.zeros((D + 1, H + 2), dtype=np.int32), CHAIR: np.zeros((D + 1, H + 2), dtype=np.int32)}
        self.pool_cap = {BED: inst.bed_count, CHAIR: inst.chair_count}

    def place(self, p: Patient, t: int, hv: int, hi: int, cls: str, sign: int = 1) -> None:
        k = self.inst.pathology_index[p.pathology]
        self.rooms[t, k, hv:hv + p.visit_duration] += sign
        self.pools[cls][t, hi:hi + p.infusion_duration] += sign

    def load(self, t: int) -> int:
        return int(self.pools[BED][t].sum() + self.pools[CHAIR][t].sum())

    def first_fit(self, p: Patient, t: int, cap: int) -> tuple[int, int, str] | None:
        """Earliest visit, then the smallest wait, then chair before bed for non-critical patients."""
        inst = self.inst
        H, HV = inst.slots_per_day, inst.visit_slots
        v, f = p.visit_duration, p.infusion_duration
        k = inst.pathology_index[p.pathology]
        room_free = self.rooms[t, k] < self.room_cap[t, k]
        classes = (BED,) if p.critical else (CHAIR, BED)
        pool_free = {c: self.pools[c][t] < self.pool_cap[c] for c in classes}
        for hv in range(1, HV - v + 2):
            if not room_free[hv:hv + v].all():
                continue
            for hi in range(hv + v, min(H - f + 1, hv + v + cap) + 1):
                for c in classes:
                    if pool_free[c][hi:hi + f].all():
                        return hv, hi, c
        return None


def greedy_aggregate(
    inst: Instance,
    caps: Mapping[int, int] | int | None = None,
    order: Sequence[Patient] | None = None,
) -> AggregateSchedule:
    """Place patients one by one at their first fitting start.

    ``caps`` limits the wait on each day (an int applies to every day). The
    default order puts critical patients first, then longer treatments first.
    Each patient goes to the least loaded of its days that can take it.
    """
    if caps is None:
        caps = inst.slots_per_day
    if isinstance(caps, int):
        caps = {t: caps for t in inst.day_range}
    if order is None:
        order = sorted(
            inst.patients, key=lambda p: (not p.critical, -(p.visit_duration + p.infusion_duration), p.id)
        )
    use = _Usage(inst)
    agg = AggregateSchedule()
    for p in order:
        if not placeable_alone(inst, p):
            continue
        for t in sorted(inst.treatable_days(p), key=lambda d: (use.load(d), d)):
            spot = use.first_fit(p, t, caps.get(t, 0))
            if spot is None:
                continue
            hv, hi, cls = spot
            use.place(p, t, hv, hi, cls)
            agg.visits[p.id] = (t, hv)
            agg.infusions[p.id] = (t, hi, cls)
            break
    return agg


def best_greedy(
    inst: Instance,
    caps: Mapping[int, int] | int | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> AggregateSchedule:
    """The default order plus a few shuffled ones; best by (treated, -total wait, chairs)."""
    rng = np.random.default_rng(seed)
    best = greedy_aggregate(inst, caps)

    def key(a: AggregateSchedule):
        return a.phi1(), -sum(a.phi2_by_day(inst).values()), a.phi3()

    for _ in range(restarts):
        if best.phi1() == treatable_upper_bound(inst):
            break
        order = list(inst.patients)
        rng.shuffle(order)
        order.sort(key=lambda p: not p.critical)
        cand = greedy_aggregate(inst, caps, order)
        if key(cand) > key(best):
            best = cand
    return best


def tighten_wait_caps(
    inst: Instance, target: int, restarts: int = 8, seed: int = 0
) -> AggregateSchedule | None:
    """A greedy schedule treating ``target`` patients with small daily wait caps.

    Finds the smallest uniform cap that still reaches ``target``, then lowers
    each day's cap in turn while the target stays reachable. Returns None when
    even unlimited waits fall short.
    """
    H = inst.slots_per_day
    found: dict[int, AggregateSchedule] = {}

    def attempt(caps: Mapping[int, int] | int) -> AggregateSchedule | None:
        a = best_greedy(inst, caps, restarts, seed)
        return a if a.phi1() >= target else None

    lo, hi = 0, H
    if attempt(hi) is None:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        a = attempt(mid)
        if a is None:
            lo = mid + 1
        else:
            found[mid] = a
            hi = mid
    best = found.get(lo) or attempt(lo)
    caps = {t: lo for t in inst.day_range}
    for t in inst.day_range:
        while caps[t] > 0:
            trial = {**caps, t: caps[t] - 1}
            a = attempt(trial)
            if a is None:
                break
            caps, best = trial, a
    return best


def _usage_of(inst: Instance, agg: AggregateSchedule) -> _Usage:
    use = _Usage(inst)
    for pid, (t, hv) in agg.visits.items():
        _, hi, cls = agg.infusions[pid]
        use.place(inst.patient(pid), t, hv, hi, cls)
    return use


def move_to_chairs(
    inst: Instance,
    agg: AggregateSchedule,
    caps: Mapping[int, int],
    other_days: bool = True,
    max_moves: int | None = None,
) -> AggregateSchedule:
    """Re-place non-critical bed patients on chairs wherever a chair start fits.

    With ``other_days`` a patient may move to another day. Any new start keeps
    the wait within that day's cap, so the treated count never drops and no
    day's maximum wait exceeds its cap. ``max_moves`` caps the number of
    patients moved.
    """
    out = AggregateSchedule(dict(agg.visits), dict(agg.infusions))
    if inst.chair_count == 0:
        return out
    use = _usage_of(inst, out)
    chairs_only = {BED: 0, CHAIR: inst.chair_count}
    moves = 0
    moved = True
    while moved:
        moved = False
        for pid in sorted(out.visits):
            if max_moves is not None and moves >= max_moves:
                return out
            p = inst.patient(pid)
            t0, hv0 = out.visits[pid]
            _, hi0, cls0 = out.infusions[pid]
            if p.critical or cls0 == CHAIR:
                continue
            use.place(p, t0, hv0, hi0, cls0, -1)
            use.pool_cap, saved = chairs_only, use.pool_cap
            spot = None
            for t in [t0] + [d for d in inst.treatable_days(p) if d != t0 and other_days]:
                found = use.first_fit(p, t, caps.get(t, 0))
                if found is not None:
                    spot = (t, *found)
                    break
            use.pool_cap = saved
            if spot is None:
                use.place(p, t0, hv0, hi0, cls0)
                continue
            t, hv, hi, cls = spot
            use.place(p, t, hv, hi, cls)
            out.visits[pid] = (t, hv)
            out.infusions[pid] = (t, hi, cls)
            moves += 1
            moved = True
    return out


def constructive_start(inst: Instance, restarts: int = 8, seed: int = 0) -> AggregateSchedule:
    """Most patients first, then small daily waits, then as many chairs as simple moves allow."""
    agg = best_greedy(inst, None, restarts, seed)
    tight = tighten_wait_caps(inst, agg.phi1(), restarts, seed)
    if tight is not None:
        agg = tight
    return move_to_chairs(inst, agg, agg.phi2_by_day(inst))

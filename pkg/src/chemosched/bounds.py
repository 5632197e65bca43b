"""Upper bounds on the number of chair infusions: multiple knapsack (UB1) and the per-day
bed/chair assignment with start-of-day and end-of-day capacity losses (UB2)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

from .instance import Instance, Patient
from .model import MilpModel, VarMap
from .solver import SolveOptions, Status, solve

CHAIRS = "chairs"
BEDS = "beds"


@dataclass
class BoundResult:
    value: int
    method: str  # UB1 | UB2 | trivial
    status: str  # exact | time-limit
    runtime: float = 0.0
    solver_status: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"method": self.method, "value": self.value, "status": self.status, "runtime": round(self.runtime, 4)}


@dataclass
class EmptySlotProfile:
    """How many chairs (or beds) stay empty during the last ``i`` slots of each day.

    ``N[t][i]`` for ``i = 0..|H|``. ``L[(l, r, t)]`` counts patients with infusion
    length ``l`` that room ``r`` can visit on day ``t``; ``M[(l, r, t)][i]`` is
    how many of them can end their day leaving exactly ``i`` slots unused.
    ``leftover[t]`` resources were not matched to any patient; no patient can end
    its infusion on them, so they stay empty all day.
    """

    side: str
    N: dict[int, list[int]]
    L: dict[tuple[int, int, int], int] = field(default_factory=dict)
    M: dict[tuple[int, int, int], list[int]] = field(default_factory=dict)
    leftover: dict[int, int] = field(default_factory=dict)


def trivial_bound(inst: Instance) -> BoundResult:
    return BoundResult(len(inst.noncritical_patients), "trivial", "exact")


def _min_visit(patients: list[Patient]) -> int:
    return min((p.visit_duration for p in patients), default=0)


def _finish(method: str, model: MilpModel, opts: SolveOptions, t0: float, cap: int) -> BoundResult:
    res = solve(model, opts)
    runtime = time.perf_counter() - t0
    if res.status == Status.OPTIMAL:
        return BoundResult(res.objective, method, "exact", runtime, str(res.status))
    if res.status == Status.INFEASIBLE:
        raise ValueError(f"{method}: model is infeasible (inconsistent treated count or wait levels)")
    if res.status == Status.BACKEND_ERROR:
        raise RuntimeError(f"{method}: backend failure: {res.message}")
    # only the proven bound of a maximization is a valid upper bound
    value = cap if res.best_bound is None else min(cap, res.best_bound)
    return BoundResult(value, method, "time-limit", runtime, str(res.status))


def build_ub1(inst: Instance) -> tuple[MilpModel, VarMap]:
    model = MilpModel("UB1")
    vm = VarMap()
    nc = inst.noncritical_patients
    cap = inst.days * (inst.slots_per_day - _min_visit(nc))
    chairs = range(1, inst.chair_count + 1)
    for p in nc:
        for s in chairs:
            vm.add("mu", (p.id, s), model.add_var(f"mu_{p.id}_{s}"))
    for p in nc:
        ids = [vm.get("mu", (p.id, s)) for s in chairs]
        if ids:
            model.add_constraint((ids, [1] * len(ids)), "<=", 1, f"assign_{p.id}")
            model.cliques.append(ids)
    weight = {p.id: p.infusion_duration for p in nc}
    for s in chairs:
        ids = [vm.get("mu", (p.id, s)) for p in nc]
        if ids:
            model.add_constraint((ids, [weight[p.id] for p in nc]), "<=", cap, f"capacity_{s}")
    all_ids = [vid for (pid, _), vid in vm.family("mu").items()]
    all_w = [weight[pid] for (pid, _) in vm.family("mu")]
    if all_ids:
        model.knapsacks.append((all_ids, all_w, cap * inst.chair_count))
    model.set_objective("max", {vid: 1 for vid in all_ids})
    return model, vm


def ub1(inst: Instance, opts: SolveOptions | None = None) -> BoundResult:
    """Multiple knapsack: one knapsack per chair holding the whole week's usable chair slots."""
    t0 = time.perf_counter()
    model, _ = build_ub1(inst)
    return _finish("UB1", model, opts or SolveOptions(), t0, len(inst.noncritical_patients))


def compute_empty_slot_profile(inst: Instance, v2: Mapping[int, int], side: str = CHAIRS) -> EmptySlotProfile:
    """End-of-day unused slots per chair (or bed), following the three-phase count.

    Only non-critical patients count for chairs; every patient counts for beds.
    """
    if side not in (CHAIRS, BEDS):
        raise ValueError(f"side must be {CHAIRS!r} or {BEDS!r}")
    H, HV = inst.slots_per_day, inst.visit_slots
    pool = inst.chair_count if side == CHAIRS else inst.bed_count
    patients = inst.noncritical_patients if side == CHAIRS else list(inst.patients)
    max_f = max((p.infusion_duration for p in patients), default=0)
    rooms = range(1, inst.room_count + 1)
    prof = EmptySlotProfile(side, {t: [0] * (H + 1) for t in inst.day_range})

    for t in inst.day_range:
        wt = int(v2.get(t, 0))
        if wt < 0:
            raise ValueError("waiting levels must be nonnegative")
        threshold = H - (HV + wt)
        for ell in range(1, max_f + 1):
            for r in rooms:
                L = sum(
                    1 for p in patients if p.infusion_duration == ell and inst.w(r, p.pathology, t)
                )
                prof.L[(ell, r, t)] = L
                M = [0] * (H + 1)
                if ell >= threshold:
                    M[0] = min(L, wt + 1 + ell - (H - HV), wt + 1)
                running = M[0]
                for i in range(1, H + 1):
                    if ell >= threshold - i and running < L:
                        M[i] = 1
                        running += 1
                prof.M[(ell, r, t)] = M
        sigma = pool
        i = 0
        while sigma > 0 and i <= H:
            avail = sum(prof.M[(ell, r, t)][i] for ell in range(1, max_f + 1) for r in rooms)
            prof.N[t][i] = min(sigma, avail)
            sigma -= prof.N[t][i]
            i += 1
        prof.leftover[t] = sigma
    return prof


def _level_counts(prof: EmptySlotProfile, t: int) -> list[int]:
    """``N[t]`` with unmatched resources put at the all-day-unused level, so the
    counts add up to the number of resources."""
    counts = list(prof.N[t])
    counts[-1] += prof.leftover[t]
    return counts


def build_ub2(
    inst: Instance, v1: int, v2: Mapping[int, int]
) -> tuple[MilpModel, VarMap, dict[str, EmptySlotProfile]]:
    model = MilpModel("UB2")
    vm = VarMap()
    H = inst.slots_per_day
    R = max(inst.room_count, 1)
    crit = inst.critical_patients
    nc = inst.noncritical_patients
    beds = range(1, inst.bed_count + 1)
    chairs = range(1, inst.chair_count + 1)
    profiles = {side: compute_empty_slot_profile(inst, v2, side) for side in (CHAIRS, BEDS)}

    by_patient: dict[str, list[int]] = {p.id: [] for p in inst.patients}
    for p in inst.patients:
        for t in inst.treatable_days(p):
            if p.critical:
                for b in beds:
                    vid = model.add_var(f"lam_{p.id}_{t}_{b}")
                    vm.add("lam", (p.id, t, b), vid)
                    by_patient[p.id].append(vid)
            else:
                for b in beds:
                    vid = model.add_var(f"muB_{p.id}_{t}_{b}")
                    vm.add("muB", (p.id, t, b), vid)
                    by_patient[p.id].append(vid)
                for s in chairs:
                    vid = model.add_var(f"muS_{p.id}_{t}_{s}")
                    vm.add("muS", (p.id, t, s), vid)
                    by_patient[p.id].append(vid)
    levels, counts = {}, {}
    for side, fam, pool in ((BEDS, "rhoB", beds), (CHAIRS, "rhoS", chairs)):
        for t in inst.day_range:
            counts[(side, t)] = _level_counts(profiles[side], t)
            levels[(side, t)] = [i for i in range(H + 1) if counts[(side, t)][i] > 0]
            for i in levels[(side, t)]:
                for q in pool:
                    vm.add(fam, (i, t, q), model.add_var(f"{fam}_{i}_{t}_{q}"))

    every = [vid for ids in by_patient.values() for vid in ids]
    model.add_constraint((every, [1] * len(every)), "=", int(v1), "treated_total")
    for p in inst.patients:
        ids = by_patient[p.id]
        if ids:
            model.add_constraint((ids, [1] * len(ids)), "<=", 1, f"assign_{p.id}")
            model.cliques.append(ids)

    f = {p.id: p.infusion_duration for p in inst.patients}
    sides = (
        (BEDS, "rhoB", beds, (("lam", crit), ("muB", nc)), _min_visit(list(inst.patients))),
        (CHAIRS, "rhoS", chairs, (("muS", nc),), _min_visit(nc)),
    )
    for side, fam, pool, families, vmin in sides:
        for t in inst.day_range:
            day_cols, day_w, day_cap = [], [], 0
            for q in pool:
                j = math.ceil(q / R)
                cap = max(0, H - j * vmin)
                cols, vals = [], []
                for pfam, group in families:
                    for p in group:
                        vid = vm.get(pfam, (p.id, t, q))
                        if vid is not None:
                            cols.append(vid)
                            vals.append(f[p.id])
                day_cols += cols
                day_w += vals
                day_cap += cap
                rho = [(vm.get(fam, (i, t, q)), i) for i in levels[(side, t)]]
                cols += [vid for vid, _ in rho]
                vals += [min(i, cap) for _, i in rho]
                if cols:
                    model.add_constraint((cols, vals), "<=", cap, f"{side}_capacity_{t}_{q}")
                ids = [vid for vid, _ in rho]
                model.add_constraint((ids, [1] * len(ids)), "=", 1, f"{fam}_one_{t}_{q}")
                if len(ids) > 1:
                    model.cliques.append(ids)
            for i in levels[(side, t)]:
                ids = [vm.get(fam, (i, t, q)) for q in pool]
                model.add_constraint((ids, [1] * len(ids)), "=", counts[(side, t)][i], f"{fam}_count_{i}_{t}")
            if day_cols:
                model.knapsacks.append((day_cols, day_w, day_cap))
    model.set_objective("max", {vid: 1 for vid in vm.ids("muS")})
    return model, vm, profiles


def ub2(
    inst: Instance, v1: int, v2: Mapping[int, int], opts: SolveOptions | None = None
) -> BoundResult:
    """Per-day assignment to concrete beds and chairs with reduced capacities.

    ``v1`` is the treated-patient level and ``v2`` the per-day wait levels of the
    earlier stages. On a time-out the solver's proven bound is reported.
    """
    t0 = time.perf_counter()
    opts = opts or SolveOptions(time_limit=60.0)
    model, _, _ = build_ub2(inst, v1, v2)
    return _finish("UB2", model, opts, t0, len(inst.noncritical_patients))

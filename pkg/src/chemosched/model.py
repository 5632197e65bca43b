"""Solver-neutral binary programs for the complete, aggregate, single-day and k-opt models.

Every coefficient and right-hand side is an integer. Variables are only
materialized at legal indices (a room for the pathology exists that day, the
visit ends within the visit window, the infusion ends before closing), so no
domain-restriction rows are needed.
"""

from __future__ import annotations

import copy
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instance import Instance, Patient
from .schedule import BED, CHAIR, AggregateSchedule

BINARY = "binary"
INTEGER = "integer"
SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class Constraint:
    name: str
    cols: np.ndarray
    vals: np.ndarray
    sense: str
    rhs: int

    def activity(self, values: Sequence[int] | np.ndarray) -> int:
        return int(sum(int(a) * int(values[j]) for j, a in zip(self.cols, self.vals)))

    def holds(self, lhs: int) -> bool:
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


class MilpModel:
    """A pure-integer linear program with named variables and sparse rows."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.var_kinds: list[str] = []
        self.var_ub: list[int] = []
        self._name_index: dict[str, int] = {}
        self.sense = "max"
        self.objective: dict[int, int] = {}
        self.constraints: list[Constraint] = []
        self.warm_start: dict[int, int] | None = None
        # Sets of binaries of which at most one can be 1 in any feasible point.
        # They are consequences of the rows, never extra restrictions.
        self.cliques: list[list[int]] = []
        # Implied knapsack rows (cols, weights, capacity): sum of weight * var <= capacity
        # holds in every feasible point. Also consequences, used only for bounding.
        self.knapsacks: list[tuple[list[int], list[int], int]] = []
        # A bound on the objective proven outside the model (a counting argument,
        # say). A warm start reaching it is optimal, so no search is needed.
        self.objective_bound: int | None = None

    # -- construction --------------------------------------------------

    def add_var(self, name: str, kind: str = BINARY, ub: int = 1) -> int:
        if name in self._name_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            ub = 1
        elif kind != INTEGER:
            raise ValueError(f"unknown variable kind {kind!r}")
        if ub < 0:
            raise ValueError("upper bound must be nonnegative")
        vid = len(self.var_names)
        self.var_names.append(name)
        self.var_kinds.append(kind)
        self.var_ub.append(int(ub))
        self._name_index[name] = vid
        return vid

    def add_constraint(
        self,
        terms: Mapping[int, int] | tuple[Sequence[int], Sequence[int]],
        sense: str,
        rhs: int,
        name: str | None = None,
    ) -> Constraint:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if isinstance(terms, Mapping):
            cols, vals = list(terms.keys()), list(terms.values())
        else:
            cols, vals = terms
        cols = np.asarray(cols, dtype=np.int64)
        vals_arr = np.asarray(vals)
        if vals_arr.size and not np.issubdtype(vals_arr.dtype, np.integer):
            if not np.all(np.mod(vals_arr, 1) == 0):
                raise ValueError("coefficients must be integers")
        vals_arr = vals_arr.astype(np.int64)
        if int(rhs) != rhs:
            raise ValueError("right-hand side must be an integer")
        if len(np.unique(cols)) != len(cols):
            raise ValueError(f"repeated variable in row {name!r}")
        keep = vals_arr != 0
        con = Constraint(
            name or f"R{len(self.constraints)}", cols[keep], vals_arr[keep], sense, int(rhs)
        )
        self.constraints.append(con)
        return con

    def set_objective(self, sense: str, coefs: Mapping[int, int]) -> None:
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self.sense = sense
        self.objective = {int(j): int(c) for j, c in coefs.items() if c}

    # -- queries -------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def var_id(self, name: str) -> int:
        return self._name_index[name]

    def dense(self, assignment: Mapping[int, int]) -> np.ndarray:
        values = np.zeros(self.num_vars, dtype=np.int64)
        for j, v in assignment.items():
            values[j] = v
        return values

    def objective_value(self, assignment: Mapping[int, int]) -> int:
        return int(sum(c * int(assignment.get(j, 0)) for j, c in self.objective.items()))

    def violations(self, assignment: Mapping[int, int]) -> list[str]:
        """Rows and domains broken by ``assignment`` (missing variables read as 0)."""
        out = []
        for j, v in assignment.items():
            if not 0 <= v <= self.var_ub[j] or int(v) != v:
                out.append(f"domain of {self.var_names[j]}: {v}")
        values = self.dense(assignment)
        for con in self.constraints:
            lhs = int(np.dot(con.vals, values[con.cols])) if len(con.cols) else 0
            if not con.holds(lhs):
                out.append(f"{con.name}: {lhs} {con.sense} {con.rhs} fails")
        return out

    def is_feasible(self, assignment: Mapping[int, int]) -> bool:
        return not self.violations(assignment)

    def copy(self) -> "MilpModel":
        """Shallow copy: rows are shared (they are never mutated), lists are not."""
        out = copy.copy(self)
        out.var_names = list(self.var_names)
        out.var_kinds = list(self.var_kinds)
        out.var_ub = list(self.var_ub)
        out._name_index = dict(self._name_index)
        out.objective = dict(self.objective)
        out.constraints = list(self.constraints)
        out.cliques = [list(c) for c in self.cliques]
        out.knapsacks = list(self.knapsacks)
        out.warm_start = dict(self.warm_start) if self.warm_start is not None else None
        return out

    def nnz(self) -> int:
        return int(sum(len(c.cols) for c in self.constraints))

    def __repr__(self) -> str:
        return (
            f"MilpModel({self.name!r}, vars={self.num_vars}, rows={self.num_constraints}, "
            f"nnz={self.nnz()}, sense={self.sense})"
        )


class VarMap:
    """Two-way map between structured indices ``(family, key)`` and variable ids."""

    def __init__(self) -> None:
        self.families: dict[str, dict[tuple, int]] = defaultdict(dict)
        self.key_of: dict[int, tuple[str, tuple]] = {}

    def add(self, family: str, key: tuple, vid: int) -> None:
        self.families[family][key] = vid
        self.key_of[vid] = (family, key)

    def get(self, family: str, key: tuple) -> int | None:
        return self.families.get(family, {}).get(key)

    def family(self, name: str) -> dict[tuple, int]:
        return self.families.get(name, {})

    def ids(self, family: str) -> list[int]:
        return list(self.families.get(family, {}).values())


# -- helpers -----------------------------------------------------------------


def _window_rows(
    model: MilpModel,
    cols: Sequence[int],
    groups: Sequence[tuple],
    starts: Sequence[int],
    durations: Sequence[int],
    rhs_of,
    name_of,
) -> None:
    """One ``<=`` row per (group, slot) summing the variables whose interval covers the slot.

    A variable starting at ``q`` with duration ``d`` covers slots ``q..q+d-1``,
    which is the same as summing starts ``q`` in ``[h+1-d, h]`` for slot ``h``.
    """
    if not len(cols):
        return
    cols = np.asarray(cols, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    durations = np.asarray(durations, dtype=np.int64)
    gkeys = sorted(set(groups))
    gindex = {g: i for i, g in enumerate(gkeys)}
    gid = np.fromiter((gindex[g] for g in groups), dtype=np.int64, count=len(groups))
    rep_cols = np.repeat(cols, durations)
    rep_gid = np.repeat(gid, durations)
    offsets = np.arange(len(rep_cols)) - np.repeat(np.cumsum(durations) - durations, durations)
    slot = np.repeat(starts, durations) + offsets
    order = np.lexsort((rep_cols, slot, rep_gid))
    rep_cols, rep_gid, slot = rep_cols[order], rep_gid[order], slot[order]
    key = rep_gid * (int(slot.max()) + 2) + slot
    bounds = np.flatnonzero(np.diff(key)) + 1
    for lo, hi in zip(np.r_[0, bounds], np.r_[bounds, len(key)]):
        g = gkeys[int(rep_gid[lo])]
        h = int(slot[lo])
        c = rep_cols[lo:hi]
        model.add_constraint((c, np.ones(len(c), dtype=np.int64)), "<=", rhs_of(g, h), name_of(g, h))


@dataclass
class _Core:
    """Aggregate variables for a set of patients and days, before objective and extras."""

    model: MilpModel
    vm: VarMap
    x_by_pt: dict[tuple[str, int], list[tuple[int, int]]] = field(default_factory=dict)
    inf_by_pt: dict[tuple[str, int], list[tuple[int, int]]] = field(default_factory=dict)


def _wait_terms(inst: Instance, core: _Core, pid: str, t: int) -> tuple[list[int], list[int]]:
    """Coefficients of (infusion start) - (visit end) for one patient and day."""
    v = inst.patient(pid).visit_duration
    cols, vals = [], []
    for vid, h in core.inf_by_pt.get((pid, t), []):
        cols.append(vid)
        vals.append(h)
    for vid, h in core.x_by_pt.get((pid, t), []):
        cols.append(vid)
        vals.append(-(h + v))
    return cols, vals


def _aggregate_core(inst: Instance, patients: Iterable[Patient], days: Sequence[int], name: str) -> _Core:
    model = MilpModel(name)
    vm = VarMap()
    core = _Core(model, vm)
    H, HV = inst.slots_per_day, inst.visit_slots
    patients = list(patients)

    # variables
    for p in patients:
        for t in days:
            if inst.room_capacity(p.pathology, t) == 0:
                continue
            xs = []
            for h in range(1, HV - p.visit_duration + 2):
                vid = model.add_var(f"x_{p.id}_{t}_{h}")
                vm.add("x", (p.id, t, h), vid)
                xs.append((vid, h))
            if not xs:
                continue
            core.x_by_pt[(p.id, t)] = xs
            infs = []
            families = ("y",) if p.critical else ("zB", "zS")
            for fam in families:
                for h in range(1, H - p.infusion_duration + 2):
                    vid = model.add_var(f"{fam}_{p.id}_{t}_{h}")
                    vm.add(fam, (p.id, t, h), vid)
                    infs.append((vid, h))
            core.inf_by_pt[(p.id, t)] = infs

    # at most one visit per patient
    for p in patients:
        xs = [vid for t in days for vid, _ in core.x_by_pt.get((p.id, t), [])]
        if xs:
            model.add_constraint((xs, [1] * len(xs)), "<=", 1, f"visit_{p.id}")
            model.cliques.append(xs)
            infs = [vid for t in days for vid, _ in core.inf_by_pt.get((p.id, t), [])]
            if infs:
                model.cliques.append(infs)

    # aggregated room capacity per (day, slot, pathology)
    cols, groups, starts, durs = [], [], [], []
    for p in patients:
        for t in days:
            for vid, h in core.x_by_pt.get((p.id, t), []):
                cols.append(vid)
                groups.append((t, p.pathology))
                starts.append(h)
                durs.append(p.visit_duration)
    _window_rows(
        model, cols, groups, starts, durs,
        rhs_of=lambda g, h: inst.room_capacity(g[1], g[0]),
        name_of=lambda g, h: f"room_{g[0]}_{h}_{g[1]}",
    )

    # same-day link and visit-before-infusion precedence
    for p in patients:
        for t in days:
            xs = core.x_by_pt.get((p.id, t))
            if not xs:
                continue
            infs = core.inf_by_pt[(p.id, t)]
            model.add_constraint(
                ([v for v, _ in xs] + [v for v, _ in infs], [1] * len(xs) + [-1] * len(infs)),
                "=", 0, f"link_{p.id}_{t}",
            )
            model.add_constraint(
                (
                    [v for v, _ in xs] + [v for v, _ in infs],
                    [h + p.visit_duration for _, h in xs] + [-h for _, h in infs],
                ),
                "<=", 0, f"prec_{p.id}_{t}",
            )

    # chair and bed capacity per (day, slot)
    for fam_set, cap, label in ((("zS",), inst.chair_count, "chair"), (("y", "zB"), inst.bed_count, "bed")):
        cols, groups, starts, durs = [], [], [], []
        for fam in fam_set:
            for (pid, t, h), vid in vm.family(fam).items():
                cols.append(vid)
                groups.append((t,))
                starts.append(h)
                durs.append(inst.patient(pid).infusion_duration)
        _window_rows(
            model, cols, groups, starts, durs,
            rhs_of=lambda g, h, cap=cap: cap,
            name_of=lambda g, h, label=label: f"{label}_{g[0]}_{h}",
        )
    chair_vars = [(pid, t, vid) for (pid, t, _), vid in vm.family("zS").items()]
    _add_area_hints(inst, model, patients, days, core.x_by_pt, chair_vars)
    return core


def _x_objective(vm: VarMap) -> dict[int, int]:
    return {vid: 1 for vid in vm.ids("x")}


def _add_f1_floor(core: _Core, v1: int) -> None:
    xs = core.vm.ids("x")
    core.model.add_constraint((xs, [1] * len(xs)), ">=", int(v1), "F1_min")


def _add_wait_epigraph(inst: Instance, core: _Core, days: Sequence[int]) -> None:
    """Integer W_t >= (infusion start - visit end) of every patient on day t; minimize sum W_t."""
    model, vm = core.model, core.vm
    w_ids = {}
    for t in days:
        vid = model.add_var(f"W_{t}", INTEGER, ub=inst.slots_per_day)
        vm.add("W", (t,), vid)
        w_ids[t] = vid
    for (pid, t) in core.x_by_pt:
        cols, vals = _wait_terms(inst, core, pid, t)
        model.add_constraint(([w_ids[t]] + cols, [1] + [-a for a in vals]), ">=", 0, f"wait_{pid}_{t}")
    model.set_objective("min", {vid: 1 for vid in w_ids.values()})


def _add_wait_caps(inst: Instance, core: _Core, v2: Mapping[int, int]) -> None:
    for (pid, t) in core.x_by_pt:
        if t not in v2:
            continue
        cols, vals = _wait_terms(inst, core, pid, t)
        core.model.add_constraint((cols, vals), "<=", int(v2[t]), f"waitcap_{pid}_{t}")


def _add_area_hints(
    inst: Instance,
    model: MilpModel,
    patients: Sequence[Patient],
    days: Sequence[int],
    visit_vars: Mapping[tuple[str, int], Sequence[tuple[int, int]]],
    chair_vars: Iterable[tuple[str, int, int]],
) -> None:
    """Implied slot-area knapsacks per day and over all days.

    A treated patient occupies ``f`` consecutive slots of a bed or chair, all of
    them after its visit, so after slot ``min v``; critical patients only use
    beds. Visits occupy ``v`` slots of a room of their pathology within the
    visit window. Summed over slots, the capacity rows give these knapsacks.
    """
    H, HV = inst.slots_per_day, inst.visit_slots
    by_id = {p.id: p for p in patients}

    def emit(entries: list[tuple[int, int]], cap: int) -> None:
        if entries and sum(w for _, w in entries) > cap:
            model.knapsacks.append(([j for j, _ in entries], [w for _, w in entries], max(cap, 0)))

    def area(select, weight, capacity_per_slot, span) -> None:
        total_entries, total_cap = [], 0
        for t in days:
            entries, vmin = [], None
            for p in patients:
                if not select(p):
                    continue
                vids = [vid for vid, _ in visit_vars.get((p.id, t), [])]
                if vids:
                    vmin = p.visit_duration if vmin is None else min(vmin, p.visit_duration)
                    entries += [(vid, weight(p)) for vid in vids]
            if not entries:
                continue
            cap = capacity_per_slot(t) * span(vmin)
            emit(entries, cap)
            total_entries += entries
            total_cap += cap
        if len(days) > 1:
            emit(total_entries, total_cap)

    area(lambda p: True, lambda p: p.infusion_duration,
         lambda t: inst.bed_count + inst.chair_count, lambda vmin: H - vmin)
    area(lambda p: p.critical, lambda p: p.infusion_duration, lambda t: inst.bed_count, lambda vmin: H - vmin)
    for k in inst.pathologies:
        for t in days:
            entries = [
                (vid, p.visit_duration)
                for p in patients if p.pathology == k
                for vid, _ in visit_vars.get((p.id, t), [])
            ]
            emit(entries, inst.room_capacity(k, t) * HV)
    # chair infusions of non-critical patients
    for t in days:
        entries, vmin = [], None
        for pid, d, vid in chair_vars:
            if d == t:
                p = by_id[pid]
                vmin = p.visit_duration if vmin is None else min(vmin, p.visit_duration)
                entries.append((vid, p.infusion_duration))
        if entries:
            emit(entries, inst.chair_count * (H - vmin))


# -- public builders -----------------------------------------------------------


def build_AF1(inst: Instance) -> tuple[MilpModel, VarMap]:
    core = _aggregate_core(inst, inst.patients, list(inst.day_range), "AF1")
    core.model.set_objective("max", _x_objective(core.vm))
    return core.model, core.vm


def build_AF2(inst: Instance, v1: int) -> tuple[MilpModel, VarMap]:
    days = list(inst.day_range)
    core = _aggregate_core(inst, inst.patients, days, "AF2")
    _add_f1_floor(core, v1)
    _add_wait_epigraph(inst, core, days)
    return core.model, core.vm


def build_AF3(inst: Instance, v1: int, v2: Mapping[int, int]) -> tuple[MilpModel, VarMap]:
    core = _aggregate_core(inst, inst.patients, list(inst.day_range), "AF3")
    _add_f1_floor(core, v1)
    _add_wait_caps(inst, core, v2)
    core.model.set_objective("max", {vid: 1 for vid in core.vm.ids("zS")})
    return core.model, core.vm


def build_single_day(
    inst: Instance, day: int, roster: Iterable[str], stage: str, v2t: int | None = None
) -> tuple[MilpModel, VarMap]:
    """Restriction to the patients of ``roster`` on ``day``; all of them must be treated."""
    if stage not in ("P2", "P3"):
        raise ValueError("stage must be 'P2' or 'P3'")
    ids = set(roster)
    patients = [p for p in inst.patients if p.id in ids]
    core = _aggregate_core(inst, patients, [day], f"{stage}_day{day}")
    _add_f1_floor(core, len(patients))
    if stage == "P2":
        _add_wait_epigraph(inst, core, [day])
    else:
        if v2t is not None:
            _add_wait_caps(inst, core, {day: v2t})
        core.model.set_objective("max", {vid: 1 for vid in core.vm.ids("zS")})
    return core.model, core.vm


def build_F1_complete(inst: Instance) -> tuple[MilpModel, VarMap]:
    """Resource-indexed formulation over alpha/beta/gamma^B/gamma^S."""
    model = MilpModel("F1")
    vm = VarMap()
    H, HV = inst.slots_per_day, inst.visit_slots
    beds = range(1, inst.bed_count + 1)
    chairs = range(1, inst.chair_count + 1)
    visit_by_pt: dict[tuple[str, int], list[tuple[int, int]]] = {}
    inf_by_pt: dict[tuple[str, int], list[tuple[int, int]]] = {}

    for p in inst.patients:
        for t in inst.day_range:
            rooms = inst.rooms_for(p.pathology, t)
            if not rooms:
                continue
            av = []
            for h in range(1, HV - p.visit_duration + 2):
                for r in rooms:
                    vid = model.add_var(f"alpha_{p.id}_{t}_{h}_{r}")
                    vm.add("alpha", (p.id, t, h, r), vid)
                    av.append((vid, h))
            if not av:
                continue
            visit_by_pt[(p.id, t)] = av
            infs = []
            fams = (("beta", beds),) if p.critical else (("gB", beds), ("gS", chairs))
            for fam, pool in fams:
                for h in range(1, H - p.infusion_duration + 2):
                    for res in pool:
                        vid = model.add_var(f"{fam}_{p.id}_{t}_{h}_{res}")
                        vm.add(fam, (p.id, t, h, res), vid)
                        infs.append((vid, h))
            inf_by_pt[(p.id, t)] = infs

    for p in inst.patients:
        av = [vid for t in inst.day_range for vid, _ in visit_by_pt.get((p.id, t), [])]
        if av:
            model.add_constraint((av, [1] * len(av)), "<=", 1, f"visit_{p.id}")
            model.cliques.append(av)
            infs = [vid for t in inst.day_range for vid, _ in inf_by_pt.get((p.id, t), [])]
            if infs:
                model.cliques.append(infs)

    cols, groups, starts, durs = [], [], [], []
    for (pid, t, h, r), vid in vm.family("alpha").items():
        cols.append(vid)
        groups.append((t, r))
        starts.append(h)
        durs.append(inst.patient(pid).visit_duration)
    _window_rows(model, cols, groups, starts, durs, lambda g, h: 1, lambda g, h: f"room_{g[0]}_{h}_{g[1]}")

    for p in inst.patients:
        for t in inst.day_range:
            av = visit_by_pt.get((p.id, t))
            if not av:
                continue
            infs = inf_by_pt[(p.id, t)]
            model.add_constraint(
                ([v for v, _ in av] + [v for v, _ in infs], [1] * len(av) + [-1] * len(infs)),
                "=", 0, f"link_{p.id}_{t}",
            )
            model.add_constraint(
                (
                    [v for v, _ in av] + [v for v, _ in infs],
                    [h + p.visit_duration for _, h in av] + [-h for _, h in infs],
                ),
                "<=", 0, f"prec_{p.id}_{t}",
            )

    for fams, label in ((("gS",), "chair"), (("beta", "gB"), "bed")):
        cols, groups, starts, durs = [], [], [], []
        for fam in fams:
            for (pid, t, h, res), vid in vm.family(fam).items():
                cols.append(vid)
                groups.append((t, res))
                starts.append(h)
                durs.append(inst.patient(pid).infusion_duration)
        _window_rows(
            model, cols, groups, starts, durs,
            lambda g, h: 1,
            lambda g, h, label=label: f"{label}_{g[0]}_{h}_{g[1]}",
        )
    chair_vars = [(pid, t, vid) for (pid, t, _, _), vid in vm.family("gS").items()]
    _add_area_hints(inst, model, inst.patients, list(inst.day_range), visit_by_pt, chair_vars)
    model.set_objective("max", {vid: 1 for vid in vm.ids("alpha")})
    return model, vm


# -- k-opt neighbourhood -------------------------------------------------------


@dataclass(frozen=True)
class KOptParams:
    k_x: int = 20
    k_y: int = 20
    k_zB: int = 20
    k_zS: int = 20
    iteration_time_limit: float = 60.0
    overall_time_limit: float = 600.0

    def __post_init__(self) -> None:
        if min(self.k_x, self.k_y, self.k_zB, self.k_zS) < 0:
            raise ValueError("k-opt radii must be nonnegative")
        if self.iteration_time_limit <= 0 or self.overall_time_limit <= 0:
            raise ValueError("k-opt time limits must be positive")


def aggregate_to_assignment(
    vm: VarMap, agg: AggregateSchedule, inst: Instance, strict: bool = True
) -> dict[int, int]:
    """0/1 values of x, y, z^B, z^S (and W_t, if present) encoding ``agg``."""
    values = {vid: 0 for fam in ("x", "y", "zB", "zS") for vid in vm.ids(fam)}
    for pid, (t, h) in agg.visits.items():
        vid = vm.get("x", (pid, t, h))
        if vid is None:
            if strict:
                raise KeyError(f"no x variable for {pid} day {t} slot {h}")
            continue
        values[vid] = 1
    for pid, (t, h, cls) in agg.infusions.items():
        fam = "y" if inst.patient(pid).critical else ("zS" if cls == CHAIR else "zB")
        vid = vm.get(fam, (pid, t, h))
        if vid is None:
            if strict:
                raise KeyError(f"no {fam} variable for {pid} day {t} slot {h}")
            continue
        values[vid] = 1
    if vm.family("W"):
        waits = agg.phi2_by_day(inst)
        for (t,), vid in vm.family("W").items():
            values[vid] = waits.get(t, 0)
    return values


def assignment_to_aggregate(vm: VarMap, assignment: Mapping[int, int]) -> AggregateSchedule:
    agg = AggregateSchedule()
    for (pid, t, h), vid in vm.family("x").items():
        if assignment.get(vid, 0) == 1:
            agg.visits[pid] = (t, h)
    for fam, cls in (("y", BED), ("zB", BED), ("zS", CHAIR)):
        for (pid, t, h), vid in vm.family(fam).items():
            if assignment.get(vid, 0) == 1:
                agg.infusions[pid] = (t, h, cls)
    return agg


def add_kopt_constraints(
    model: MilpModel, vm: VarMap, current: AggregateSchedule, k: KOptParams, inst: Instance
) -> MilpModel:
    """Copy of ``model`` restricted to a Hamming ball around ``current`` per variable family."""
    out = model.copy()
    values = aggregate_to_assignment(vm, current, inst)
    for fam, radius in (("x", k.k_x), ("y", k.k_y), ("zB", k.k_zB), ("zS", k.k_zS)):
        ids = vm.ids(fam)
        if not ids:
            continue
        ones = sum(values[j] for j in ids)
        coefs = [-1 if values[j] else 1 for j in ids]
        out.add_constraint((ids, coefs), "<=", radius - ones, f"kopt_{fam}")
    return out

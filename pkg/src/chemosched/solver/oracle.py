"""Exhaustive reference solvers used as test oracles.

``oracle_exact`` enumerates every assignment of a (very small) MilpModel.
``brute_force_lexico`` works directly on the scheduling problem: it enumerates
complete schedules with concrete rooms, beds and chairs, without going through
any of the integer programs, and returns the lexicographic optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..instance import Instance
from ..model import MilpModel
from ..schedule import BED, CHAIR, Appointment, CompleteSchedule
from .types import Deadline, SolveOptions, SolveResult, Status

MAX_ORACLE_VARS = 48
MAX_PATIENTS = 8
MAX_SLOTS = 12
MAX_ROOMS = 2
MAX_DAYS = 3


class OracleSizeError(ValueError):
    """The input is too large for exhaustive enumeration."""


# -- model-level enumeration ---------------------------------------------------


def oracle_exact(model: MilpModel, opts: SolveOptions) -> SolveResult:
    """Try every assignment (rows checked as soon as their variables are known)."""
    n = model.num_vars
    if n > MAX_ORACLE_VARS:
        raise OracleSizeError(f"oracle backend accepts at most {MAX_ORACLE_VARS} variables, got {n}")
    deadline = Deadline(opts.time_limit)
    ub = model.var_ub
    rows = []
    for con in model.constraints:
        cols, vals = con.cols.tolist(), con.vals.tolist()
        if con.sense in ("<=", "="):
            rows.append((cols, vals, con.rhs))
        if con.sense in (">=", "="):
            rows.append((cols, [-a for a in vals], -con.rhs))
    act = [0] * len(rows)
    rem_min = [sum(min(0, a * ub[j]) for j, a in zip(c, v)) for c, v, _ in rows]
    by_var: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, (cols, vals, _) in enumerate(rows):
        for j, a in zip(cols, vals):
            by_var[j].append((i, a))
    for i, (cols, _, rhs) in enumerate(rows):
        if not cols and rhs < 0:
            return SolveResult(Status.INFEASIBLE, runtime=deadline.elapsed())

    sign = 1 if model.sense == "max" else -1
    c = [sign * model.objective.get(j, 0) for j in range(n)]
    values = [0] * n
    best: list[int] | None = None
    best_val = None
    count = 0
    timed_out = False

    def rec(j: int, val: int) -> None:
        nonlocal best, best_val, count, timed_out
        if j == n:
            if best_val is None or val > best_val:
                best, best_val = list(values), val
            return
        count += 1
        if (count & 1023) == 0 and deadline.expired():
            timed_out = True
        if timed_out:
            return
        for v in range(ub[j] + 1):
            ok = True
            touched = []
            for i, a in by_var[j]:
                act[i] += a * v
                rem_min[i] -= min(0, a * ub[j])
                touched.append((i, a))
                if act[i] + rem_min[i] > rows[i][2]:
                    ok = False
                    break
            values[j] = v
            if ok:
                rec(j + 1, val + c[j] * v)
            for i, a in touched:
                act[i] -= a * v
                rem_min[i] += min(0, a * ub[j])
            values[j] = 0

    rec(0, 0)
    res = SolveResult(Status.INFEASIBLE, runtime=deadline.elapsed(), nodes=count)
    if best is not None:
        res.assignment = {j: v for j, v in enumerate(best)}
        res.objective = model.objective_value(res.assignment)
        if timed_out:
            res.status = Status.FEASIBLE
        else:
            res.status = Status.OPTIMAL
            res.best_bound = res.objective
    elif timed_out:
        res.status = Status.NO_SOLUTION
    return res


# -- schedule-level enumeration -------------------------------------------------


@dataclass
class LexicoOptimum:
    phi1: int
    phi2_by_day: dict[int, int]
    phi3: int
    schedule: CompleteSchedule

    @property
    def phi2(self) -> int:
        return sum(self.phi2_by_day.values())

    def as_tuple(self) -> tuple[int, dict[int, int], int]:
        return self.phi1, dict(self.phi2_by_day), self.phi3


def check_oracle_size(inst: Instance) -> None:
    problems = []
    if len(inst.patients) > MAX_PATIENTS:
        problems.append(f"{len(inst.patients)} patients > {MAX_PATIENTS}")
    if inst.slots_per_day > MAX_SLOTS:
        problems.append(f"{inst.slots_per_day} slots per day > {MAX_SLOTS}")
    if inst.room_count > MAX_ROOMS:
        problems.append(f"{inst.room_count} rooms > {MAX_ROOMS}")
    if inst.days > MAX_DAYS:
        problems.append(f"{inst.days} days > {MAX_DAYS}")
    if problems:
        raise OracleSizeError("instance too large for the enumeration oracle: " + "; ".join(problems))


def _mask(start: int, length: int) -> int:
    return ((1 << length) - 1) << start


def brute_force_lexico(inst: Instance) -> LexicoOptimum:
    """Lexicographic optimum (max treated, min sum of daily max waits, max chairs) by enumeration.

    Symmetric choices are skipped: among rooms (or beds, chairs) that are still
    completely free on a day, only the lowest-numbered one is tried.
    """
    check_oracle_size(inst)
    H, HV = inst.slots_per_day, inst.visit_slots
    days = list(inst.day_range)
    patients = list(inst.patients)
    n = len(patients)

    room_tl = {(t, r): 0 for t in days for r in range(1, inst.room_count + 1)}
    res_tl = {(t, BED, b): 0 for t in days for b in range(1, inst.bed_count + 1)}
    res_tl.update({(t, CHAIR, s): 0 for t in days for s in range(1, inst.chair_count + 1)})
    pools = {BED: range(1, inst.bed_count + 1), CHAIR: range(1, inst.chair_count + 1)}

    # remaining potential for the optimistic bound
    can_treat = [bool(inst.treatable_days(p)) for p in patients]
    suffix_treat = [0] * (n + 1)
    suffix_nc = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_treat[i] = suffix_treat[i + 1] + can_treat[i]
        suffix_nc[i] = suffix_nc[i + 1] + (can_treat[i] and not patients[i].critical)

    feasible_days = [frozenset(inst.treatable_days(p)) for p in patients]
    day_sets = [
        frozenset(t for b, t in enumerate(days) if mask >> b & 1) for mask in range(1, 1 << len(days))
    ]
    pathology_days = {k: {t: inst.rooms_for(k, t) for t in days} for k in inst.pathologies}

    def span(lo: int, hi: int) -> int:
        return ((1 << (hi - lo + 1)) - 1) << (lo - 1) if hi >= lo else 0

    def max_count(weights: list[int], area: int) -> int:
        cnt = 0
        for w in sorted(weights):
            if w > area:
                break
            area -= w
            cnt += 1
        return cnt

    def phi1_cap(i: int) -> int:
        """How many of patients i.. can still be treated, by slot-area counting."""
        rem = [q for q in range(i, n) if can_treat[q]]
        best_cap = len(rem)
        for S in day_sets:
            conf = [q for q in rem if feasible_days[q] <= S]
            if not conf:
                continue
            for crit_only in (False, True):
                sub = [q for q in conf if patients[q].critical or not crit_only]
                if not sub:
                    continue
                vmin = min(patients[q].visit_duration for q in sub)
                window = span(vmin + 1, H)
                kinds = (BED,) if crit_only else (BED, CHAIR)
                area = sum(
                    (window & ~res_tl[(t, cls, q)]).bit_count()
                    for t in S for cls in kinds for q in pools[cls]
                )
                cnt = max_count([patients[q].infusion_duration for q in sub], area)
                best_cap = min(best_cap, len(rem) - len(sub) + cnt)
            total = 0
            for k in inst.pathologies:
                sub = [q for q in conf if patients[q].pathology == k]
                if not sub:
                    continue
                window = span(1, HV)
                area = sum((window & ~room_tl[(t, r)]).bit_count() for t in S for r in pathology_days[k][t])
                total += max_count([patients[q].visit_duration for q in sub], area)
            best_cap = min(best_cap, len(rem) - len(conf) + total)
        return best_cap

    nc_idx = [q for q in range(n) if can_treat[q] and not patients[q].critical]
    chair_window = span(min((patients[q].visit_duration for q in nc_idx), default=0) + 1, H)

    def phi3_cap(i: int) -> int:
        """How many of patients i.. can still sit in a chair, by free chair area."""
        if suffix_nc[i] == 0:
            return 0
        area = sum((chair_window & ~res_tl[(t, CHAIR, s)]).bit_count() for t in days for s in pools[CHAIR])
        return max_count([patients[q].infusion_duration for q in nc_idx if q >= i], area)

    day_wait = {t: 0 for t in days}
    chosen: dict[str, Appointment] = {}
    caps: dict[int, int] = {t: H for t in days}

    def options(i: int):
        p = patients[i]
        v, f = p.visit_duration, p.infusion_duration
        out = []
        for t in days:
            rooms = inst.rooms_for(p.pathology, t)
            if not rooms or v > HV or v + f > H:
                continue
            used_rooms = [r for r in rooms if room_tl[(t, r)]]
            free_rooms = [r for r in rooms if not room_tl[(t, r)]]
            room_choices = used_rooms + free_rooms[:1]
            classes = [BED] if p.critical else [CHAIR, BED]
            for hv in range(1, HV - v + 2):
                vmask = _mask(hv - 1, v)
                for r in room_choices:
                    if room_tl[(t, r)] & vmask:
                        continue
                    for hi in range(hv + v, min(H - f + 1, hv + v + caps[t]) + 1):
                        imask = _mask(hi - 1, f)
                        for cls in classes:
                            pool = pools[cls]
                            used = [q for q in pool if res_tl[(t, cls, q)]]
                            free = [q for q in pool if not res_tl[(t, cls, q)]]
                            for q in used + free[:1]:
                                if res_tl[(t, cls, q)] & imask:
                                    continue
                                wait = hi - (hv + v)
                                out.append((wait, 0 if cls == CHAIR else 1, t, hv, r, hi, cls, q, vmask, imask))
        out.sort(key=lambda o: (o[1], o[0], o[2], o[3], o[4], o[5], o[7]))
        return out

    def placeable(i: int) -> bool:
        """Whether patient i still fits somewhere on the current timelines and caps."""
        p = patients[i]
        v, f = p.visit_duration, p.infusion_duration
        kinds = (BED,) if p.critical else (CHAIR, BED)
        for t in feasible_days[i]:
            for hv in range(1, HV - v + 2):
                vmask = _mask(hv - 1, v)
                if all(room_tl[(t, r)] & vmask for r in pathology_days[p.pathology][t]):
                    continue
                for hi in range(hv + v, min(H - f + 1, hv + v + caps[t]) + 1):
                    imask = _mask(hi - 1, f)
                    if any(not res_tl[(t, cls, q)] & imask for cls in kinds for q in pools[cls]):
                        return True
        return False

    def search(score, optimistic, base_need: int, floor: int = -1, raise_need: bool = False) -> tuple | None:
        """Best (score, appointments, waits) scoring above ``floor`` among schedules
        that treat at least ``base_need`` patients within the current wait caps.

        With ``raise_need`` the score is the treated count, so each incumbent
        raises the count still worth looking for.
        """
        best: list = [None]

        def rec(i: int, phi1: int, phi3: int) -> None:
            need = max(base_need, best[0][0] + 1) if raise_need and best[0] is not None else base_need
            if phi1 + suffix_treat[i] < need:
                return
            if optimistic(i, phi1, phi3) <= (floor if best[0] is None else best[0][0]):
                return
            if need and i < n:
                slack = phi1 + suffix_treat[i] - need
                stuck = 0
                for q in range(i, n):
                    if can_treat[q] and not placeable(q):
                        stuck += 1
                        if stuck > slack:
                            return
                if phi1 + phi1_cap(i) < need:
                    return
            if i == n:
                best[0] = (score(phi1, phi3), dict(chosen), dict(day_wait))
                return
            p = patients[i]
            for wait, _, t, hv, r, hi, cls, q, vmask, imask in options(i):
                old_wait = day_wait[t]
                room_tl[(t, r)] |= vmask
                res_tl[(t, cls, q)] |= imask
                day_wait[t] = max(old_wait, wait)
                chosen[p.id] = Appointment(t, hv, r, hi, cls, q)
                rec(i + 1, phi1 + 1, phi3 + (cls == CHAIR))
                del chosen[p.id]
                day_wait[t] = old_wait
                room_tl[(t, r)] ^= vmask
                res_tl[(t, cls, q)] ^= imask
            # leave the patient unscheduled
            rec(i + 1, phi1, phi3)

        rec(0, 0, 0)
        return best[0]

    def cap_vectors(total: int):
        def split(k: int, left: int):
            if k == len(days) - 1:
                if left <= H:
                    yield (left,)
                return
            for w in range(min(left, H) + 1):
                for rest in split(k + 1, left - w):
                    yield (w,) + rest
        yield from split(0, total)

    # 1) most treated patients, waits unrestricted
    phi1_star = search(lambda a, b: a, lambda i, a, b: a + suffix_treat[i], 0, raise_need=True)[0]
    # 2) smallest total of daily wait caps admitting that many patients, 3) most chairs under it
    for total in range(len(days) * H + 1):
        found = None
        for vec in cap_vectors(total):
            caps.update(zip(days, vec))
            res = search(lambda a, b: b, lambda i, a, b: b + phi3_cap(i), phi1_star, found[0] if found else -1)
            if res is not None:
                found = res
        if found is not None:
            break
    caps.update({t: H for t in days})
    phi3, appts, waits = found
    return LexicoOptimum(phi1_star, waits, phi3, CompleteSchedule(appts))

"""Depth-first branch and bound for small pure-integer models, without LP relaxations.

Pruning uses a combinatorial bound: every free variable is set to the value
that helps the objective most, except that within an implied at-most-one set
(``MilpModel.cliques``) only the single best member is counted. Rows are
propagated with activity-based bound tightening after every branching step.
"""

from __future__ import annotations

from fractions import Fraction

from ..model import BINARY, MilpModel
from .types import Deadline, SolveOptions, SolveResult, Status


class _Timeout(Exception):
    pass


class _Search:
    def __init__(self, model: MilpModel, opts: SolveOptions):
        self.model = model
        self.opts = opts
        n = model.num_vars
        self.n = n
        self.sign = 1 if model.sense == "max" else -1
        self.c = [0] * n
        for j, v in model.objective.items():
            self.c[j] = self.sign * v
        self.binary = [k == BINARY for k in model.var_kinds]

        rows = []
        for con in model.constraints:
            cols = con.cols.tolist()
            vals = con.vals.tolist()
            if not cols:
                if not con.holds(0):
                    rows.append(([], [], -1))  # trivially violated
                continue
            if con.sense in ("<=", "="):
                rows.append((cols, vals, con.rhs))
            if con.sense in (">=", "="):
                rows.append((cols, [-a for a in vals], -con.rhs))
        self.rows = rows
        # A row's minimum activity only grows when a positive-coefficient variable
        # gains a larger lower bound or a negative-coefficient one a smaller upper bound.
        self.rows_up: list[list[int]] = [[] for _ in range(n)]
        self.rows_down: list[list[int]] = [[] for _ in range(n)]
        for i, (cols, vals, _) in enumerate(rows):
            for j, a in zip(cols, vals):
                (self.rows_up if a > 0 else self.rows_down)[j].append(i)

        self.cliques = [[j for j in cl if self.binary[j]] for cl in model.cliques]
        self.var_cliques: list[list[int]] = [[] for _ in range(n)]
        for ci, cl in enumerate(self.cliques):
            for j in cl:
                self.var_cliques[j].append(ci)

        # objective bound structure: positive-coefficient binaries are grouped by
        # cliques (at most one per group counts); the rest are bounded one by one
        grouped: set[int] = set()
        self.groups: list[list[int]] = []
        for cl in self.cliques:
            g = [j for j in cl if self.c[j] > 0 and j not in grouped]
            if len(g) > 1:
                self.groups.append(g)
                grouped.update(g)
        for j in range(n):
            if self.c[j] > 0 and self.binary[j] and j not in grouped:
                self.groups.append([j])
        self.pos_int = [j for j in range(n) if self.c[j] > 0 and not self.binary[j]]
        self.neg = [j for j in range(n) if self.c[j] < 0]
        # knapsack hints restricted to those that weigh some objective group
        self.knaps = []
        in_group = {j for g in self.groups for j in g}
        for cols, weights, cap in model.knapsacks:
            wmap = {j: w for j, w in zip(cols, weights)}
            if not any(j in in_group for j in cols):
                continue
            per_group = [{j: wmap[j] for j in g if j in wmap} for g in self.groups]
            self.knaps.append((list(wmap.items()), per_group, cap))
        self.order = sorted(range(n), key=lambda j: (-abs(self.c[j]), j))
        # Partners: variables with opposite sign in an equality row (e.g. a visit and
        # the infusions it must be matched with). Once a variable is raised by a
        # branching decision its partners are branched on next.
        partners: list[set[int]] = [set() for _ in range(n)]
        for con in model.constraints:
            if con.sense != "=":
                continue
            cols, vals = con.cols.tolist(), con.vals.tolist()
            for j, a in zip(cols, vals):
                partners[j].update(m for m, b in zip(cols, vals) if (a > 0) != (b > 0))
        self.partners = [sorted(ps) for ps in partners]

        self.lb = [0] * n
        self.ub = list(model.var_ub)
        self.trail: list[tuple[int, int, int]] = []
        self.queue: list[int] = []
        self.inq = bytearray(len(rows))
        self.nodes = 0
        self.best: list[int] | None = None
        self.best_val: int | None = None
        self.tol = Fraction(opts.gap_tolerance)
        self.loose_prune: int | None = None

    # -- domain changes ------------------------------------------------

    def _touch(self, rows: list[int]) -> None:
        inq, queue = self.inq, self.queue
        for i in rows:
            if not inq[i]:
                inq[i] = 1
                queue.append(i)

    def _set(self, j: int, nl: int, nu: int) -> bool:
        lb, ub = self.lb, self.ub
        if nl > nu:
            return False
        if nl == lb[j] and nu == ub[j]:
            return True
        self.trail.append((j, lb[j], ub[j]))
        if nl > lb[j]:
            self._touch(self.rows_up[j])
        if nu < ub[j]:
            self._touch(self.rows_down[j])
        lb[j], ub[j] = nl, nu
        if nl == 1 and self.binary[j] and self.var_cliques[j]:
            for ci in self.var_cliques[j]:
                for m in self.cliques[ci]:
                    if m == j:
                        continue
                    if lb[m] == 1:
                        return False
                    if ub[m] == 1:
                        self.trail.append((m, lb[m], ub[m]))
                        ub[m] = 0
                        self._touch(self.rows_down[m])
        return True

    def _propagate(self) -> bool:
        lb, ub, rows, queue, inq = self.lb, self.ub, self.rows, self.queue, self.inq
        while queue:
            i = queue.pop()
            inq[i] = 0
            cols, vals, rhs = rows[i]
            minact = 0
            spread = 0
            for j, a in zip(cols, vals):
                if a > 0:
                    minact += a * lb[j]
                    r = a * (ub[j] - lb[j])
                else:
                    minact += a * ub[j]
                    r = -a * (ub[j] - lb[j])
                if r > spread:
                    spread = r
            slack = rhs - minact
            if slack < 0:
                self._clear_queue()
                return False
            if spread <= slack:
                continue
            for j, a in zip(cols, vals):
                if a > 0:
                    if (ub[j] - lb[j]) * a > slack:
                        if not self._set(j, lb[j], lb[j] + slack // a):
                            self._clear_queue()
                            return False
                elif (ub[j] - lb[j]) * -a > slack:
                    if not self._set(j, ub[j] - slack // -a, ub[j]):
                        self._clear_queue()
                        return False
        return True

    def _clear_queue(self) -> None:
        for i in self.queue:
            self.inq[i] = 0
        self.queue.clear()

    def _undo(self, mark: int) -> None:
        lb, ub, trail = self.lb, self.ub, self.trail
        while len(trail) > mark:
            j, l, u = trail.pop()
            lb[j], ub[j] = l, u

    # -- bounding ------------------------------------------------------

    def _bound(self) -> int | None:
        """Upper bound (max form) on the subtree, or None if a knapsack hint is already overfull."""
        c, lb, ub = self.c, self.lb, self.ub
        b = 0
        for j in self.neg:
            b += c[j] * lb[j]
        for j in self.pos_int:
            b += c[j] * ub[j]
        base = b
        for g in self.groups:
            best = 0
            for j in g:
                if lb[j]:
                    best = c[j]
                    break
                if ub[j] and c[j] > best:
                    best = c[j]
            b += best
        if self.knaps and (self.best_val is None or b > self.best_val):
            for knap in self.knaps:
                kb = self._knapsack_bound(knap)
                if kb is None:
                    return None
                if base + kb < b:
                    b = base + kb
                    if self.best_val is not None and b <= self.best_val:
                        break
        return b

    def _knapsack_bound(self, knap) -> int | None:
        """Greedy (fractional, rounded down) knapsack over the open groups; None if overfull."""
        entries, per_group, cap = knap
        c, lb, ub = self.c, self.lb, self.ub
        for j, w in entries:
            if lb[j]:
                cap -= w * lb[j]
        if cap < 0:
            return None
        total = 0
        items = []
        for g, wmap in zip(self.groups, per_group):
            best = 0
            minw = None
            for j in g:
                if lb[j]:
                    total += c[j]
                    best = 0
                    break
                if ub[j]:
                    if c[j] > best:
                        best = c[j]
                    w = wmap.get(j, 0)
                    if minw is None or w < minw:
                        minw = w
            if best:
                if minw:
                    items.append((best, minw))
                else:
                    total += best
        items.sort(key=lambda it: (-Fraction(it[0], it[1]), it[1]))
        for val, w in items:
            if w <= cap:
                cap -= w
                total += val
            else:
                total += val * cap // w
                break
        return total

    def _prunable(self, bound: int) -> bool:
        if self.best_val is None:
            return False
        if bound <= self.best_val:
            return True
        if self.tol and bound - self.best_val <= self.tol * max(1, abs(self.best_val)):
            self.loose_prune = bound if self.loose_prune is None else max(self.loose_prune, bound)
            return True
        return False

    def _children(self, j: int) -> list[tuple[int, int]]:
        l, u, cj = self.lb[j], self.ub[j], self.c[j]
        if cj > 0:
            return [(u, u), (l, u - 1)]
        return [(l, l), (l + 1, u)]

    def _expand(self, start: int, focus: int):
        self.nodes += 1
        if (self.nodes & 127) == 0 and self.deadline.expired():
            raise _Timeout
        bound = self._bound()
        if bound is None or self._prunable(bound):
            return None
        lb, ub, order, n = self.lb, self.ub, self.order, self.n
        k = start
        while k < n and lb[order[k]] == ub[order[k]]:
            k += 1
        if k == n:
            val = sum(self.c[j] * lb[j] for j in range(n) if self.c[j])
            if self.best_val is None or val > self.best_val:
                self.best_val = val
                self.best = list(lb)
            return None
        j = order[k]
        if focus >= 0:
            for m in self.partners[focus]:
                if lb[m] != ub[m]:
                    j = m
                    break
            else:
                focus = -1
        return [k, j, self._children(j), 0, len(self.trail), focus]

    # -- driver --------------------------------------------------------

    def run(self) -> SolveResult:
        self.deadline = Deadline(self.opts.time_limit)
        ws = self.model.warm_start
        if ws is not None and self.model.is_feasible(ws):
            full = [int(ws.get(j, 0)) for j in range(self.n)]
            self.best = full
            self.best_val = sum(self.c[j] * full[j] for j in range(self.n))
        root_bound = None
        try:
            if self.deadline.expired():
                raise _Timeout
            for i in range(len(self.rows)):
                self.inq[i] = 1
                self.queue.append(i)
            if not self._propagate():
                return self._finish(Status.OPTIMAL if self.best is not None else Status.INFEASIBLE, None)
            root_bound = self._bound()
            if root_bound is None:
                return self._finish(Status.OPTIMAL if self.best is not None else Status.INFEASIBLE, None)
            stack = []
            frame = self._expand(0, -1)
            if frame:
                stack.append(frame)
            while stack:
                frame = stack[-1]
                self._undo(frame[4])
                if frame[3] >= len(frame[2]):
                    stack.pop()
                    continue
                nl, nu = frame[2][frame[3]]
                frame[3] += 1
                if self._set(frame[1], nl, nu) and self._propagate():
                    j = frame[1]
                    focus = j if nl > 0 and self.partners[j] else frame[5]
                    child = self._expand(frame[0], focus)
                    if child:
                        stack.append(child)
                else:
                    self._clear_queue()
        except _Timeout:
            if root_bound is None:
                root_bound = self._root_bound_estimate()
            return self._finish(Status.FEASIBLE if self.best is not None else Status.NO_SOLUTION, root_bound)
        if self.best is None:
            return self._finish(Status.INFEASIBLE, None)
        if self.loose_prune is not None and self.loose_prune > self.best_val:
            return self._finish(Status.FEASIBLE, self.loose_prune)
        return self._finish(Status.OPTIMAL, None)

    def _root_bound_estimate(self) -> int:
        self._undo(0)
        self._clear_queue()
        bound = self._bound()
        return bound if bound is not None else self.best_val

    def _finish(self, status: Status, bound: int | None) -> SolveResult:
        res = SolveResult(status=status, runtime=self.deadline.elapsed(), nodes=self.nodes)
        if self.best is not None:
            res.assignment = {j: v for j, v in enumerate(self.best)}
            res.objective = self.model.objective_value(res.assignment)
        if status == Status.OPTIMAL:
            res.best_bound = res.objective
        elif bound is not None:
            res.best_bound = self.sign * bound
        return res


def internal_exact(model: MilpModel, opts: SolveOptions) -> SolveResult:
    """Exact depth-first search; deterministic for a given model."""
    return _Search(model, opts).run()

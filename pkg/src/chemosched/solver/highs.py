"""In-process HiGHS backend (highspy) for models beyond the reach of the internal search."""

from __future__ import annotations

import math
import time

import numpy as np

from ..model import MilpModel
from .types import SolveOptions, SolveResult, Status


def _load(model: MilpModel):
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    n = model.num_vars
    lp = highspy.HighsLp()
    lp.num_col_ = n
    lp.num_row_ = model.num_constraints
    cost = np.zeros(n)
    for j, c in model.objective.items():
        cost[j] = c
    lp.col_cost_ = cost
    lp.col_lower_ = np.zeros(n)
    lp.col_upper_ = np.asarray(model.var_ub, dtype=float)
    inf = highspy.kHighsInf
    lower, upper, starts, index, value = [], [], [0], [], []
    for con in model.constraints:
        lower.append(con.rhs if con.sense in (">=", "=") else -inf)
        upper.append(con.rhs if con.sense in ("<=", "=") else inf)
        index.append(con.cols)
        value.append(con.vals)
        starts.append(starts[-1] + len(con.cols))
    lp.row_lower_ = np.asarray(lower, dtype=float)
    lp.row_upper_ = np.asarray(upper, dtype=float)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    lp.a_matrix_.num_col_ = n
    lp.a_matrix_.num_row_ = model.num_constraints
    lp.a_matrix_.start_ = np.asarray(starts, dtype=np.int32)
    lp.a_matrix_.index_ = np.concatenate(index).astype(np.int32) if index else np.zeros(0, np.int32)
    lp.a_matrix_.value_ = np.concatenate(value).astype(float) if value else np.zeros(0)
    lp.integrality_ = [highspy.HighsVarType.kInteger] * n
    lp.sense_ = highspy.ObjSense.kMaximize if model.sense == "max" else highspy.ObjSense.kMinimize
    h.passModel(lp)
    return h, highspy


def run_highs(h, highspy, model: MilpModel, opts: SolveOptions, warm_start=None) -> SolveResult:
    """Solve an already loaded HiGHS object and translate the outcome."""
    h.setOptionValue("time_limit", float(opts.time_limit))
    h.setOptionValue("random_seed", int(opts.deterministic_seed))
    h.setOptionValue("threads", 1)
    h.setOptionValue("mip_rel_gap", float(opts.gap_tolerance))
    # objectives are integral, so a gap below one already proves optimality
    h.setOptionValue("mip_abs_gap", 0.999)
    if warm_start is not None:
        sol = highspy.HighsSolution()
        sol.col_value = [float(warm_start.get(j, 0)) for j in range(model.num_vars)]
        sol.value_valid = True
        h.setSolution(sol)
    t0 = time.perf_counter()
    h.run()
    runtime = time.perf_counter() - t0
    ms = h.getModelStatus()
    info = h.getInfo()
    res = SolveResult(Status.BACKEND_ERROR, runtime=runtime, nodes=int(info.mip_node_count))
    MS = highspy.HighsModelStatus
    if ms == MS.kInfeasible:
        res.status = Status.INFEASIBLE
        return res
    has_sol = info.primal_solution_status == 2
    if has_sol:
        vals = h.getSolution().col_value
        res.assignment = {j: int(round(v)) for j, v in enumerate(vals)}
        res.objective = model.objective_value(res.assignment)
    if ms == MS.kOptimal or (ms == MS.kModelEmpty):
        if not has_sol and model.num_vars == 0:
            res.assignment, res.objective = {}, 0
        res.status = Status.OPTIMAL
        res.best_bound = res.objective
        return res
    if ms in (MS.kTimeLimit, MS.kInterrupt, MS.kIterationLimit, MS.kSolutionLimit, MS.kUnknown):
        res.status = Status.FEASIBLE if res.assignment is not None else Status.NO_SOLUTION
        db = info.mip_dual_bound
        if math.isfinite(db):
            res.best_bound = math.floor(db + 1e-6) if model.sense == "max" else math.ceil(db - 1e-6)
        return res
    res.message = f"HiGHS ended with model status {h.modelStatusToString(ms)}"
    return res


def highs_solve(model: MilpModel, opts: SolveOptions) -> SolveResult:
    h, highspy = _load(model)
    return run_highs(h, highspy, model, opts, model.warm_start)

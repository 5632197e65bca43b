"""Uniform solve contract over the internal, external, in-process HiGHS and oracle backends."""

from __future__ import annotations

from ..model import MilpModel
from .internal import internal_exact
from .mps import read_model, read_solution, write_model, write_solution
from .oracle import LexicoOptimum, OracleSizeError, brute_force_lexico, oracle_exact
from .types import Deadline, SolveOptions, SolveResult, SolverError, Status

__all__ = [
    "Deadline",
    "LexicoOptimum",
    "OracleSizeError",
    "SolveOptions",
    "SolveResult",
    "SolverError",
    "Status",
    "brute_force_lexico",
    "internal_exact",
    "oracle_exact",
    "read_model",
    "read_solution",
    "solve",
    "write_model",
    "write_solution",
]


def solve(model: MilpModel, opts: SolveOptions | None = None) -> SolveResult:
    """Solve ``model`` with the chosen backend and check the answer row by row.

    A warm start that satisfies every row is kept as the incumbent if the
    backend returns nothing better. One that already reaches the model's
    ``objective_bound`` is returned as optimal without calling the backend. Any assignment a backend returns that breaks
    a row turns the result into a backend error.
    """
    opts = opts or SolveOptions()
    ws = model.warm_start
    if ws is not None and model.objective_bound is not None and model.is_feasible(ws):
        ws_val = model.objective_value(ws)
        if ws_val == model.objective_bound:
            return SolveResult(
                Status.OPTIMAL,
                assignment={j: int(ws.get(j, 0)) for j in range(model.num_vars)},
                objective=ws_val,
                best_bound=ws_val,
                message="warm start attains the known objective bound",
            )

    if opts.backend == "internal":
        res = internal_exact(model, opts)
    elif opts.backend == "oracle":
        res = oracle_exact(model, opts)
    elif opts.backend == "highs":
        from .highs import highs_solve

        res = highs_solve(model, opts)
    else:
        from .external import external_solve

        res = external_solve(model, opts)

    if res.assignment is not None:
        bad = model.violations(res.assignment)
        if bad:
            return SolveResult(
                Status.BACKEND_ERROR,
                runtime=res.runtime,
                message=f"{opts.backend} backend returned an infeasible point: {bad[0]}",
            )

    if ws is not None and res.status in (Status.FEASIBLE, Status.NO_SOLUTION) and model.is_feasible(ws):
        ws_val = model.objective_value(ws)
        better = res.objective is None or (
            ws_val > res.objective if model.sense == "max" else ws_val < res.objective
        )
        if better:
            res.assignment = {j: int(ws.get(j, 0)) for j in range(model.num_vars)}
            res.objective = ws_val
            res.status = Status.FEASIBLE
    return res

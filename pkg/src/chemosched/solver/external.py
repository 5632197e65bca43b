"""File-exchange backend: write MPS, run ``command model.mps solution.out seconds``, read back."""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
import time
from pathlib import Path

from ..model import MilpModel
from .mps import SolutionFormatError, parse_solution, write_model, write_start
from .types import SolveOptions, SolveResult, Status

# extra wall-clock allowance for process start-up and file I/O
GRACE_SECONDS = 30.0


def external_solve(model: MilpModel, opts: SolveOptions) -> SolveResult:
    with tempfile.TemporaryDirectory(prefix="chemosched-") as tmp:
        mps = Path(tmp) / "model.mps"
        out = Path(tmp) / "solution.out"
        write_model(model, mps)
        if model.warm_start is not None:
            write_start(mps.with_suffix(".start"), model, model.warm_start)
        cmd = shlex.split(opts.command) + [str(mps), str(out), f"{opts.time_limit:g}"]
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=opts.time_limit + GRACE_SECONDS
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            return SolveResult(Status.BACKEND_ERROR, runtime=time.perf_counter() - t0, message=str(exc))
        runtime = time.perf_counter() - t0
        if proc.returncode == 2:
            return SolveResult(Status.INFEASIBLE, runtime=runtime)
        if proc.returncode != 0:
            msg = proc.stderr.strip() or f"exit status {proc.returncode}"
            return SolveResult(Status.BACKEND_ERROR, runtime=runtime, message=msg)
        if not out.exists():
            return SolveResult(Status.BACKEND_ERROR, runtime=runtime, message="no solution file written")
        try:
            sol = parse_solution(out.read_text(), model)
        except SolutionFormatError as exc:
            return SolveResult(Status.BACKEND_ERROR, runtime=runtime, message=str(exc))

    res = SolveResult(Status.FEASIBLE, runtime=runtime)
    status = sol.status
    if status == "Infeasible":
        res.status = Status.INFEASIBLE
        return res
    if sol.values or status != "NoSolutionTimeLimit":
        res.assignment = {j: sol.values.get(j, 0) for j in range(model.num_vars)}
        res.objective = model.objective_value(res.assignment)
    if status == "NoSolutionTimeLimit" and res.assignment is None:
        res.status = Status.NO_SOLUTION
    elif status == "Optimal":
        res.status = Status.OPTIMAL
        res.best_bound = res.objective
        return res
    if sol.bound is not None and math.isfinite(sol.bound):
        res.best_bound = math.floor(sol.bound + 1e-6) if model.sense == "max" else math.ceil(sol.bound - 1e-6)
    return res

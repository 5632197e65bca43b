"""External-backend executable built on HiGHS.

Usage: ``python3 -m chemosched.solver.highs_runner MODEL.mps SOLUTION.out TIME_LIMIT``

The model is read with HiGHS' own MPS reader. If ``MODEL.start`` exists next
to the model it is read as a warm start (``name value`` lines). Exit status is
0 when a solution (or a proof of optimality) was written, 2 when the model is
infeasible and 1 on any other outcome.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path


def main(argv: list[str] | None = None) -> int:
    import highspy

    args = sys.argv[1:] if argv is None else argv
    if len(args) != 3:
        print(__doc__.strip().splitlines()[2], file=sys.stderr)
        return 1
    model_path, sol_path, limit = Path(args[0]), Path(args[1]), float(args[2])
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(str(model_path)) != highspy.HighsStatus.kOk:
        print(f"cannot read model {model_path}", file=sys.stderr)
        return 1
    h.setOptionValue("time_limit", limit)
    h.setOptionValue("threads", 1)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.999)
    names = list(h.getLp().col_names_)
    start_path = model_path.with_suffix(".start")
    if start_path.exists():
        index = {n: j for j, n in enumerate(names)}
        values = [0.0] * len(names)
        for line in start_path.read_text().splitlines():
            tok = line.split()
            if len(tok) == 2 and not tok[0].startswith("#") and tok[0] in index:
                values[index[tok[0]]] = float(tok[1])
        sol = highspy.HighsSolution()
        sol.col_value = values
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    ms = h.getModelStatus()
    MS = highspy.HighsModelStatus
    if ms == MS.kInfeasible:
        sol_path.write_text("# status Infeasible\n")
        return 2
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    if ms == MS.kOptimal:
        status = "Optimal"
    elif ms in (MS.kTimeLimit, MS.kInterrupt, MS.kIterationLimit, MS.kSolutionLimit, MS.kUnknown):
        status = "FeasibleTimeLimit" if has_sol else "NoSolutionTimeLimit"
    else:
        print(f"HiGHS model status {h.modelStatusToString(ms)}", file=sys.stderr)
        return 1
    lines = [f"# status {status}"]
    if has_sol:
        lines.append(f"# objective {info.objective_function_value}")
    if math.isfinite(info.mip_dual_bound):
        lines.append(f"# bound {info.mip_dual_bound}")
    if has_sol:
        for name, v in zip(names, h.getSolution().col_value):
            lines.append(f"{name} {int(round(v))}")
    sol_path.write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

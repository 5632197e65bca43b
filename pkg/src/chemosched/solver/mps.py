"""MPS model export/import and the plain-text solution file format.

Variable and row names routinely exceed eight characters, so fields are
separated by whitespace (the reader is whitespace-based as well). Integer
columns sit between INTORG/INTEND markers and every column gets an explicit
upper bound. Maximization is declared with an OBJSENSE section.

Solution files hold one ``name value`` pair per line. Lines starting with
``#`` are comments; ``# status``, ``# objective`` and ``# bound`` comments are
read back as metadata when present.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from ..model import BINARY, INTEGER, MilpModel

OBJ_ROW = "OBJ"
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


class MpsFormatError(ValueError):
    pass


class SolutionFormatError(ValueError):
    pass


def model_to_mps(model: MilpModel) -> str:
    lines = [f"NAME          {model.name}"]
    if model.sense == "max":
        lines += ["OBJSENSE", "    MAX"]
    lines += ["ROWS", f" N  {OBJ_ROW}"]
    for con in model.constraints:
        lines.append(f" {_SENSE_CODE[con.sense]}  {con.name}")
    entries: dict[int, list[tuple[str, int]]] = defaultdict(list)
    for j, c in sorted(model.objective.items()):
        entries[j].append((OBJ_ROW, c))
    for con in model.constraints:
        for j, a in zip(con.cols.tolist(), con.vals.tolist()):
            entries[j].append((con.name, a))
    lines.append("COLUMNS")
    lines.append("    MARKER    'MARKER'    'INTORG'")
    for j, name in enumerate(model.var_names):
        col = entries.get(j) or [(OBJ_ROW, 0)]
        for row, a in col:
            lines.append(f"    {name}  {row}  {int(a)}")
    lines.append("    MARKER    'MARKER'    'INTEND'")
    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0:
            lines.append(f"    RHS  {con.name}  {con.rhs}")
    lines.append("BOUNDS")
    for name, ub in zip(model.var_names, model.var_ub):
        lines.append(f" UP BND  {name}  {ub}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def write_model(model: MilpModel, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(model_to_mps(model))
    return path


def _int_token(tok: str, where: str) -> int:
    try:
        q = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise MpsFormatError(f"{where}: not a number: {tok!r}") from None
    if q.denominator != 1:
        raise MpsFormatError(f"{where}: non-integer value {tok!r}")
    return int(q)


def read_model(path: str | Path) -> MilpModel:
    """Parse an MPS file written by :func:`write_model` (or any integer-only whitespace MPS)."""
    text = Path(path).read_text()
    model = MilpModel("model")
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    row_terms: dict[str, dict[int, int]] = defaultdict(dict)
    rhs: dict[str, int] = {}
    objective: dict[int, int] = {}
    obj_row = None
    sense = "min"
    integer_block = False
    kinds: dict[str, str] = {}
    ubs: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        where = f"line {lineno}"
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME" and len(head) > 1:
                model.name = head[1]
            if section == "OBJSENSE" and len(head) > 1:
                sense = "max" if head[1].upper().startswith("MAX") else "min"
            if section == "ENDATA":
                break
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            sense = "max" if tok[0].upper().startswith("MAX") else "min"
        elif section == "ROWS":
            code, name = tok[0], tok[1]
            if code == "N":
                obj_row = obj_row or name
            elif code in _CODE_SENSE:
                row_sense[name] = _CODE_SENSE[code]
                row_order.append(name)
            else:
                raise MpsFormatError(f"{where}: unknown row type {code!r}")
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'") == "MARKER":
                integer_block = tok[2].strip("'") == "INTORG"
                continue
            col = tok[0]
            if col not in kinds:
                kinds[col] = INTEGER if integer_block else "continuous"
                model.add_var(col, INTEGER, ub=10**9)
            j = model.var_id(col)
            pairs = tok[1:]
            if len(pairs) % 2:
                raise MpsFormatError(f"{where}: odd number of fields")
            for row, val in zip(pairs[::2], pairs[1::2]):
                a = _int_token(val, where)
                if row == obj_row:
                    if a:
                        objective[j] = a
                elif row in row_sense:
                    if a:
                        row_terms[row][j] = a
                else:
                    raise MpsFormatError(f"{where}: unknown row {row!r}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 else tok
            for row, val in zip(pairs[::2], pairs[1::2]):
                if row not in row_sense:
                    raise MpsFormatError(f"{where}: unknown row {row!r}")
                rhs[row] = _int_token(val, where)
        elif section == "BOUNDS":
            code, col, val = tok[0], tok[2], tok[3] if len(tok) > 3 else None
            if col not in kinds:
                raise MpsFormatError(f"{where}: unknown column {col!r}")
            if code == "UP":
                ubs[col] = _int_token(val, where)
            elif code == "BV":
                ubs[col] = 1
            elif code == "LO" and _int_token(val, where) == 0:
                pass
            else:
                raise MpsFormatError(f"{where}: unsupported bound {code!r}")
        else:
            raise MpsFormatError(f"{where}: data outside a known section")
    for col, kind in kinds.items():
        if kind != INTEGER:
            raise MpsFormatError(f"column {col!r} is not integer")
        j = model.var_id(col)
        ub = ubs.get(col)
        if ub is None:
            raise MpsFormatError(f"column {col!r} has no upper bound")
        model.var_ub[j] = ub
        model.var_kinds[j] = BINARY if ub == 1 else INTEGER
    for row in row_order:
        model.add_constraint(dict(row_terms[row]), row_sense[row], rhs.get(row, 0), row)
    model.set_objective(sense, objective)
    return model


# -- solutions -----------------------------------------------------------------


@dataclass
class SolutionFile:
    values: dict[int, int] = field(default_factory=dict)
    status: str | None = None
    objective: int | None = None
    bound: int | None = None
    unknown: list[str] = field(default_factory=list)


def _solution_value(tok: str, lineno: int) -> int:
    try:
        x = float(tok)
    except ValueError:
        raise SolutionFormatError(f"line {lineno}: cannot parse value {tok!r}") from None
    r = round(x)
    if abs(x - r) > 1e-6:
        raise SolutionFormatError(f"line {lineno}: non-integer value {tok}")
    return int(r)


def parse_solution(text: str, model: MilpModel) -> SolutionFile:
    out = SolutionFile()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tok = line[1:].split()
            if len(tok) >= 2 and tok[0] in ("status", "objective", "bound"):
                if tok[0] == "status":
                    out.status = tok[1]
                else:
                    try:
                        val = float(tok[1])
                    except ValueError:
                        raise SolutionFormatError(f"line {lineno}: bad {tok[0]} {tok[1]!r}") from None
                    setattr(out, tok[0], val)
            continue
        tok = line.split()
        if len(tok) != 2:
            raise SolutionFormatError(f"line {lineno}: expected 'name value', got {line!r}")
        name, val = tok
        try:
            j = model.var_id(name)
        except KeyError:
            out.unknown.append(name)
            continue
        v = _solution_value(val, lineno)
        if model.var_kinds[j] == BINARY and v not in (0, 1):
            raise SolutionFormatError(f"line {lineno}: binary {name} has value {val}")
        if not 0 <= v <= model.var_ub[j]:
            raise SolutionFormatError(f"line {lineno}: {name}={val} outside [0, {model.var_ub[j]}]")
        out.values[j] = v
    return out


def read_solution(path: str | Path, model: MilpModel) -> dict[int, int]:
    """Assignment (variable id to value) from a solution file; absent variables are 0."""
    sol = parse_solution(Path(path).read_text(), model)
    return {j: sol.values.get(j, 0) for j in range(model.num_vars)}


def format_solution(
    model: MilpModel,
    assignment: Mapping[int, int] | None,
    status: str | None = None,
    objective: int | float | None = None,
    bound: int | float | None = None,
) -> str:
    lines = []
    if status is not None:
        lines.append(f"# status {status}")
    if objective is not None:
        lines.append(f"# objective {objective}")
    if bound is not None:
        lines.append(f"# bound {bound}")
    if assignment is not None:
        for j, name in enumerate(model.var_names):
            lines.append(f"{name} {int(assignment.get(j, 0))}")
    return "\n".join(lines) + "\n"


def write_solution(path: str | Path, model: MilpModel, assignment: Mapping[int, int] | None, **meta) -> Path:
    path = Path(path)
    path.write_text(format_solution(model, assignment, **meta))
    return path


def write_start(path: str | Path, model: MilpModel, assignment: Mapping[int, int]) -> Path:
    """Warm-start sidecar in the solution-file format."""
    return write_solution(path, model, assignment)

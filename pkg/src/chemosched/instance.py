"""Problem instances: one planning week of chemotherapy appointment requests.

Slots, days, rooms, beds and chairs are all 1-based. The MCP tensor is indexed
``mcp[r-1][k][t-1]`` with ``k`` the position of the pathology in
``Instance.pathologies``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

PATIENT_ID_RE = re.compile(r"^[A-Za-z0-9.\-]+$")

# Average weekly shares per cancer macro-group (percent of patients).
DEFAULT_SHARES: dict[str, float] = {
    "HE": 32.31,
    "GI": 11.90,
    "UR": 6.95,
    "GY": 4.09,
    "BR": 30.81,
    "OT": 14.58,
    "LU": 15.69,
}


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed or violates the schema."""

    def __init__(self, message: str, problems: Sequence[str] = ()):
        super().__init__(message)
        self.problems = list(problems)


@dataclass(frozen=True)
class Patient:
    id: str
    pathology: str
    visit_duration: int
    infusion_duration: int
    critical: bool = False


@dataclass(frozen=True)
class Violation:
    """A broken instance invariant: which entity, which rule, and a readable message."""

    entity: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.entity}: {self.rule} ({self.message})"


@dataclass(frozen=True)
class Instance:
    days: int
    slots_per_day: int
    visit_slots: int
    pathologies: tuple[str, ...]
    room_count: int
    bed_count: int
    chair_count: int
    patients: tuple[Patient, ...]
    mcp: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pathologies", tuple(self.pathologies))
        object.__setattr__(self, "patients", tuple(self.patients))
        object.__setattr__(
            self, "mcp", tuple(tuple(tuple(int(v) for v in row) for row in room) for room in self.mcp)
        )

    # -- index helpers -------------------------------------------------

    @property
    def day_range(self) -> range:
        return range(1, self.days + 1)

    @cached_property
    def pathology_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.pathologies)}

    @cached_property
    def patient_index(self) -> dict[str, int]:
        return {p.id: i for i, p in enumerate(self.patients)}

    def patient(self, pid: str) -> Patient:
        return self.patients[self.patient_index[pid]]

    def w(self, r: int, k: str | int, t: int) -> int:
        ki = k if isinstance(k, int) else self.pathology_index[k]
        return self.mcp[r - 1][ki][t - 1]

    def rooms_for(self, pathology: str, t: int) -> list[int]:
        """Rooms devoted to ``pathology`` on day ``t``."""
        ki = self.pathology_index.get(pathology)
        if ki is None:
            return []
        return [r for r in range(1, self.room_count + 1) if self.mcp[r - 1][ki][t - 1]]

    @cached_property
    def _room_counts(self) -> dict[tuple[str, int], int]:
        return {
            (k, t): len(self.rooms_for(k, t)) for k in self.pathologies for t in self.day_range
        }

    def room_capacity(self, pathology: str, t: int) -> int:
        return self._room_counts.get((pathology, t), 0)

    def treatable_days(self, p: Patient) -> list[int]:
        return [t for t in self.day_range if self.room_capacity(p.pathology, t) > 0]

    @property
    def critical_patients(self) -> list[Patient]:
        return [p for p in self.patients if p.critical]

    @property
    def noncritical_patients(self) -> list[Patient]:
        return [p for p in self.patients if not p.critical]

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "days": self.days,
            "slots_per_day": self.slots_per_day,
            "visit_slots": self.visit_slots,
            "pathologies": list(self.pathologies),
            "rooms": self.room_count,
            "beds": self.bed_count,
            "chairs": self.chair_count,
            "mcp": [[list(row) for row in room] for room in self.mcp],
            "patients": [
                {
                    "id": p.id,
                    "pathology": p.pathology,
                    "visit": p.visit_duration,
                    "infusion": p.infusion_duration,
                    "critical": p.critical,
                }
                for p in self.patients
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Instance":
        return cls(
            days=doc["days"],
            slots_per_day=doc["slots_per_day"],
            visit_slots=doc["visit_slots"],
            pathologies=tuple(doc["pathologies"]),
            room_count=doc["rooms"],
            bed_count=doc["beds"],
            chair_count=doc["chairs"],
            patients=tuple(
                Patient(
                    id=str(p["id"]),
                    pathology=p["pathology"],
                    visit_duration=p["visit"],
                    infusion_duration=p["infusion"],
                    critical=bool(p["critical"]),
                )
                for p in doc["patients"]
            ),
            mcp=doc["mcp"],
        )

    def dumps(self) -> str:
        """Canonical text form (stable key order, UTF-8, integers only)."""
        doc = self.to_dict()
        lines = ["{"]
        for key in ("days", "slots_per_day", "visit_slots", "pathologies", "rooms", "beds", "chairs"):
            lines.append(f"  {json.dumps(key)}: {json.dumps(doc[key])},")
        lines.append('  "mcp": [')
        lines.append(",\n".join(f"    {json.dumps(room)}" for room in doc["mcp"]))
        lines.append("  ],")
        lines.append('  "patients": [')
        lines.append(",\n".join(f"    {json.dumps(p)}" for p in doc["patients"]))
        lines.append("  ]")
        lines.append("}")
        return "\n".join(lines) + "\n"


INSTANCE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": [
        "days", "slots_per_day", "visit_slots", "pathologies", "rooms", "beds", "chairs", "mcp", "patients",
    ],
    "additionalProperties": False,
    "properties": {
        "days": {"type": "integer", "minimum": 0},
        "slots_per_day": {"type": "integer", "minimum": 1},
        "visit_slots": {"type": "integer", "minimum": 0},
        "pathologies": {"type": "array", "items": {"type": "string", "pattern": PATIENT_ID_RE.pattern}},
        "rooms": {"type": "integer", "minimum": 0},
        "beds": {"type": "integer", "minimum": 0},
        "chairs": {"type": "integer", "minimum": 0},
        "mcp": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "integer", "enum": [0, 1]}},
            },
        },
        "patients": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "pathology", "visit", "infusion", "critical"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": PATIENT_ID_RE.pattern},
                    "pathology": {"type": "string"},
                    "visit": {"type": "integer", "minimum": 1},
                    "infusion": {"type": "integer", "minimum": 1},
                    "critical": {"type": "boolean"},
                },
            },
        },
    },
}


def validate_instance(inst: Instance) -> list[Violation]:
    """Check every structural invariant; an empty list means the instance is well formed."""
    out: list[Violation] = []
    H, HV = inst.slots_per_day, inst.visit_slots
    for name, value in (
        ("days", inst.days), ("rooms", inst.room_count), ("beds", inst.bed_count),
        ("chairs", inst.chair_count), ("visit_slots", HV),
    ):
        if value < 0:
            out.append(Violation("instance", "nonnegative count", f"{name}={value}"))
    if H < 1:
        out.append(Violation("instance", "positive slots_per_day", f"slots_per_day={H}"))
    if HV > H:
        out.append(Violation("instance", "visit_slots <= slots_per_day", f"{HV} > {H}"))
    if len(set(inst.pathologies)) != len(inst.pathologies):
        out.append(Violation("instance", "distinct pathologies", ",".join(inst.pathologies)))

    K = len(inst.pathologies)
    if len(inst.mcp) != inst.room_count:
        out.append(
            Violation("mcp", "shape", f"expected {inst.room_count} rooms, got {len(inst.mcp)}")
        )
    for r, room in enumerate(inst.mcp, start=1):
        if len(room) != K or any(len(row) != inst.days for row in room):
            out.append(Violation(f"room {r}", "shape", f"expected {K}x{inst.days} entries"))
            continue
        for t in range(1, inst.days + 1):
            load = sum(room[k][t - 1] for k in range(K))
            if load > 1:
                out.append(
                    Violation(
                        f"room r={r}, day t={t}",
                        "single pathology per room and day",
                        f"{load} pathologies assigned",
                    )
                )

    seen: set[str] = set()
    for p in inst.patients:
        ent = f"patient {p.id}"
        if p.id in seen:
            out.append(Violation(ent, "unique id", "duplicate patient id"))
        seen.add(p.id)
        if not PATIENT_ID_RE.match(p.id):
            out.append(Violation(ent, "id format", "ids must match [A-Za-z0-9.-]+"))
        if p.pathology not in inst.pathology_index:
            out.append(Violation(ent, "known pathology", f"{p.pathology!r} not in pathologies"))
            continue
        if p.visit_duration < 1 or p.infusion_duration < 1:
            out.append(Violation(ent, "positive durations", f"v={p.visit_duration}, f={p.infusion_duration}"))
            continue
        if p.visit_duration > HV or p.visit_duration + p.infusion_duration > H:
            out.append(
                Violation(
                    ent,
                    "unschedulable patient",
                    f"v={p.visit_duration}, f={p.infusion_duration}, |H|={H}, |H_V|={HV}",
                )
            )
        elif len(inst.mcp) == inst.room_count and not inst.treatable_days(p):
            out.append(Violation(ent, "unschedulable patient", f"no room for pathology {p.pathology}"))
    return out


# -- persistence -------------------------------------------------------


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise InstanceFormatError(
            f"parse error at line {exc.lineno} column {exc.colno} (byte offset {offset}): {exc.msg}"
        ) from exc
    validator = jsonschema.Draft202012Validator(INSTANCE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        problems = [
            f"{'/'.join(str(x) for x in e.absolute_path) or '<root>'}: {e.message}" for e in errors
        ]
        raise InstanceFormatError("schema violation: " + "; ".join(problems), problems)
    return Instance.from_dict(doc)


def load(path: str | Path) -> Instance:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(inst.dumps(), encoding="utf-8")


# -- synthetic generator -----------------------------------------------


@dataclass
class GeneratorParams:
    """Knobs for :func:`generate`; defaults describe a typical week of the reference center."""

    seed: int = 0
    total_patients: int = 614
    critical_fraction: float = 0.2848
    pathology_shares: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SHARES))
    visit_duration_by_group: dict[str, int] = field(default_factory=dict)
    infusion_slot_range_by_group: dict[str, tuple[int, int]] = field(default_factory=dict)
    default_visit: int = 1
    default_infusion_range: tuple[int, int] = (6, 24)
    days: int = 5
    slots_per_day: int = 54
    visit_slots: int = 36
    rooms: int = 6
    beds: int = 27
    chairs: int = 26
    dedicated_group: str | None = "HE"
    dedicated_rooms: int = 3
    mcp_policy: str = "proportional"  # or "round_robin"
    mcp: Sequence[Sequence[Sequence[int]]] | None = None

    def __post_init__(self) -> None:
        if not self.visit_duration_by_group and "HE" in self.pathology_shares:
            self.visit_duration_by_group = {"HE": 2}

    def visit_for(self, k: str) -> int:
        return self.visit_duration_by_group.get(k, self.default_visit)

    def infusion_range_for(self, k: str) -> tuple[int, int]:
        return tuple(self.infusion_slot_range_by_group.get(k, self.default_infusion_range))

    def normalized_shares(self) -> dict[str, float]:
        total = sum(self.pathology_shares.values())
        return {k: v / total for k, v in self.pathology_shares.items()}

    def check(self) -> None:
        problems = []
        if self.total_patients < 0:
            problems.append("total_patients must be >= 0")
        if not 0.0 <= self.critical_fraction <= 1.0:
            problems.append("critical_fraction must lie in [0, 1]")
        if not self.pathology_shares or any(v < 0 for v in self.pathology_shares.values()):
            problems.append("pathology_shares must be non-empty and nonnegative")
        elif sum(self.pathology_shares.values()) <= 0:
            problems.append("pathology_shares must have a positive total")
        if self.days < 1 or self.slots_per_day < 1 or not 1 <= self.visit_slots <= self.slots_per_day:
            problems.append("need days >= 1 and 1 <= visit_slots <= slots_per_day")
        if min(self.rooms, self.beds, self.chairs) < 0:
            problems.append("resource counts must be >= 0")
        if self.mcp_policy not in ("proportional", "round_robin"):
            problems.append(f"unknown mcp_policy {self.mcp_policy!r}")
        for k in self.pathology_shares:
            v = self.visit_for(k)
            lo, hi = self.infusion_range_for(k)
            if v < 1 or v > self.visit_slots:
                problems.append(f"visit duration of {k} must lie in [1, visit_slots]")
            if lo < 1 or hi < lo or v + hi > self.slots_per_day:
                problems.append(f"infusion range of {k} must satisfy 1 <= min <= max and v + max <= slots_per_day")
        if problems:
            raise ValueError("invalid generator parameters: " + "; ".join(problems))


def default_mcp(params: GeneratorParams) -> list[list[list[int]]]:
    """Dedicated rooms for one group every day, remaining room-days rotated among the others.

    With the ``proportional`` policy each rotating group receives a number of
    room-days proportional to its expected visit workload (largest remainder,
    at least one each while room-days last); the room-days are then dealt in
    round-robin order of group index. ``round_robin`` deals them one group at a
    time regardless of demand.
    """
    groups = list(params.pathology_shares)
    K = len(groups)
    mcp = [[[0] * params.days for _ in range(K)] for _ in range(params.rooms)]
    dedicated = params.dedicated_group if params.dedicated_group in groups else None
    n_ded = min(params.dedicated_rooms, params.rooms) if dedicated else 0
    for r in range(n_ded):
        for t in range(params.days):
            mcp[r][groups.index(dedicated)][t] = 1
    rotating = [k for k in groups if k != dedicated]
    slots = [(t, r) for t in range(params.days) for r in range(n_ded, params.rooms)]
    if not rotating or not slots:
        return mcp

    if params.mcp_policy == "round_robin":
        order = [rotating[i % len(rotating)] for i in range(len(slots))]
    else:
        shares = params.normalized_shares()
        load = np.array([shares[k] * params.visit_for(k) for k in rotating])
        quota = np.zeros(len(rotating), dtype=int)
        n = len(slots)
        if n >= len(rotating):
            quota += 1
        remaining = n - int(quota.sum())
        if load.sum() > 0 and remaining > 0:
            target = load / load.sum() * n - quota
            target = np.maximum(target, 0.0)
            if target.sum() > 0:
                target = target / target.sum() * remaining
            base = np.floor(target).astype(int)
            quota += base
            left = remaining - int(base.sum())
            frac = target - base
            for i in sorted(range(len(rotating)), key=lambda i: (-frac[i], i))[:left]:
                quota[i] += 1
        order = []
        left = quota.copy()
        while len(order) < n:
            for i in range(len(rotating)):
                if left[i] > 0:
                    order.append(rotating[i])
                    left[i] -= 1
    for (t, r), k in zip(slots, order):
        mcp[r][groups.index(k)][t] = 1
    return mcp


def generate(params: GeneratorParams) -> Instance:
    """Draw a synthetic week; a pure function of ``params`` (seed included)."""
    params.check()
    rng = np.random.default_rng(params.seed)
    shares = params.normalized_shares()
    groups = list(shares)
    n = params.total_patients
    probs = np.array([shares[k] for k in groups])
    probs = probs / probs.sum()
    group_idx = rng.choice(len(groups), size=n, p=probs) if n else np.array([], dtype=int)
    critical = rng.random(n) < params.critical_fraction
    patients = []
    for i in range(n):
        k = groups[int(group_idx[i])]
        lo, hi = params.infusion_range_for(k)
        f = int(rng.integers(lo, hi + 1))
        patients.append(
            Patient(
                id=f"p{i + 1}",
                pathology=k,
                visit_duration=params.visit_for(k),
                infusion_duration=f,
                critical=bool(critical[i]),
            )
        )
    mcp = params.mcp if params.mcp is not None else default_mcp(params)
    return Instance(
        days=params.days,
        slots_per_day=params.slots_per_day,
        visit_slots=params.visit_slots,
        pathologies=tuple(groups),
        room_count=params.rooms,
        bed_count=params.beds,
        chair_count=params.chairs,
        patients=tuple(patients),
        mcp=mcp,
    )


def summary(inst: Instance) -> dict[str, Any]:
    """Per-week statistics in the layout of the usual patient-data table."""
    n = len(inst.patients)
    pct = (lambda c: round(100.0 * c / n, 2)) if n else (lambda c: 0.0)
    crit = sum(p.critical for p in inst.patients)
    groups = {k: sum(p.pathology == k for p in inst.patients) for k in inst.pathologies}
    return {
        "patients": n,
        "critical": crit,
        "critical_pct": pct(crit),
        "groups": {k: {"count": c, "pct": pct(c)} for k, c in groups.items()},
    }


def micro1() -> Instance:
    """The canonical two-patient, one-day test instance."""
    return Instance(
        days=1,
        slots_per_day=6,
        visit_slots=4,
        pathologies=("A",),
        room_count=1,
        bed_count=1,
        chair_count=1,
        patients=(
            Patient("p1", "A", 1, 2, critical=False),
            Patient("p2", "A", 1, 3, critical=True),
        ),
        mcp=[[[1]]],
    )


def tiny_instance(seed: int, max_patients: int = 7, max_slots: int = 10, max_days: int = 2) -> Instance:
    """Random instance small enough for exhaustive enumeration (at most 2 rooms)."""
    rng = np.random.default_rng(seed)
    days = int(rng.integers(1, max_days + 1))
    H = int(rng.integers(5, max_slots + 1))
    HV = int(rng.integers(2, H))
    groups = ("A", "B")[: int(rng.integers(1, 3))]
    rooms = int(rng.integers(1, 3))
    mcp = [[[0] * days for _ in groups] for _ in range(rooms)]
    for r in range(rooms):
        for t in range(days):
            k = int(rng.integers(0, len(groups) + 1))  # last value leaves the room closed
            if k < len(groups):
                mcp[r][k][t] = 1
    for k in range(len(groups)):
        if not any(mcp[r][k][t] for r in range(rooms) for t in range(days)):
            r, t = int(rng.integers(0, rooms)), int(rng.integers(0, days))
            if not any(mcp[r][q][t] for q in range(len(groups))):
                mcp[r][k][t] = 1
    n = int(rng.integers(2, max_patients + 1))
    patients = []
    for i in range(n):
        v = int(rng.integers(1, 3))
        f = int(rng.integers(1, max(2, min(5, H - v)) + 1))
        patients.append(
            Patient(f"p{i + 1}", groups[int(rng.integers(0, len(groups)))], v, f, bool(rng.random() < 0.35))
        )
    return Instance(
        days=days,
        slots_per_day=H,
        visit_slots=HV,
        pathologies=groups,
        room_count=rooms,
        bed_count=int(rng.integers(1, 3)),
        chair_count=int(rng.integers(0, 3)),
        patients=tuple(patients),
        mcp=mcp,
    )

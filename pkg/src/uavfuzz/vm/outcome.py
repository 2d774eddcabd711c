"""Execution results shared by the compiled and reference interpreters."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from ..minir.ir import Location, SafetyProperty


class Status(str, Enum):
    COMPLETED = "Completed"
    FAULT = "Fault"
    BUDGET_EXHAUSTED = "BudgetExhausted"


def path_hash(codes) -> int:
    """Stable 64-bit id of a decision list given as ``site * 2 + taken`` codes."""
    raw = np.asarray(codes, dtype="<i8").tobytes()
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class ExecutionPath:
    decisions: tuple[tuple[int, int], ...]

    @classmethod
    def from_codes(cls, codes) -> "ExecutionPath":
        return cls(tuple((int(c) >> 1, int(c) & 1) for c in codes))

    @cached_property
    def codes(self) -> tuple[int, ...]:
        return tuple(s * 2 + t for s, t in self.decisions)

    @cached_property
    def path_id(self) -> int:
        return path_hash(self.codes)

    def __len__(self) -> int:
        return len(self.decisions)


@dataclass(frozen=True)
class Frame:
    location: Location
    scalars: dict
    refs: dict  # name -> (array name or None, offset)
    arrays: dict  # name -> tuple of values

    def to_dict(self) -> dict:
        return {"location": str(self.location), "scalars": dict(self.scalars),
                "refs": {k: [a, o] for k, (a, o) in self.refs.items()},
                "arrays": {k: list(v) for k, v in self.arrays.items()}}


@dataclass(frozen=True)
class State:
    frames: tuple[Frame, ...]  # outermost first
    input_cursor: int

    @property
    def pc(self) -> Location:
        return self.frames[-1].location

    def to_dict(self) -> dict:
        return {"frames": [f.to_dict() for f in self.frames], "input_cursor": self.input_cursor}


@dataclass(frozen=True)
class ExecOutcome:
    status: Status
    path: ExecutionPath
    edges: frozenset
    steps: int
    fault: SafetyProperty | None = None
    state: State | None = None
    return_value: int | None = None
    input_cursor: int = 0
    detail: str = field(default="", compare=False)

    @property
    def faulted(self) -> bool:
        return self.status is Status.FAULT

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "fault": None if self.fault is None else
            {"kind": self.fault.kind.value, "location": str(self.fault.location)},
            "path": [list(d) for d in self.path.decisions],
            "path_id": f"{self.path.path_id:016x}",
            "edges": sorted(self.edges),
            "steps": self.steps,
            "return_value": self.return_value,
            "input_cursor": self.input_cursor,
            "state": None if self.state is None else self.state.to_dict(),
        }

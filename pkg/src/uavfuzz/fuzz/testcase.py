"""Test cases and their provenance."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_MAX_LEN = 4096


class OriginKind(str, Enum):
    SEED = "Seed"
    MUTATED = "Mutated"
    GENERATED = "Generated"
    BMC_MODEL = "BmcModel"


@dataclass(frozen=True)
class Origin:
    kind: OriginKind
    parent: str | None = None  # test case id of the parent (Mutated only)
    operator: str | None = None
    trace: tuple[str, ...] = ()  # grammar rule trace or solver provenance

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.parent is not None:
            out["parent"] = self.parent
        if self.operator is not None:
            out["operator"] = self.operator
        if self.trace:
            out["trace"] = list(self.trace)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Origin":
        return cls(OriginKind(d["kind"]), d.get("parent"), d.get("operator"),
                   tuple(d.get("trace", ())))


SEED = Origin(OriginKind.SEED)


def content_id(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass(frozen=True)
class TestCase:
    data: bytes
    origin: Origin = SEED
    tick: int = 0  # campaign execution index at discovery
    new_edges: tuple[int, ...] = field(default=(), compare=False)

    __test__ = False  # keep pytest from collecting this class

    @property
    def id(self) -> str:
        return content_id(self.data)

    def __len__(self) -> int:
        return len(self.data)

    def to_dict(self) -> dict:
        return {"id": self.id, "length": len(self.data), "origin": self.origin.to_dict(),
                "tick": self.tick, "new_edges": list(self.new_edges)}

    @classmethod
    def seed(cls, data: bytes | str = b"") -> "TestCase":
        if isinstance(data, str):
            data = data.encode()
        return cls(bytes(data))

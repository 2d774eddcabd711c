"""In-memory program representation: functions, basic blocks, three-address
instructions and the safety properties each instruction carries."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1
EXIT = -1  # pseudo block id for the function-exit edge target


class FaultKind(str, Enum):
    ASSERT = "AssertViolation"
    BUFFER_OVERFLOW = "BufferOverflow"
    DIV_BY_ZERO = "DivByZero"
    OVERFLOW = "SignedOverflow"
    UNDERFLOW = "SignedUnderflow"
    NULL_DEREF = "NullDeref"


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Operand = Union[Const, Var]

BINARY_OPS = ("add", "sub", "mul", "div", "mod", "and", "or", "xor", "shl", "shr",
              "eq", "ne", "lt", "le", "gt", "ge", "land", "lor")
UNARY_OPS = ("neg", "not", "bnot", "copy")
CHECKED_OPS = ("add", "sub", "mul", "div", "shl", "neg")


@dataclass(frozen=True)
class Assign:
    dest: str
    op: str
    args: tuple[Operand, ...]


@dataclass(frozen=True)
class Input:
    dest: str
    width: int  # bytes: 4 for input(), 1 for input_byte()


@dataclass(frozen=True)
class Load:
    dest: str
    array: str
    index: Operand


@dataclass(frozen=True)
class Store:
    array: str
    index: Operand
    value: Operand


@dataclass(frozen=True)
class RefAddr:
    dest: str
    array: str
    index: Operand


@dataclass(frozen=True)
class RefNull:
    dest: str


@dataclass(frozen=True)
class RefCopy:
    dest: str
    src: str


@dataclass(frozen=True)
class DerefLoad:
    dest: str
    ref: str


@dataclass(frozen=True)
class DerefStore:
    ref: str
    value: Operand


@dataclass(frozen=True)
class Assert:
    cond: Operand


@dataclass(frozen=True)
class Call:
    dest: str | None
    func: str
    args: tuple[Operand, ...]


Instruction = Union[Assign, Input, Load, Store, RefAddr, RefNull, RefCopy,
                    DerefLoad, DerefStore, Assert, Call]


@dataclass(frozen=True)
class Goto:
    target: int


@dataclass(frozen=True)
class Branch:
    cond: Operand
    then: int
    else_: int
    site: int
    # constant the guard compares against, when the condition is a direct
    # comparison with a literal; drives the complex-guard heuristic
    guard_const: int | None = None


@dataclass(frozen=True)
class Return:
    value: Operand | None


Terminator = Union[Goto, Branch, Return]


def instruction_faults(instr: Instruction) -> tuple[FaultKind, ...]:
    """Implicit safety properties attached to an instruction by its opcode."""
    if isinstance(instr, Assign):
        if instr.op == "div":
            return (FaultKind.DIV_BY_ZERO, FaultKind.OVERFLOW)
        if instr.op == "mod":
            return (FaultKind.DIV_BY_ZERO,)
        if instr.op == "neg":
            return (FaultKind.OVERFLOW,)
        if instr.op in CHECKED_OPS:
            return (FaultKind.OVERFLOW, FaultKind.UNDERFLOW)
        return ()
    if isinstance(instr, (Load, Store)):
        return (FaultKind.BUFFER_OVERFLOW,)
    if isinstance(instr, (DerefLoad, DerefStore)):
        return (FaultKind.NULL_DEREF, FaultKind.BUFFER_OVERFLOW)
    if isinstance(instr, Assert):
        return (FaultKind.ASSERT,)
    return ()


@dataclass(frozen=True, order=True)
class Location:
    func: str
    block: int
    index: int

    def __str__(self) -> str:
        return f"{self.func}:B{self.block}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "Location":
        func, block, index = text.rsplit(":", 2)
        return cls(func, int(block.lstrip("B")), int(index))


@dataclass(frozen=True)
class SafetyProperty:
    kind: FaultKind
    location: Location

    def __str__(self) -> str:
        return f"{self.kind.value}@{self.location}"


@dataclass(frozen=True)
class BasicBlock:
    instructions: tuple[Instruction, ...]
    terminator: Terminator

    def successors(self) -> tuple[int, ...]:
        t = self.terminator
        if isinstance(t, Goto):
            return (t.target,)
        if isinstance(t, Branch):
            return (t.then, t.else_)
        return (EXIT,)


@dataclass(frozen=True)
class LoopInfo:
    header: int
    body: int
    exit: int
    site: int
    # syntactic iteration bound, None when not statically analyzable
    bound: int | None


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...]
    scalars: tuple[str, ...]  # params first, then locals and temporaries
    refs: tuple[str, ...]
    arrays: tuple[tuple[str, int], ...]
    blocks: tuple[BasicBlock, ...]
    loops: tuple[LoopInfo, ...]

    @property
    def array_sizes(self) -> dict[str, int]:
        return dict(self.arrays)


@dataclass(frozen=True)
class Edge:
    id: int
    func: str
    src: int
    dst: int  # EXIT for return edges

    def __str__(self) -> str:
        dst = "exit" if self.dst == EXIT else f"B{self.dst}"
        return f"{self.func}:B{self.src}->{dst}"


@dataclass(eq=False)
class Program:
    functions: tuple[Function, ...]
    entry: str = "main"
    source: object = field(default=None, repr=False)  # parsed AST, for printing

    def __post_init__(self) -> None:
        self._by_name = {f.name: f for f in self.functions}
        edges: list[Edge] = []
        self.edge_ids: dict[tuple[str, int, int], int] = {}
        for f in self.functions:
            for b, block in enumerate(f.blocks):
                for dst in dict.fromkeys(block.successors()):
                    self.edge_ids[(f.name, b, dst)] = len(edges)
                    edges.append(Edge(len(edges), f.name, b, dst))
        self.edges = tuple(edges)
        props = []
        for f in self.functions:
            for b, block in enumerate(f.blocks):
                for i, instr in enumerate(block.instructions):
                    for kind in instruction_faults(instr):
                        props.append(SafetyProperty(kind, Location(f.name, b, i)))
        self.properties = tuple(props)
        self.branch_sites = {}
        for f in self.functions:
            for b, block in enumerate(f.blocks):
                if isinstance(block.terminator, Branch):
                    self.branch_sites[block.terminator.site] = (f.name, b, block.terminator)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return self.entry == other.entry and self.functions == other.functions

    __hash__ = None  # type: ignore[assignment]

    def function(self, name: str) -> Function:
        return self._by_name[name]

    def instruction_at(self, loc: Location) -> Instruction:
        return self.function(loc.func).blocks[loc.block].instructions[loc.index]

    def properties_at(self, loc: Location) -> tuple[FaultKind, ...]:
        block = self.function(loc.func).blocks[loc.block]
        if loc.index >= len(block.instructions):
            return ()
        return instruction_faults(block.instructions[loc.index])

    @property
    def loops(self) -> list[tuple[str, LoopInfo]]:
        return [(f.name, lp) for f in self.functions for lp in f.loops]

    def input_reads(self) -> list[int]:
        """Widths of all input instructions, in program text order."""
        return [ins.width for f in self.functions for b in f.blocks
                for ins in b.instructions if isinstance(ins, Input)]

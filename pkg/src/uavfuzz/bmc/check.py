"""Bounded model checking entry points: path enumeration, VC encoding, verdicts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

from ..minir import ir
from ..minir.threshold import compute_completeness_threshold
from ..vm.outcome import State
from ..vm.reference import execute as reference_execute
from .blast import Blaster, CnfFormula
from .sat import SatResult, Solver
from .symex import (DEFAULT_MAX_DEPTH, EncodeError, Engine, Explorer, ExploreStats, Found,
                    SymbolicPath, SymState)
from .terms import Term, TermBuilder

DEFAULT_K = 10
DEFAULT_TIMEOUT = 60.0


class VerdictKind(str, Enum):
    TRUE = "True"
    FALSE = "False"
    UNKNOWN = "Unknown"


class UnknownReason(str, Enum):
    TIMEOUT = "timeout"
    MEMORY = "memory"
    UNBOUNDED = "unbounded-loop-with-k-below-threshold"
    GAVE_UP = "solver-gave-up"


@dataclass(frozen=True)
class Counterexample:
    inputs: bytes
    trace: tuple[State, ...]  # block-entry snapshots, ending at the faulting instruction
    property: ir.SafetyProperty
    depth: int  # loop unwindings needed (at least 1)
    path: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {"property": {"kind": self.property.kind.value,
                             "location": str(self.property.location)},
                "inputs": self.inputs.hex(), "depth": self.depth,
                "path": [list(d) for d in self.path], "trace_length": len(self.trace),
                "final_state": self.trace[-1].to_dict() if self.trace else None}


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    k: int
    complete: bool = False
    counterexample: Counterexample | None = None
    reason: UnknownReason | None = None
    stats: ExploreStats = field(default_factory=ExploreStats, compare=False)
    frontier_models: tuple[tuple[int, bytes], ...] = field(default=(), compare=False)
    threshold: int | None = None

    def __post_init__(self):
        if self.kind is VerdictKind.FALSE and self.counterexample is None:
            raise ValueError("a False verdict needs a counterexample")
        if self.kind is not VerdictKind.TRUE and self.complete:
            raise ValueError("only True verdicts can be complete")

    def __str__(self) -> str:
        if self.kind is VerdictKind.TRUE:
            return f"True(complete={str(self.complete).lower()}, k={self.k})"
        if self.kind is VerdictKind.FALSE:
            return f"False({self.counterexample.property})"
        return f"Unknown({self.reason.value})"

    def to_dict(self) -> dict:
        return {"verdict": self.kind.value, "k": self.k, "complete": self.complete,
                "threshold": self.threshold,
                "reason": None if self.reason is None else self.reason.value,
                "counterexample": None if self.counterexample is None
                else self.counterexample.to_dict(),
                "stats": self.stats.to_dict()}


def default_k(program: ir.Program) -> int:
    info = compute_completeness_threshold(program)
    if info.known:
        return max(1, info.threshold)
    return DEFAULT_K


def _counterexample(program: ir.Program, found: Found) -> Counterexample:
    res = reference_execute(program, found.inputs, trace=True)
    if res.outcome.fault != found.prop:
        got = res.outcome.fault or res.outcome.status.value
        raise EncodeError(f"solver model for {found.prop} replays as {got}")
    return Counterexample(found.inputs, tuple(res.trace), found.prop, max(1, found.state.depth),
                          res.outcome.path.decisions)


def enumerate_paths(program: ir.Program, k: int, exclude=(), timeout: float | None = None):
    """Complete feasible paths with every loop activation unrolled at most ``k`` times.

    ``exclude`` holds decision lists, either as (site, taken) pairs or as
    ``site * 2 + taken`` codes.
    """
    ex = Explorer(program, k, _as_codes(exclude), timeout, check_properties=False)
    yield from ex.paths()


def _as_codes(exclude) -> set[tuple[int, ...]]:
    out = set()
    for p in exclude:
        p = tuple(p.codes) if hasattr(p, "codes") else tuple(p)
        if p and isinstance(p[0], tuple):
            p = tuple(s * 2 + t for s, t in p)
        out.add(p)
    return out


def check(program: ir.Program, k: int | None = None, exclude=(), timeout: float | None = DEFAULT_TIMEOUT,
          properties=None, frontier_edges=None, total_timeout: float | None = None,
          max_depth: int = DEFAULT_MAX_DEPTH) -> Verdict:
    """Check every property on every path unrolled up to ``k``.

    The first satisfiable obligation in depth-first order yields False.  True
    is complete only when the threshold is known, ``k`` reaches it, and no
    path was dropped or excluded from checking.
    """
    info = compute_completeness_threshold(program)
    k = default_k(program) if k is None else k
    deadline = None if total_timeout is None else time.monotonic() + total_timeout
    ex = Explorer(program, k, _as_codes(exclude), timeout, properties=properties,
                  frontier_edges=frontier_edges, deadline=deadline, max_depth=max_depth)
    models = ()
    try:
        for _ in ex.paths():
            pass
    except Found as found:
        cex = _counterexample(program, found)
        return Verdict(VerdictKind.FALSE, k, counterexample=cex, stats=ex.stats,
                       frontier_models=tuple(ex.frontier_models), threshold=info.threshold)
    models = tuple(ex.frontier_models)
    if ex.timed_out:
        return Verdict(VerdictKind.UNKNOWN, k, reason=UnknownReason.TIMEOUT, stats=ex.stats,
                       frontier_models=models, threshold=info.threshold)
    complete = (info.known and k >= info.threshold and ex.stats.cut == 0
                and ex.stats.skipped == 0)
    return Verdict(VerdictKind.TRUE, k, complete=complete, stats=ex.stats,
                   frontier_models=models, threshold=info.threshold)


# -- single-path verification conditions ---------------------------------------

@dataclass
class VerificationCondition:
    terms: TermBuilder
    goal: Term  # satisfiable iff some input violates the property along the path
    k: int
    property: ir.SafetyProperty
    path: SymbolicPath
    input_length: int  # bytes read before the last visit of the property

    def to_cnf(self) -> tuple[CnfFormula, Blaster]:
        bl = Blaster(self.terms)
        lit = bl.lit(self.goal)
        formula = bl.formula()
        formula.clauses.append([lit])
        return formula, bl


class _PathEncoder(Engine):
    visit_infeasible = True  # a constant-false fault still proves the location is reached

    def __init__(self, program, path: SymbolicPath, prop: ir.SafetyProperty, k: int):
        super().__init__(program, k)
        self.todo = list(path.decisions)
        self.prop = prop
        self.hits: list[Term] = []
        self.length = 0

    def on_fault(self, st: SymState, prop: ir.SafetyProperty, fault: Term) -> bool:
        tb = self.tb
        if prop == self.prop:
            self.hits.append(tb.and_(*st.pc, fault))
            self.length = max(self.length, st.cursor)
        st.pc.append(tb.not_(fault))
        return fault is not tb.TRUE

    def on_branch(self, st, cond, site, edges):
        if not self.todo:
            return []
        want_site, taken = self.todo.pop(0)
        if want_site != site:
            raise EncodeError(f"path expects branch site {want_site} but reached {site}")
        st.pc.append(cond if taken else self.tb.not_(cond))
        return [taken]


def encode(program: ir.Program, path: SymbolicPath, prop: ir.SafetyProperty,
           k: int | None = None) -> VerificationCondition:
    """VC for ``prop`` along ``path``: some visit of its location faults."""
    if prop.kind not in program.properties_at(prop.location):
        raise EncodeError(f"{prop} is not a property of the program")
    k = default_k(program) if k is None else k
    enc = _PathEncoder(program, path, prop, max(k, path.depth, 1))
    todo = [enc.initial()]
    while todo:
        todo = enc.step(todo.pop())
    if not enc.hits:
        raise EncodeError(f"path does not reach {prop.location}")
    goal = enc.tb.or_(*enc.hits)
    return VerificationCondition(enc.tb, goal, k, prop, path, enc.length)


def solve_vc(vc: VerificationCondition, timeout: float | None = DEFAULT_TIMEOUT
             ) -> tuple[SatResult, bytes | None]:
    formula, bl = vc.to_cnf()
    s = Solver(formula.num_vars)
    for c in formula.clauses:
        s.add_clause(c)
    res = s.solve(timeout=timeout)
    if not res.sat:
        return res, None
    return res, bl.decode_bytes(res.model, vc.input_length)

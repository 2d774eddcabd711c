"""Syntactic loop-bound analysis and the program completeness threshold.

A loop gets a static bound when its condition compares a counter against a
literal, the counter is set to a literal right before the loop, and the body
updates it exactly once, at top level, by a constant step.  Anything else is
unknown (``None``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import ast
from .ir import Program

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "!=": "!="}


@dataclass(frozen=True)
class ThresholdInfo:
    loops: dict  # (function name, header block) -> bound or None
    threshold: int | None  # None means Unknown

    @property
    def known(self) -> bool:
        return self.threshold is not None


def _literal(e: ast.Expr) -> int | None:
    if isinstance(e, ast.Num):
        return e.value
    if isinstance(e, ast.Unary) and e.op == "-" and isinstance(e.operand, ast.Num):
        return -e.operand.value
    return None


def _assigns(stmt: ast.Stmt, name: str) -> int:
    """Number of syntactic writes to scalar ``name`` inside ``stmt``."""
    if isinstance(stmt, (ast.AssignStmt, ast.ScalarDecl)):
        n = 1 if (stmt.target if isinstance(stmt, ast.AssignStmt) else stmt.name) == name else 0
        return n
    if isinstance(stmt, ast.If):
        return sum(_assigns(s, name) for s in stmt.then + (stmt.orelse or ()))
    if isinstance(stmt, ast.While):
        return sum(_assigns(s, name) for s in stmt.body)
    return 0


def _counter_init(before: tuple[ast.Stmt, ...], name: str) -> int | None:
    for stmt in reversed(before):
        if not _assigns(stmt, name):
            continue
        if isinstance(stmt, ast.ScalarDecl) and stmt.kind == "i32":
            return 0 if stmt.init is None else _literal(stmt.init)
        if isinstance(stmt, ast.AssignStmt):
            return _literal(stmt.value)
        return None
    return None


def _step(body: tuple[ast.Stmt, ...], name: str) -> int | None:
    if sum(_assigns(s, name) for s in body) != 1:
        return None
    for stmt in body:
        if isinstance(stmt, ast.AssignStmt) and stmt.target == name:
            v = stmt.value
            if not isinstance(v, ast.Binary) or v.op not in "+-":
                return None
            if isinstance(v.left, ast.Name) and v.left.id == name:
                k = _literal(v.right)
                if k is None:
                    return None
                return k if v.op == "+" else -k
            if v.op == "+" and isinstance(v.right, ast.Name) and v.right.id == name:
                return _literal(v.left)
            return None
    return None  # the only write is nested


def _holds(op: str, a: int, limit: int) -> bool:
    return {"<": a < limit, "<=": a <= limit, ">": a > limit, ">=": a >= limit,
            "!=": a != limit}[op]


def loop_bound(before: tuple[ast.Stmt, ...], loop: ast.While) -> int | None:
    """Static iteration bound of ``loop`` given the statements preceding it."""
    cond = loop.cond
    if not isinstance(cond, ast.Binary) or cond.op not in _FLIP:
        return None
    op = cond.op
    if isinstance(cond.left, ast.Name) and _literal(cond.right) is not None:
        name, limit = cond.left.id, _literal(cond.right)
    elif isinstance(cond.right, ast.Name) and _literal(cond.left) is not None:
        name, limit, op = cond.right.id, _literal(cond.left), _FLIP[op]
    else:
        return None
    start = _counter_init(before, name)
    step = _step(loop.body, name)
    if start is None or step is None or step == 0:
        return None
    if not _holds(op, start, limit):
        return 0
    if op == "!=":
        dist = limit - start
        if dist % step == 0 and dist // step >= 0:
            return dist // step
        return None
    if op in ("<", "<=") and step > 0:
        span = limit - start
        return math.ceil(span / step) if op == "<" else span // step + 1
    if op in (">", ">=") and step < 0:
        span, s = start - limit, -step
        return math.ceil(span / s) if op == ">" else span // s + 1
    return None


def _has_recursion(program: Program) -> bool:
    from .ir import Call
    graph = {f.name: {ins.func for b in f.blocks for ins in b.instructions
                      if isinstance(ins, Call)} for f in program.functions}
    state: dict[str, int] = {}

    def visit(n: str) -> bool:
        state[n] = 1
        for m in graph[n]:
            if state.get(m) == 1 or (m not in state and visit(m)):
                return True
        state[n] = 2
        return False

    return any(n not in state and visit(n) for n in graph)


def compute_completeness_threshold(program: Program) -> ThresholdInfo:
    loops = {(fname, lp.header): lp.bound for fname, lp in program.loops}
    if any(b is None for b in loops.values()) or _has_recursion(program):
        return ThresholdInfo(loops, None)
    return ThresholdInfo(loops, max(loops.values(), default=0))

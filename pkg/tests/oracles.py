"""Independent oracles used to check the package against first principles.

Nothing here imports the solver, the encoder or the propagation model.  The
concrete-execution helpers call ``uavfuzz.vm.run`` only as the system under
enumeration; the verdicts they produce come from exhaustive search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from uavfuzz.minir import EXIT, Branch, Call, Goto, Location, Return

I32_MIN, I32_MAX = -(2 ** 31), 2 ** 31 - 1
SPEED_OF_LIGHT = 299_792_458.0


# -- SAT ---------------------------------------------------------------------------

def sat_brute(num_vars: int, clauses) -> bool:
    """Satisfiability by evaluating every assignment at once with numpy."""
    n = 1 << num_vars
    idx = np.arange(n, dtype=np.int64)
    value = [None] + [((idx >> (v - 1)) & 1).astype(bool) for v in range(1, num_vars + 1)]
    alive = np.ones(n, dtype=bool)
    for clause in clauses:
        sat = np.zeros(n, dtype=bool)
        for lit in clause:
            sat |= value[lit] if lit > 0 else ~value[-lit]
        alive &= sat
        if not alive.any():
            return False
    return bool(alive.any())


def model_satisfies(model: dict, clauses) -> bool:
    return all(any(model[abs(l)] == (l > 0) for l in c) for c in clauses)


def random_3cnf(rng, num_vars: int, num_clauses: int) -> list[list[int]]:
    return [[v if rng.random() < 0.5 else -v for v in rng.sample(range(1, num_vars + 1), 3)]
            for _ in range(num_clauses)]


# -- two's-complement arithmetic ------------------------------------------------------

def _wrap(v: int) -> int:
    return (v + 2 ** 31) % 2 ** 32 - 2 ** 31


def _tdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def i32_word(op: str, a: int, b: int) -> int:
    """Wrapped 32-bit value of a binary word operator."""
    if op == "add":
        return _wrap(a + b)
    if op == "sub":
        return _wrap(a - b)
    if op == "mul":
        return _wrap(a * b)
    if op == "div":
        return _wrap(_tdiv(a, b))
    if op == "mod":
        return a - _tdiv(a, b) * b
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return _wrap(a * 2 ** (b % 32))
    if op == "shr":
        return a // 2 ** (b % 32)
    raise ValueError(op)


def i32_pred(op: str, a: int, b: int) -> bool:
    """Comparison and fault predicates over unbounded integers."""
    cmp = {"eq": a == b, "ne": a != b, "lt": a < b, "le": a <= b, "gt": a > b, "ge": a >= b}
    if op in cmp:
        return cmp[op]
    wide = {"add": a + b, "sub": a - b, "mul": a * b, "shl": a * 2 ** (b % 32)}
    base, kind = op.split("_")
    if base == "div":
        return a == I32_MIN and b == -1
    return wide[base] > I32_MAX if kind == "ovf" else wide[base] < I32_MIN


# -- concrete enumeration ----------------------------------------------------------------

def all_inputs(nbytes: int):
    for t in itertools.product(range(256), repeat=nbytes):
        yield bytes(t)


def exhaustive_faults(program, nbytes: int, run):
    """Run every input of ``nbytes`` bytes; returns (faults by property, max cursor)."""
    faults = {}
    cursor = 0
    for data in all_inputs(nbytes):
        out = run(program, data)
        cursor = max(cursor, out.input_cursor)
        if out.fault is not None:
            faults.setdefault(out.fault, data)
    return faults, cursor


def distinct_paths(program, inputs, run) -> set[tuple[int, ...]]:
    return {run(program, d).path.codes for d in inputs}


# -- CFG walking ---------------------------------------------------------------------------

class _Stop(Exception):
    pass


def edges_of_decisions(program, codes, fault_location: Location | None = None) -> set[int]:
    """Edges traversed when following ``codes`` through the CFG.

    Blocks are walked from the entry function, descending into calls.  A
    branch consumes the next decision (``site * 2 + 1`` is the then side).
    With ``fault_location`` the walk stops there once every decision has
    been consumed.
    """
    codes = list(codes)
    pos = 0
    edges: set[int] = set()

    def walk(fname: str) -> None:
        nonlocal pos
        f = program.function(fname)
        b = 0
        while True:
            block = f.blocks[b]
            for i, ins in enumerate(block.instructions):
                if fault_location == Location(fname, b, i) and pos == len(codes):
                    raise _Stop
                if isinstance(ins, Call):
                    walk(ins.func)
            t = block.terminator
            if isinstance(t, Return):
                edges.add(program.edge_ids[(fname, b, EXIT)])
                return
            if isinstance(t, Goto):
                dst = t.target
            else:
                assert isinstance(t, Branch)
                code = codes[pos]
                pos += 1
                assert code >> 1 == t.site, "decision list does not follow the CFG"
                dst = t.then if code & 1 else t.else_
            edges.add(program.edge_ids[(fname, b, dst)])
            b = dst

    try:
        walk(program.entry)
    except _Stop:
        pass
    assert pos == len(codes), "decisions left over"
    return edges


# -- radio propagation -----------------------------------------------------------------------

def fspl_physics_db(distance_m: float, freq_mhz: float) -> float:
    """Free-space path loss from the Friis form 20 log10(4 pi d f / c)."""
    return 20 * math.log10(4 * math.pi * distance_m * freq_mhz * 1e6 / SPEED_OF_LIGHT)

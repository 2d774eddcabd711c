"""Incremental CDCL SAT solver.

Two watched literals, first-UIP learning with local minimization, VSIDS
branching with phase saving, Luby restarts, LBD-based clause-database
reduction, and solving under assumptions.  Literals are DIMACS-style
non-zero integers.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .._accel import kernel


class SatStatus(str, Enum):
    SAT = "Sat"
    UNSAT = "Unsat"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class SatResult:
    status: SatStatus
    model: dict[int, bool] | None = None  # variable -> value, total over 1..num_vars
    conflicts: int = 0

    @property
    def sat(self) -> bool:
        return self.status is SatStatus.SAT


def _luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    RESTART_BASE = 100
    VAR_DECAY = 0.95

    def __init__(self, num_vars: int = 0):
        self.num_vars = 0
        self.clauses: list[list[int] | None] = []
        self.learnt_flag: list[bool] = []
        self.lbd: list[int] = []
        self.watches: list[list[int]] = [[], []]  # indexed by literal code
        self.value: list[int] = [0, 0]  # per literal code: 1 true, -1 false, 0 unassigned
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.heap: list[tuple[float, int]] = []
        self.var_inc = 1.0
        self.ok = True
        self.n_learnts = 0
        self.max_learnts = 2000
        self.conflicts = 0
        self.ensure_vars(num_vars)

    # -- setup ---------------------------------------------------------------

    def ensure_vars(self, n: int) -> None:
        while self.num_vars < n:
            self.num_vars += 1
            v = self.num_vars
            self.watches += [[], []]
            self.value += [0, 0]
            self.level.append(0)
            self.reason.append(-1)
            self.activity.append(0.0)
            self.phase.append(False)
            heapq.heappush(self.heap, (0.0, v))

    def new_var(self) -> int:
        self.ensure_vars(self.num_vars + 1)
        return self.num_vars

    @staticmethod
    def _code(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def add_clause(self, lits) -> bool:
        """Add a permanent clause; returns False once the formula is unsatisfiable."""
        if not self.ok:
            return False
        if self.trail_lim:
            self._cancel_until(0)
        seen = set()
        out = []
        for lit in lits:
            if lit == 0:
                raise ValueError("literal 0 is not allowed")
            self.ensure_vars(abs(lit))
            if -lit in seen:
                return True  # tautology
            if lit in seen:
                continue
            val = self.value[self._code(lit)]
            if val == 1:
                return True
            if val == -1:
                continue  # false at level 0
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._enqueue(out[0], -1)
            if self._propagate() != -1:
                self.ok = False
            return self.ok
        self._attach(out, learnt=False, lbd=0)
        return True

    def _attach(self, lits: list[int], learnt: bool, lbd: int) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.learnt_flag.append(learnt)
        self.lbd.append(lbd)
        self.watches[self._code(-lits[0])].append(ci)
        self.watches[self._code(-lits[1])].append(ci)
        if learnt:
            self.n_learnts += 1
        return ci

    # -- core ----------------------------------------------------------------

    def _enqueue(self, lit: int, reason: int) -> None:
        c = 2 * lit if lit > 0 else -2 * lit + 1
        self.value[c] = 1
        self.value[c ^ 1] = -1
        v = lit if lit > 0 else -lit
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        value, watches, clauses, trail = self.value, self.watches, self.clauses, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            pc = 2 * p if p > 0 else -2 * p + 1
            ws = watches[pc]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue  # deleted
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                fc = 2 * first if first > 0 else -2 * first + 1
                if value[fc] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if value[2 * lk if lk > 0 else -2 * lk + 1] != -1:
                        c[1], c[k] = lk, false_lit
                        watches[2 * lk + 1 if lk > 0 else -2 * lk].append(ci)
                        found = True
                        break
                if found:
                    continue
                ws[j] = ci
                j += 1
                if value[fc] == -1:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return ci
                self._enqueue(first, ci)
            del ws[j:]
        return -1

    def _bump(self, v: int) -> None:
        act = self.activity[v] + self.var_inc
        self.activity[v] = act
        if act > 1e100:
            for u in range(1, self.num_vars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.num_vars + 1)
                         if self.value[2 * u] == 0]
            heapq.heapify(self.heap)
        elif self.value[2 * v] == 0:
            heapq.heappush(self.heap, (-act, v))

    def _analyze(self, confl: int) -> tuple[list[int], int, int]:
        level, reason, clauses = self.level, self.reason, self.clauses
        seen = set()
        learnt = [0]
        counter = 0
        p = 0
        idx = len(self.trail) - 1
        cur = len(self.trail_lim)
        while True:
            c = clauses[confl]
            if self.learnt_flag[confl]:
                self.lbd[confl] = min(self.lbd[confl], len({level[abs(q)] for q in c}))
            for q in (c if p == 0 else c[1:]):
                v = abs(q)
                if v in seen or level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if level[v] >= cur:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            confl = reason[abs(p)]
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        # drop literals implied by the rest of the clause (local minimization)
        in_clause = {abs(q) for q in learnt}
        keep = [learnt[0]]
        for q in learnt[1:]:
            r = reason[abs(q)]
            if r == -1 or any(abs(x) not in in_clause and level[abs(x)] > 0 for x in clauses[r][1:]):
                keep.append(q)
        learnt = keep
        if len(learnt) == 1:
            bt = 0
        else:
            mi = max(range(1, len(learnt)), key=lambda k: level[abs(learnt[k])])
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level[abs(learnt[1])]
        lbd = len({level[abs(q)] for q in learnt})
        return learnt, bt, lbd

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        value, phase, heap, act = self.value, self.phase, self.heap, self.activity
        for k in range(len(self.trail) - 1, start - 1, -1):
            lit = self.trail[k]
            v = lit if lit > 0 else -lit
            value[2 * v] = value[2 * v + 1] = 0
            phase[v] = lit > 0
            heapq.heappush(heap, (-act[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick(self) -> int:
        heap, value, act = self.heap, self.value, self.activity
        while heap:
            a, v = heapq.heappop(heap)
            if value[2 * v] == 0 and -a == act[v]:
                return v
        for v in range(1, self.num_vars + 1):  # stale heap fallback
            if value[2 * v] == 0:
                return v
        return 0

    def _reduce_db(self) -> None:
        locked = {self.reason[abs(l)] for l in self.trail}
        cands = [ci for ci, c in enumerate(self.clauses)
                 if c is not None and self.learnt_flag[ci] and self.lbd[ci] > 2 and ci not in locked]
        cands.sort(key=lambda ci: (self.lbd[ci], len(self.clauses[ci])))
        for ci in cands[len(cands) // 2:]:
            self.clauses[ci] = None
            self.n_learnts -= 1
        for ws in self.watches:
            ws[:] = [ci for ci in ws if self.clauses[ci] is not None]
        self.max_learnts = int(self.max_learnts * 1.1)

    def solve(self, assumptions=(), timeout: float | None = None) -> SatResult:
        """Solve under ``assumptions``; the model is total over 1..num_vars."""
        if not self.ok:
            return SatResult(SatStatus.UNSAT)
        deadline = None if timeout is None else time.monotonic() + timeout
        assumptions = list(assumptions)
        for a in assumptions:
            self.ensure_vars(abs(a))
        self._cancel_until(0)
        if self._propagate() != -1:
            self.ok = False
            return SatResult(SatStatus.UNSAT)
        restarts = 0
        conflicts_here = 0
        budget = _luby(0) * self.RESTART_BASE
        while True:
            confl = self._propagate()
            if confl != -1:
                self.conflicts += 1
                conflicts_here += 1
                budget -= 1
                if not self.trail_lim:
                    self.ok = False
                    return SatResult(SatStatus.UNSAT, conflicts=conflicts_here)
                learnt, bt, lbd = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    ci = self._attach(learnt, learnt=True, lbd=lbd)
                    self._enqueue(learnt[0], ci)
                self.var_inc /= self.VAR_DECAY
                if deadline is not None and conflicts_here % 64 == 0 \
                        and time.monotonic() > deadline:
                    self._cancel_until(0)
                    return SatResult(SatStatus.TIMEOUT, conflicts=conflicts_here)
                continue
            if budget <= 0:
                restarts += 1
                budget = _luby(restarts) * self.RESTART_BASE
                self._cancel_until(0)
                if deadline is not None and time.monotonic() > deadline:
                    return SatResult(SatStatus.TIMEOUT, conflicts=conflicts_here)
            if self.n_learnts - len(self.trail) >= self.max_learnts:
                self._reduce_db()
            lvl = len(self.trail_lim)
            if lvl < len(assumptions):
                a = assumptions[lvl]
                val = self.value[self._code(a)]
                self.trail_lim.append(len(self.trail))
                if val == -1:
                    self._cancel_until(0)
                    return SatResult(SatStatus.UNSAT, conflicts=conflicts_here)
                if val == 0:
                    self._enqueue(a, -1)
                continue
            v = self._pick()
            if v == 0:
                model = {u: self.value[2 * u] == 1 for u in range(1, self.num_vars + 1)}
                self._cancel_until(0)
                return SatResult(SatStatus.SAT, model, conflicts_here)
            self.trail_lim.append(len(self.trail))
            self._enqueue(v if self.phase[v] else -v, -1)


def solve(formula, timeout: float | None = None, assumptions=()) -> SatResult:
    """One-shot solve of a CnfFormula (or any object with num_vars and clauses)."""
    s = Solver(formula.num_vars)
    for c in formula.clauses:
        if not s.add_clause(c):
            return SatResult(SatStatus.UNSAT)
    return s.solve(assumptions, timeout)


# -- exhaustive oracle ------------------------------------------------------

@kernel
def _brute_force(lits, starts, num_vars):
    """Index of the first satisfying assignment (bit v-1 = variable v), or -1."""
    n_clauses = len(starts) - 1
    for m in range(1 << num_vars):
        ok = True
        for c in range(n_clauses):
            sat = False
            for k in range(starts[c], starts[c + 1]):
                lit = lits[k]
                v = lit if lit > 0 else -lit
                bit = (m >> (v - 1)) & 1
                if (lit > 0 and bit == 1) or (lit < 0 and bit == 0):
                    sat = True
                    break
            if not sat:
                ok = False
                break
        if ok:
            return m
    return -1


def brute_force(num_vars: int, clauses, backend: str | None = None) -> dict[int, bool] | None:
    """Exhaustive satisfiability by enumeration over 2^num_vars assignments."""
    if num_vars > 30:
        raise ValueError("brute force is limited to 30 variables")
    flat = [l for c in clauses for l in c]
    starts = np.zeros(len(clauses) + 1, dtype=np.int64)
    np.cumsum([len(c) for c in clauses], out=starts[1:])
    m = _brute_force.backend(backend)(np.asarray(flat, dtype=np.int64), starts, num_vars)
    if m < 0:
        return None
    return {v: bool((m >> (v - 1)) & 1) for v in range(1, num_vars + 1)}

"""Symbolic path exploration over the CFG with bounded loop unwinding.

Each path keeps a list of boolean conjuncts: branch conditions plus the
no-fault conditions of operations whose safety was assumed rather than
proved.  Input reads advance a concrete cursor, so every symbolic input is
a fixed byte position of the test case.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..minir import ir
from .blast import Blaster
from .sat import SatResult, SatStatus, Solver
from .terms import Term, TermBuilder, evaluate, input_env

DEFAULT_MAX_DEPTH = 64


class EncodeError(ValueError):
    """Path and property are inconsistent, or a model failed to reproduce."""


@dataclass(frozen=True)
class SymbolicPath:
    decisions: tuple[tuple[int, int], ...]
    depth: int  # largest number of iterations of any loop activation on the path

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(s * 2 + t for s, t in self.decisions)


@dataclass
class SymFrame:
    func: ir.Function
    block: int
    index: int
    scalars: dict
    refs: dict  # name -> (array name or None, offset term)
    arrays: dict  # name -> list of element terms
    dest: str | None
    loop_iters: dict

    def copy(self) -> "SymFrame":
        return SymFrame(self.func, self.block, self.index, dict(self.scalars), dict(self.refs),
                        {k: list(v) for k, v in self.arrays.items()}, self.dest,
                        dict(self.loop_iters))


@dataclass
class SymState:
    frames: list[SymFrame]
    cursor: int = 0
    decisions: tuple = ()
    pc: list = field(default_factory=list)
    depth: int = 0
    excluded: bool = False
    witness: bytes | None = b""  # an input known to satisfy pc, if any
    wcache: dict = field(default_factory=dict)

    def fork(self) -> "SymState":
        return SymState([f.copy() for f in self.frames], self.cursor, self.decisions,
                        list(self.pc), self.depth, self.excluded, self.witness, self.wcache)


@dataclass
class ExploreStats:
    paths: int = 0
    obligations: int = 0
    sat: int = 0
    unsat: int = 0
    timeouts: int = 0
    skipped: int = 0  # obligations on excluded decision prefixes
    excluded_paths: int = 0
    cut: int = 0  # paths dropped at the unwinding bound or call-depth limit
    queries: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Found(Exception):
    def __init__(self, state: SymState, prop: ir.SafetyProperty, inputs: bytes):
        super().__init__(str(prop))
        self.state, self.prop, self.inputs = state, prop, inputs


class Engine:
    """Shared stepping logic; subclasses decide how faults and branches are handled."""

    visit_infeasible = False  # report fault sites whose fault term folded to false

    def __init__(self, program: ir.Program, k: int, max_depth: int = DEFAULT_MAX_DEPTH):
        if k < 1:
            raise ValueError("unwinding bound k must be at least 1")
        self.program = program
        self.k = k
        self.max_depth = max_depth
        self.tb = TermBuilder()
        self.headers = {(f.name, lp.header) for f in program.functions for lp in f.loops}
        self.stats = ExploreStats()

    # -- state construction --------------------------------------------------

    def frame(self, f: ir.Function, args: list[Term], dest: str | None) -> SymFrame:
        zero = self.tb.const(0)
        scalars = {n: zero for n in f.scalars}
        scalars.update(zip(f.params, args))
        return SymFrame(f, 0, 0, scalars, {n: (None, zero) for n in f.refs},
                        {n: [zero] * size for n, size in f.arrays}, dest, {})

    def initial(self) -> SymState:
        return SymState([self.frame(self.program.function(self.program.entry), [], None)])

    def value(self, fr: SymFrame, op: ir.Operand) -> Term:
        return self.tb.const(op.value) if isinstance(op, ir.Const) else fr.scalars[op.name]

    def in_bounds_fault(self, index: Term, size: int) -> Term:
        tb = self.tb
        return tb.or_(tb.cmp("lt", index, tb.const(0)), tb.cmp("ge", index, tb.const(size)))

    def select(self, arr: list[Term], index: Term) -> Term:
        if index.is_const:
            return arr[index.value]
        first = arr[0]
        if all(e is first for e in arr):
            return first
        tb = self.tb
        out = arr[-1]
        for k in range(len(arr) - 2, -1, -1):
            out = tb.ite(tb.cmp("eq", index, tb.const(k)), arr[k], out)
        return out

    def store(self, arr: list[Term], index: Term, v: Term) -> list[Term]:
        if index.is_const:
            arr = list(arr)
            arr[index.value] = v
            return arr
        tb = self.tb
        return [tb.ite(tb.cmp("eq", index, tb.const(k)), v, e) for k, e in enumerate(arr)]

    # -- hooks ---------------------------------------------------------------

    def on_fault(self, st: SymState, prop: ir.SafetyProperty, fault: Term) -> bool:
        """Handle a possible fault; return False to end the path."""
        raise NotImplementedError

    def on_branch(self, st: SymState, cond: Term, site: int, edges: tuple[int, int]) -> list[int]:
        """Directions (1 then, 0 else) to explore."""
        raise NotImplementedError

    def on_complete(self, st: SymState) -> None:
        pass

    def on_cut(self, st: SymState) -> None:
        self.stats.cut += 1

    # -- stepping ------------------------------------------------------------

    def _faults(self, st: SymState, fr: SymFrame, faults) -> bool:
        loc = ir.Location(fr.func.name, fr.block, fr.index)
        for kind, term in faults:
            if term is self.tb.FALSE and not self.visit_infeasible:
                continue
            if not self.on_fault(st, ir.SafetyProperty(kind, loc), term):
                return False
        return True

    def step(self, st: SymState) -> list[SymState]:
        """Advance ``st`` to its next branch; returns the successor states."""
        tb = self.tb
        K = ir.FaultKind
        while True:
            fr = st.frames[-1]
            block = fr.func.blocks[fr.block]
            if fr.index < len(block.instructions):
                ins = block.instructions[fr.index]
                if isinstance(ins, ir.Assign):
                    args = [self.value(fr, a) for a in ins.args]
                    op = ins.op
                    faults = ()
                    if op in ("add", "sub", "mul", "shl"):
                        faults = ((K.OVERFLOW, tb.fault(op + "_ovf", *args)),
                                  (K.UNDERFLOW, tb.fault(op + "_unf", *args)))
                    elif op == "div":
                        faults = ((K.DIV_BY_ZERO, tb.cmp("eq", args[1], tb.const(0))),
                                  (K.OVERFLOW, tb.fault("div_ovf", *args)))
                    elif op == "mod":
                        faults = ((K.DIV_BY_ZERO, tb.cmp("eq", args[1], tb.const(0))),)
                    elif op == "neg":
                        faults = ((K.OVERFLOW, tb.fault("neg_ovf", args[0])),)
                    if faults and not self._faults(st, fr, faults):
                        return []
                    if len(args) == 1:
                        fr.scalars[ins.dest] = tb.unop(op, args[0])
                    else:
                        fr.scalars[ins.dest] = tb.binop(op, args[0], args[1])
                elif isinstance(ins, ir.Input):
                    fr.scalars[ins.dest] = (tb.inbyte(st.cursor) if ins.width == 1
                                            else tb.inword(st.cursor))
                    st.cursor += ins.width
                elif isinstance(ins, (ir.Load, ir.Store)):
                    arr = fr.arrays[ins.array]
                    idx = self.value(fr, ins.index)
                    if not self._faults(st, fr, ((K.BUFFER_OVERFLOW,
                                                  self.in_bounds_fault(idx, len(arr))),)):
                        return []
                    idx = self._clamp(idx, len(arr))
                    if isinstance(ins, ir.Load):
                        fr.scalars[ins.dest] = self.select(arr, idx)
                    else:
                        fr.arrays[ins.array] = self.store(arr, idx, self.value(fr, ins.value))
                elif isinstance(ins, ir.RefAddr):
                    fr.refs[ins.dest] = (ins.array, self.value(fr, ins.index))
                elif isinstance(ins, ir.RefNull):
                    fr.refs[ins.dest] = (None, tb.const(0))
                elif isinstance(ins, ir.RefCopy):
                    fr.refs[ins.dest] = fr.refs[ins.src]
                elif isinstance(ins, (ir.DerefLoad, ir.DerefStore)):
                    name, off = fr.refs[ins.ref]
                    if name is None:
                        self._faults(st, fr, ((K.NULL_DEREF, tb.TRUE),))
                        return []
                    arr = fr.arrays[name]
                    if not self._faults(st, fr, ((K.BUFFER_OVERFLOW,
                                                  self.in_bounds_fault(off, len(arr))),)):
                        return []
                    off = self._clamp(off, len(arr))
                    if isinstance(ins, ir.DerefLoad):
                        fr.scalars[ins.dest] = self.select(arr, off)
                    else:
                        fr.arrays[name] = self.store(arr, off, self.value(fr, ins.value))
                elif isinstance(ins, ir.Assert):
                    c = self.value(fr, ins.cond)
                    if not self._faults(st, fr, ((K.ASSERT, tb.cmp("eq", c, tb.const(0))),)):
                        return []
                elif isinstance(ins, ir.Call):
                    if len(st.frames) >= self.max_depth:
                        self.on_cut(st)
                        return []
                    args = [self.value(fr, a) for a in ins.args]
                    st.frames.append(self.frame(self.program.function(ins.func), args, ins.dest))
                    continue
                fr.index += 1
                continue
            term = block.terminator
            if isinstance(term, ir.Goto):
                self._enter(fr, term.target)
                continue
            if isinstance(term, ir.Branch):
                cond = self.tb.nonzero(self.value(fr, term.cond))
                edges = (self.program.edge_ids[(fr.func.name, fr.block, term.else_)],
                         self.program.edge_ids[(fr.func.name, fr.block, term.then)])
                dirs = self.on_branch(st, cond, term.site, edges)
                out = []
                for taken in dirs:
                    child = st.fork() if len(dirs) > 1 and taken != dirs[-1] else st
                    cf = child.frames[-1]
                    key = (cf.func.name, cf.block)
                    if taken and key in self.headers:
                        n = cf.loop_iters.get(key, 0) + 1
                        if n > self.k:
                            self.on_cut(child)
                            continue
                        cf.loop_iters[key] = n
                        child.depth = max(child.depth, n)
                    child.decisions = child.decisions + ((term.site, taken),)
                    self._enter(cf, term.then if taken else term.else_)
                    out.append(child)
                return out
            # return
            v = tb.const(0) if term.value is None else self.value(fr, term.value)
            done = st.frames.pop()
            if not st.frames:
                self.on_complete(st)
                return []
            caller = st.frames[-1]
            if done.dest is not None:
                caller.scalars[done.dest] = v
            caller.index += 1

    def _clamp(self, idx: Term, size: int) -> Term:
        # after the bounds obligation the index is known in range
        if idx.is_const and not 0 <= idx.value < size:
            return self.tb.const(0)
        return idx

    def _enter(self, fr: SymFrame, target: int) -> None:
        key = (fr.func.name, target)
        if key in self.headers and fr.block < target:
            fr.loop_iters[key] = 0  # entering the loop from outside
        fr.block, fr.index = target, 0


class Explorer(Engine):
    """Depth-first exploration with incremental solving under assumptions."""

    def __init__(self, program: ir.Program, k: int, exclude=(), timeout: float | None = 60.0,
                 check_properties: bool = True, properties=None, frontier_edges=None,
                 deadline: float | None = None, max_depth: int = DEFAULT_MAX_DEPTH):
        super().__init__(program, k, max_depth)
        self.exclude = {tuple(p) for p in exclude}
        self.timeout = timeout
        self.check_properties = check_properties
        self.properties = None if properties is None else set(properties)
        self.frontier = set(frontier_edges or ())
        self.frontier_models: list[tuple[int, bytes]] = []
        self.deadline = deadline
        self.blaster = Blaster(self.tb)
        self.solver = Solver()
        self._synced = 0
        self._complete: list[SymbolicPath] = []
        self.timed_out = False

    # -- solving -------------------------------------------------------------

    def solve(self, conjuncts: list[Term]) -> SatResult:
        tb = self.tb
        if any(c is tb.FALSE for c in conjuncts):
            return SatResult(SatStatus.UNSAT)
        lits = [self.blaster.lit(c) for c in conjuncts if c is not tb.TRUE]
        clauses = self.blaster.g.clauses
        for c in clauses[self._synced:]:
            self.solver.add_clause(c)
        self._synced = len(clauses)
        timeout = self.timeout
        if self.deadline is not None:
            left = max(0.0, self.deadline - time.monotonic())
            timeout = left if timeout is None else min(timeout, left)
        self.stats.queries += 1
        res = self.solver.solve(lits, timeout)
        if res.status is SatStatus.TIMEOUT:
            self.stats.timeouts += 1
            self.timed_out = True
        return res

    def model_bytes(self, model: dict[int, bool], length: int | None = None) -> bytes:
        if length is None:
            length = max(self.blaster.byte_vars, default=-1) + 1
        return self.blaster.decode_bytes(model, length)

    def _holds(self, st: SymState, t: Term) -> bool | None:
        """Value of ``t`` under the state's witness input, if one is known."""
        if st.witness is None:
            return None
        return bool(evaluate(t, input_env(st.witness), st.wcache))

    def _assume(self, st: SymState, t: Term) -> None:
        if t is self.tb.TRUE:
            return
        st.pc.append(t)
        if st.witness is not None and not self._holds(st, t):
            st.witness, st.wcache = None, {}

    def _feasible(self, st: SymState, extra: Term) -> tuple[bool, bytes | None]:
        if extra is self.tb.FALSE:
            return False, None
        if self._holds(st, extra):
            return True, st.witness
        res = self.solve(st.pc + [extra])
        if res.sat:
            return True, self.model_bytes(res.model)
        return res.status is SatStatus.TIMEOUT, None

    # -- hooks -----------------------------------------------------------------

    def on_fault(self, st: SymState, prop: ir.SafetyProperty, fault: Term) -> bool:
        tb = self.tb
        checked = self.check_properties and (self.properties is None or prop in self.properties)
        if not checked or st.excluded:
            if checked:
                self.stats.skipped += 1
            self._assume(st, tb.not_(fault))
            return fault is not tb.TRUE
        self.stats.obligations += 1
        if self._holds(st, fault):
            self.stats.sat += 1
            raise Found(st, prop, st.witness[:st.cursor].ljust(st.cursor, b"\0"))
        res = self.solve(st.pc + [fault])
        if res.sat:
            self.stats.sat += 1
            raise Found(st, prop, self.model_bytes(res.model, st.cursor))
        if res.status is SatStatus.UNSAT:
            self.stats.unsat += 1
            return fault is not tb.TRUE  # safety is implied by the path condition
        self._assume(st, tb.not_(fault))
        return fault is not tb.TRUE

    def on_branch(self, st: SymState, cond: Term, site: int, edges: tuple[int, int]) -> list[int]:
        tb = self.tb
        if cond.is_const:
            return [1 if cond.value else 0]
        dirs = []
        witnesses = {}
        for taken, c in ((1, cond), (0, tb.not_(cond))):
            ok, w = self._feasible(st, c)
            if ok:
                dirs.append(taken)
                witnesses[taken] = w
                if w is not None and edges[taken] in self.frontier:
                    self.frontier.discard(edges[taken])
                    self.frontier_models.append((edges[taken], w))
        # the last direction continues in ``st`` itself; record conditions per child below
        self._pending = (cond, witnesses)
        return dirs

    def on_complete(self, st: SymState) -> None:
        if st.excluded:
            self.stats.excluded_paths += 1
            return
        if st.witness is None:
            res = self.solve(st.pc)
            if not res.sat:
                return
        self.stats.paths += 1
        self._complete.append(SymbolicPath(st.decisions, st.depth))

    # -- driver ----------------------------------------------------------------

    def paths(self):
        """Depth-first stream of complete, non-excluded symbolic paths."""
        root = self.initial()
        root.excluded = self._prefix_excluded(root.decisions)
        stack = [root]
        tb = self.tb
        while stack:
            if self.deadline is not None and time.monotonic() > self.deadline:
                self.timed_out = True
                self.stats.timeouts += 1
                return
            st = stack.pop()
            self._pending = None
            children = self.step(st)
            if self._pending is not None:
                cond, witnesses = self._pending
                for child in children:
                    taken = child.decisions[-1][1]
                    c = cond if taken else tb.not_(cond)
                    child.pc.append(c)
                    w = witnesses.get(taken)
                    if w is not child.witness:
                        child.witness, child.wcache = w, {}
                    child.excluded = self._prefix_excluded(child.decisions)
            else:
                for child in children:
                    child.excluded = self._prefix_excluded(child.decisions)
            while self._complete:
                yield self._complete.pop(0)
            stack.extend(reversed(children))  # then-side first

    def _prefix_excluded(self, decisions: tuple) -> bool:
        if not self.exclude:
            return False
        return tuple(s * 2 + t for s, t in decisions) in self.exclude

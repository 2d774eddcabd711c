"""Concrete execution of programs on test-case byte streams."""

from __future__ import annotations

import threading

import numpy as np

from .._accel import jit_enabled
from ..minir.ir import Program, SafetyProperty
from .bytecode import FAULT_CODES, compile_program, decode_ref
from .kernel import ST_BUDGET, ST_COMPLETED, ST_DECISIONS, ST_DEPTH, ST_FAULT, empty_outputs, run_vm
from .outcome import ExecOutcome, ExecutionPath, Frame, State, Status

DEFAULT_STEP_BUDGET = 1_000_000
DEFAULT_MAX_DEPTH = 64


class MismatchError(Exception):
    """A counterexample did not reproduce its claimed fault concretely."""


class Executor:
    """Compiled interpreter for one program; owns its scratch buffers.

    Instances are not thread-safe; use one per worker.
    """

    def __init__(self, program: Program, max_depth: int = DEFAULT_MAX_DEPTH,
                 backend: str | None = None):
        self.program = program
        self.max_depth = max_depth
        self.backend = backend or ("jit" if jit_enabled() else "py")
        self.bc = compile_program(program)
        self._fn = run_vm.backend(self.backend)
        self._decision_cap = 256
        self._alloc()

    def _alloc(self) -> None:
        out = empty_outputs(self.bc, self.max_depth, self._decision_cap)
        tables = self.bc.tables()
        if self.backend == "py":
            # plain lists index much faster than numpy scalars in interpreted mode
            tables = tuple(t.tolist() for t in tables)
            out = tuple(o.tolist() for o in out)
        self._tables = tables
        self._out = out

    def _prepare(self, data: bytes):
        if self.backend == "py":
            return bytes(data)
        return np.frombuffer(bytes(data), dtype=np.uint8)

    def run_raw(self, data: bytes, step_budget: int = DEFAULT_STEP_BUDGET) -> tuple:
        """Execute and return the kernel's result tuple.

        (status, fault code, pc, steps, decisions, return value, cursor, depth);
        decision codes and edge hits stay in the scratch buffers.
        """
        buf = self._prepare(data)
        while True:
            res = self._fn(*self._tables, self.bc.entry_id, buf, step_budget,
                           self.max_depth, *self._out)
            if res[0] != ST_DECISIONS:
                return tuple(int(x) for x in res)
            self._decision_cap *= 4
            self._alloc()

    @property
    def decisions(self):
        return self._out[7]

    @property
    def edge_hits(self):
        return self._out[8]

    def decision_codes(self, n: int) -> np.ndarray:
        return np.asarray(self._out[7][:n], dtype=np.int64)

    def hit_edges(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self._out[8], dtype=np.uint8)[:self.bc.n_edges])

    def run(self, data: bytes, step_budget: int = DEFAULT_STEP_BUDGET) -> ExecOutcome:
        status, fcode, pc, steps, ndec, retval, cursor, depth = self.run_raw(data, step_budget)
        path = ExecutionPath.from_codes(self.decision_codes(ndec))
        edges = frozenset(int(e) for e in self.hit_edges())
        if status == ST_COMPLETED:
            return ExecOutcome(Status.COMPLETED, path, edges, steps, return_value=retval,
                               input_cursor=cursor)
        if status == ST_FAULT:
            loc = self.bc.pc_loc[pc]
            prop = SafetyProperty(FAULT_CODES[fcode], loc)
            return ExecOutcome(Status.FAULT, path, edges, steps, fault=prop,
                               state=self._snapshot(pc, depth, cursor), input_cursor=cursor)
        detail = "call depth limit" if status == ST_DEPTH else "step budget"
        assert status in (ST_BUDGET, ST_DEPTH)
        return ExecOutcome(Status.BUDGET_EXHAUSTED, path, edges, steps, input_cursor=cursor,
                           detail=detail)

    def _snapshot(self, pc: int, depth: int, cursor: int) -> State:
        slots, heap, fr_func, fr_base, fr_hbase, fr_ret = self._out[:6]
        frames = []
        for j in range(depth):
            fid = int(fr_func[j])
            f = self.program.functions[fid]
            base, hbase = int(fr_base[j]), int(fr_hbase[j])
            at = pc if j == depth - 1 else int(fr_ret[j + 1]) - 1
            names = self.bc.slot_names[fid]
            scalars = {n: int(slots[base + i]) for i, n in enumerate(names[:len(f.scalars)])}
            refs = {}
            for i, n in enumerate(names[len(f.scalars):]):
                region, off = decode_ref(int(slots[base + len(f.scalars) + i]))
                refs[n] = (None, 0) if region == 0 else (f.arrays[region - 1][0], off)
            arrays = {}
            k0 = int(self.bc.fn_arr_start[fid])
            for k, (name, size) in enumerate(f.arrays):
                off = hbase + int(self.bc.arr_off[k0 + k])
                arrays[name] = tuple(int(v) for v in heap[off:off + size])
            frames.append(Frame(self.bc.pc_loc[at], scalars, refs, arrays))
        return State(tuple(frames), cursor)


_local = threading.local()


def executor_for(program: Program, backend: str | None = None) -> Executor:
    """Per-thread cached executor for ``program``."""
    cache = getattr(_local, "cache", None)
    if cache is None:
        cache = _local.cache = {}
    key = (id(program), backend or ("jit" if jit_enabled() else "py"))
    entry = cache.get(key)
    if entry is None or entry.program is not program:
        entry = cache[key] = Executor(program, backend=backend)
        if len(cache) > 64:
            cache.pop(next(iter(cache)))
    return entry


def run(program: Program, data: bytes, step_budget: int = DEFAULT_STEP_BUDGET) -> ExecOutcome:
    """Execute ``program`` on ``data``; reads past the end yield zero."""
    if step_budget < 1:
        raise ValueError("step_budget must be positive")
    return executor_for(program).run(data, step_budget)


def replay(program: Program, cex, step_budget: int = DEFAULT_STEP_BUDGET) -> ExecOutcome:
    """Run a counterexample's input and confirm it faults as claimed."""
    outcome = run(program, cex.inputs, step_budget)
    claimed = cex.property
    if outcome.fault != claimed:
        got = "no fault" if outcome.fault is None else str(outcome.fault)
        raise MismatchError(f"counterexample claims {claimed} but execution gave {got}")
    return outcome

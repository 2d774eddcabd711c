"""Tree-walking reference interpreter.

Slow but independent of the bytecode kernel.  Used to reconstruct state
traces for counterexamples, to count loop iterations, and as a differential
oracle for the kernel in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..minir import ir
from .outcome import ExecOutcome, ExecutionPath, Frame, State, Status
from .semantics import eval_op, read_input


@dataclass
class _Activation:
    func: ir.Function
    block: int = 0
    index: int = 0
    scalars: dict = field(default_factory=dict)
    refs: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)
    dest: str | None = None
    loop_iters: dict = field(default_factory=dict)

    def freeze(self) -> Frame:
        return Frame(ir.Location(self.func.name, self.block, self.index), dict(self.scalars),
                     dict(self.refs), {k: tuple(v) for k, v in self.arrays.items()})


@dataclass
class ReferenceResult:
    outcome: ExecOutcome
    trace: list  # State snapshots at each block entry, plus the final state
    loop_iterations: dict  # (func, header) -> max iterations in one activation


def _new_activation(f: ir.Function, args: list[int], dest: str | None) -> _Activation:
    act = _Activation(f, dest=dest)
    act.scalars = {n: 0 for n in f.scalars}
    for p, v in zip(f.params, args):
        act.scalars[p] = v
    act.refs = {n: (None, 0) for n in f.refs}
    act.arrays = {n: [0] * size for n, size in f.arrays}
    return act


def execute(program: ir.Program, data: bytes, step_budget: int = 1_000_000,
            max_depth: int = 64, trace: bool = False) -> ReferenceResult:
    stack = [_new_activation(program.function(program.entry), [], None)]
    steps = 0
    cursor = 0
    decisions: list[tuple[int, int]] = []
    edges: set[int] = set()
    states: list[State] = []
    loop_max: dict = {}
    headers = {(f.name, lp.header): lp for f in program.functions for lp in f.loops}

    def snapshot() -> State:
        return State(tuple(a.freeze() for a in stack), cursor)

    def finish(status: Status, fault=None, ret=None, detail="") -> ReferenceResult:
        state = snapshot() if status is Status.FAULT else None
        if trace and state is not None:
            states.append(state)
        out = ExecOutcome(status, ExecutionPath(tuple(decisions)), frozenset(edges), steps,
                          fault=fault, state=state, return_value=ret, input_cursor=cursor,
                          detail=detail)
        return ReferenceResult(out, states, loop_max)

    def value(act: _Activation, op: ir.Operand) -> int:
        return op.value if isinstance(op, ir.Const) else act.scalars[op.name]

    def enter(act: _Activation, target: int, from_block: int) -> None:
        key = (act.func.name, target)
        lp = headers.get(key)
        if lp is not None and from_block < target:
            act.loop_iters[key] = 0  # entering from outside the loop
        act.block, act.index = target, 0
        if trace:
            states.append(snapshot())

    if trace:
        states.append(snapshot())
    while True:
        act = stack[-1]
        block = act.func.blocks[act.block]
        if steps >= step_budget:
            return finish(Status.BUDGET_EXHAUSTED, detail="step budget")
        steps += 1
        loc = ir.Location(act.func.name, act.block, act.index)
        if act.index < len(block.instructions):
            ins = block.instructions[act.index]
            fault = None
            if isinstance(ins, ir.Assign):
                args = [value(act, a) for a in ins.args]
                v, fault = eval_op(ins.op, *args)
                if fault is None:
                    act.scalars[ins.dest] = v
            elif isinstance(ins, ir.Input):
                act.scalars[ins.dest], cursor = read_input(data, cursor, ins.width)
            elif isinstance(ins, (ir.Load, ir.Store)):
                arr = act.arrays[ins.array]
                i = value(act, ins.index)
                if not 0 <= i < len(arr):
                    fault = ir.FaultKind.BUFFER_OVERFLOW
                elif isinstance(ins, ir.Load):
                    act.scalars[ins.dest] = arr[i]
                else:
                    arr[i] = value(act, ins.value)
            elif isinstance(ins, ir.RefAddr):
                act.refs[ins.dest] = (ins.array, value(act, ins.index))
            elif isinstance(ins, ir.RefNull):
                act.refs[ins.dest] = (None, 0)
            elif isinstance(ins, ir.RefCopy):
                act.refs[ins.dest] = act.refs[ins.src]
            elif isinstance(ins, (ir.DerefLoad, ir.DerefStore)):
                name, off = act.refs[ins.ref]
                if name is None:
                    fault = ir.FaultKind.NULL_DEREF
                elif not 0 <= off < len(act.arrays[name]):
                    fault = ir.FaultKind.BUFFER_OVERFLOW
                elif isinstance(ins, ir.DerefLoad):
                    act.scalars[ins.dest] = act.arrays[name][off]
                else:
                    act.arrays[name][off] = value(act, ins.value)
            elif isinstance(ins, ir.Assert):
                if value(act, ins.cond) == 0:
                    fault = ir.FaultKind.ASSERT
            elif isinstance(ins, ir.Call):
                if len(stack) >= max_depth:
                    return finish(Status.BUDGET_EXHAUSTED, detail="call depth limit")
                args = [value(act, a) for a in ins.args]
                stack.append(_new_activation(program.function(ins.func), args, ins.dest))
                if trace:
                    states.append(snapshot())
                continue
            if fault is not None:
                return finish(Status.FAULT, ir.SafetyProperty(fault, loc))
            act.index += 1
            continue
        term = block.terminator
        if isinstance(term, ir.Goto):
            edges.add(program.edge_ids[(act.func.name, act.block, term.target)])
            enter(act, term.target, act.block)
        elif isinstance(term, ir.Branch):
            taken = 1 if value(act, term.cond) != 0 else 0
            decisions.append((term.site, taken))
            target = term.then if taken else term.else_
            edges.add(program.edge_ids[(act.func.name, act.block, target)])
            key = (act.func.name, act.block)
            if key in headers and taken:
                n = act.loop_iters.get(key, 0) + 1
                act.loop_iters[key] = n
                loop_max[key] = max(loop_max.get(key, 0), n)
            enter(act, target, act.block)
        else:
            edges.add(program.edge_ids[(act.func.name, act.block, ir.EXIT)])
            ret = 0 if term.value is None else value(act, term.value)
            done = stack.pop()
            if not stack:
                return finish(Status.COMPLETED, ret=ret)
            caller = stack[-1]
            if done.dest is not None:
                caller.scalars[done.dest] = ret
            caller.index += 1
            if trace:
                states.append(snapshot())

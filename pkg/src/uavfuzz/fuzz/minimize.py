"""Crash test-case minimization: greedy chunk removal, then byte zeroing."""

from __future__ import annotations

from ..minir.ir import Program
from ..vm.machine import DEFAULT_STEP_BUDGET, executor_for
from .testcase import Origin, OriginKind, TestCase


class NonReproducible(RuntimeError):
    """The input handed to minimize() does not fault."""


def minimize(program: Program, crash: TestCase, step_budget: int = DEFAULT_STEP_BUDGET) -> TestCase:
    ex = executor_for(program)
    first = ex.run(crash.data, step_budget)
    if not first.faulted:
        raise NonReproducible(f"test case {crash.id} does not fault")
    target = first.fault

    def same(data: bytes) -> bool:
        return ex.run(data, step_budget).fault == target

    data = bytes(crash.data)
    # inputs past the cursor at the fault were never read
    data = data[:first.input_cursor] if same(data[:first.input_cursor]) else data
    chunk = max(1, len(data) // 2)
    while chunk >= 1:
        i = 0
        while i < len(data):
            cand = data[:i] + data[i + chunk:]
            if same(cand):
                data = cand
            else:
                i += chunk
        chunk //= 2
    buf = bytearray(data)
    for i in range(len(buf)):
        if buf[i]:
            old, buf[i] = buf[i], 0
            if not same(bytes(buf)):
                buf[i] = old
    data = bytes(buf)
    if data == crash.data:
        return crash
    return TestCase(data, Origin(OriginKind.MUTATED, crash.id, "minimize"), crash.tick)

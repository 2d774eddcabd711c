from __future__ import annotations

import random
import struct

import pytest
from conftest import BUGGY, SAFE, program
from hypothesis import given
from hypothesis import strategies as st
from oracles import edges_of_decisions

from uavfuzz.bmc import Counterexample, check
from uavfuzz.minir import FaultKind, Location, SafetyProperty, parse_program
from uavfuzz.vm import Executor, MismatchError, Status, reference, replay, run

NAMES = BUGGY + SAFE
GUARD = parse_program("fn main() { x = input(); assert(x != 66); }")


def word(v: int) -> bytes:
    return struct.pack("<i", v)


# -- run --------------------------------------------------------------------------------

def test_guard_holds():
    out = run(GUARD, word(65))
    assert out.status is Status.COMPLETED and out.fault is None


def test_guard_fails_on_assert_branch():
    out = run(GUARD, word(66))
    assert out.status is Status.FAULT
    assert out.fault.kind is FaultKind.ASSERT
    assert out.state.pc == out.fault.location
    assert out.input_cursor == 4


def test_buffer_index_1024_overflows():
    p = program("buffer_overflow")
    out = run(p, bytes([4, 0]))  # 4 * 256 + 0
    assert out.fault.kind is FaultKind.BUFFER_OVERFLOW
    assert run(p, bytes([3, 255])).status is Status.COMPLETED


def test_short_input_reads_zero():
    p = parse_program("fn main() { x = input(); y = input_byte(); return x + y; }")
    out = run(p, b"\x05")
    assert out.return_value == 5 and out.input_cursor == 5


def test_step_budget_exhaustion():
    p = parse_program("fn main() { while (1) { } }")
    out = run(p, b"", step_budget=500)
    assert out.status is Status.BUDGET_EXHAUSTED and out.steps <= 500
    with pytest.raises(ValueError):
        run(p, b"", step_budget=0)


def test_call_depth_limit():
    p = parse_program("fn f(n) { return f(n + 1); } fn main() { r = f(0); }")
    out = run(p, b"")
    assert out.status is Status.BUDGET_EXHAUSTED and "depth" in out.detail


@pytest.mark.parametrize("src, data, kind", [
    ("fn main() { x = input(); y = x + 1; }", word(2 ** 31 - 1), FaultKind.OVERFLOW),
    ("fn main() { x = input(); y = x - 1; }", word(-2 ** 31), FaultKind.UNDERFLOW),
    ("fn main() { x = input(); y = -x; }", word(-2 ** 31), FaultKind.OVERFLOW),
    ("fn main() { x = input(); y = x / -1; }", word(-2 ** 31), FaultKind.OVERFLOW),
    ("fn main() { x = input(); y = 5 % x; }", word(0), FaultKind.DIV_BY_ZERO),
    ("fn main() { x = input(); y = x << 31; }", word(1), FaultKind.OVERFLOW),
    ("fn main() { ref p = null; *p = 1; }", b"", FaultKind.NULL_DEREF),
    ("fn main() { i32[2] a; x = input_byte(); ref p = &a[x]; y = *p; }", b"\x02",
     FaultKind.BUFFER_OVERFLOW),
    ("fn main() { i32[2] a; x = input(); y = a[x]; }", word(-1), FaultKind.BUFFER_OVERFLOW),
])
def test_fault_kinds(src, data, kind):
    out = run(parse_program(src), data)
    assert out.fault is not None and out.fault.kind is kind


def test_no_wrapping_near_limits():
    p = parse_program("fn main() { x = input(); return x * 2; }")
    assert run(p, word(2 ** 30 - 1)).return_value == 2 ** 31 - 2
    assert run(p, word(2 ** 30)).fault.kind is FaultKind.OVERFLOW


def test_division_truncates_toward_zero():
    p = parse_program("fn main() { a = input(); b = input(); assert(a / b * b + a % b == a); "
                      "return a / b; }")
    assert run(p, word(-7) + word(2)).return_value == -3
    assert run(p, word(7) + word(-2)).return_value == -3


# -- replay -------------------------------------------------------------------------------

def test_replay_assert_false_cex():
    p = program("assert_false")
    v = check(p, k=1)
    out = replay(p, v.counterexample)
    assert out.fault == v.counterexample.property
    assert out.fault.kind is FaultKind.ASSERT


def test_replay_mismatch():
    p = program("div_by_zero")
    prop = next(pr for pr in p.properties if pr.kind is FaultKind.DIV_BY_ZERO)
    fake = Counterexample(inputs=bytes([1, 9]), trace=(), property=prop, depth=1)
    with pytest.raises(MismatchError):
        replay(p, fake)


def test_replay_magic_constant():
    p = program("magic_guard")
    prop = next(pr for pr in p.properties if pr.kind is FaultKind.ASSERT)
    cex = Counterexample(inputs=word(0x4D41474B), trace=(), property=prop, depth=1)
    assert replay(p, cex).fault == prop


def test_replay_wrong_location_is_mismatch():
    p = program("assert_false")
    bogus = SafetyProperty(FaultKind.ASSERT, Location("main", 0, 5))
    with pytest.raises(MismatchError):
        replay(p, Counterexample(b"", (), bogus, 1))


# -- invariants ---------------------------------------------------------------------------

def _pairs(n: int, seed: int = 1):
    rng = random.Random(seed)
    for _ in range(n):
        name = rng.choice(NAMES)
        yield name, bytes(rng.randrange(256) for _ in range(rng.randrange(9)))


def test_determinism_1000_pairs():
    for name, data in _pairs(1000):
        p = program(name)
        a, b = run(p, data), run(p, data)
        assert a == b
        assert a.to_dict() == b.to_dict()


@given(name=st.sampled_from(NAMES), data=st.binary(max_size=10))
def test_edges_match_decision_walk(name, data):
    p = program(name)
    out = run(p, data)
    loc = out.fault.location if out.fault else None
    assert out.edges == edges_of_decisions(p, out.path.codes, loc)


@given(name=st.sampled_from(NAMES), data=st.binary(max_size=10))
def test_fault_location_carries_property(name, data):
    p = program(name)
    out = run(p, data)
    if out.faulted:
        assert out.fault in p.properties
        assert out.fault.kind in p.properties_at(out.fault.location)


def test_fault_first_assert_after_fault_is_uncovered():
    p = parse_program("fn main() { x = input_byte(); y = 10 / x; if (y > 1) { z = 1; } }")
    out = run(p, b"\x00")
    assert out.faulted and len(out.path) == 0
    assert out.edges == frozenset()


@given(name=st.sampled_from(NAMES), data=st.binary(max_size=10))
def test_backends_agree_with_reference(name, data):
    p = program(name)
    ref = reference.execute(p, data).outcome
    for backend in ("jit", "py"):
        out = Executor(p, backend=backend).run(data)
        assert out.status == ref.status
        assert out.fault == ref.fault
        assert out.path == ref.path
        assert out.edges == ref.edges
        assert out.return_value == ref.return_value
        assert out.input_cursor == ref.input_cursor
        assert out.steps == ref.steps
        if out.faulted:
            assert out.state == ref.state


def test_reference_trace_cursor_monotone():
    p = program("checksum_pair")
    res = reference.execute(p, bytes([155, 145]), trace=True)
    cursors = [s.input_cursor for s in res.trace]
    assert cursors == sorted(cursors)
    assert res.outcome.fault.kind is FaultKind.ASSERT

from __future__ import annotations

import pytest
from conftest import CORPUS, TARGETS, program
from hypothesis import given
from hypothesis import strategies as st

from uavfuzz.minir import (Assert, Assign, DerefLoad, FaultKind, Load, ParseError, Return,
                           ValidateError, compute_completeness_threshold, format_program,
                           instruction_faults, parse_program)
from uavfuzz.net import HandlerToggles, handler_source
from uavfuzz.vm import reference

ALL_SOURCES = sorted(CORPUS.glob("*.uir")) + sorted(TARGETS.glob("*.uir"))


# -- parse_program ------------------------------------------------------------------

def test_empty_program():
    p = parse_program("fn main() { }")
    assert len(p.functions) == 1
    (block,) = p.functions[0].blocks
    assert isinstance(block.terminator, Return)


def test_constant_false_assert_carries_property():
    p = parse_program("fn main() { assert(0); }")
    (ins,) = p.functions[0].blocks[0].instructions
    assert isinstance(ins, Assert)
    assert [prop.kind for prop in p.properties] == [FaultKind.ASSERT]


def test_undeclared_use_names_variable():
    with pytest.raises(ValidateError, match=r"\by\b"):
        parse_program("fn main() { x = y; }")


@pytest.mark.parametrize("src", [
    "fn main() { x = ; }",
    "fn main() { x = 1 }",
    "fn main( { }",
    "main() { }",
    "fn main() { x = 4294967296; }",
])
def test_syntax_errors(src):
    with pytest.raises(ParseError):
        parse_program(src)


@pytest.mark.parametrize("src, needle", [
    ("fn f() { }", "main"),
    ("fn main() { i32[4] a; a = 1; }", "a"),
    ("fn main() { return g(); }", "g"),
    ("fn main() { f(1); } fn f(a, b) { }", "f"),
])
def test_validation_errors(src, needle):
    with pytest.raises(ValidateError, match=needle):
        parse_program(src)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as e:
        parse_program("fn main() {\n  x = 1 +;\n}")
    assert "2" in str(e.value)


def test_every_access_carries_its_property():
    p = program("null_deref")
    for f in p.functions:
        for b, block in enumerate(f.blocks):
            for ins in block.instructions:
                kinds = instruction_faults(ins)
                if isinstance(ins, Load):
                    assert FaultKind.BUFFER_OVERFLOW in kinds
                if isinstance(ins, DerefLoad):
                    assert {FaultKind.NULL_DEREF, FaultKind.BUFFER_OVERFLOW} <= set(kinds)
                if isinstance(ins, Assign) and ins.op == "div":
                    assert FaultKind.DIV_BY_ZERO in kinds


def test_input_widths():
    p = parse_program("fn main() { a = input(); b = input_byte(); }")
    assert p.input_reads() == [4, 1]


# -- round trip ----------------------------------------------------------------------

@pytest.mark.parametrize("path", ALL_SOURCES, ids=lambda p: p.stem)
def test_round_trip_corpus(path):
    p = parse_program(path.read_text())
    again = parse_program(format_program(p))
    assert again == p
    assert format_program(again) == format_program(p)


@pytest.mark.parametrize("toggles", [HandlerToggles(), HandlerToggles(unchecked_copy=True, no_auth=True,
                                                                       unbounded_queue=True)])
def test_round_trip_handler(toggles):
    p = parse_program(handler_source(toggles))
    assert parse_program(format_program(p)) == p


_OPS = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "==", "!=", "<", "<=", ">", ">=",
        "&&", "||"]


@st.composite
def expressions(draw, depth=0):
    if depth > 2 or draw(st.booleans()):
        return draw(st.sampled_from(["x", "y", "0", "7", "-3", "0x10", "'A'", "buf[1]"]))
    kind = draw(st.sampled_from(["bin", "bin", "un", "paren"]))
    if kind == "un":
        return draw(st.sampled_from(["-", "!", "~"])) + draw(expressions(depth + 1))
    if kind == "paren":
        return "(" + draw(expressions(depth + 1)) + ")"
    a, b = draw(expressions(depth + 1)), draw(expressions(depth + 1))
    return f"{a} {draw(st.sampled_from(_OPS))} {b}"


@st.composite
def programs(draw):
    stmts = []
    for _ in range(draw(st.integers(1, 5))):
        e = draw(expressions())
        stmts.append(draw(st.sampled_from([
            f"z = {e};", f"assert({e});", f"if ({e}) {{ z = {e}; }} else {{ y = 1; }}",
            f"buf[2] = {e};", f"while (z < 3) {{ z = z + 1; }}"])))
    return ("fn main() { i32[4] buf; x = input_byte(); y = input(); z = 0; "
            + " ".join(stmts) + " }")


@given(programs())
def test_round_trip_generated(src):
    p = parse_program(src)
    assert parse_program(format_program(p)) == p


# -- completeness threshold ------------------------------------------------------------------

def test_threshold_loop_free():
    info = compute_completeness_threshold(parse_program("fn main() { x = input(); }"))
    assert info.known and info.threshold == 0


def test_threshold_counted_loop():
    info = compute_completeness_threshold(
        parse_program("fn main() { i = 0; while (i < 10) { i = i + 1; } }"))
    assert info.threshold == 10


def test_threshold_input_dependent_loop():
    info = compute_completeness_threshold(parse_program("fn main() { while (input_byte() != 0) { } }"))
    assert not info.known and info.threshold is None


@pytest.mark.parametrize("src, bound", [
    ("fn main() { i = 10; while (i > 0) { i = i - 2; } }", 5),
    ("fn main() { i = 1; while (i <= 10) { i = i + 1; } }", 10),
    ("fn main() { i = 0; while (i < 10) { i = i + 3; } }", 4),
    ("fn main() { i = 5; while (i < 3) { i = i + 1; } }", 0),
    ("fn main() { i = 0; while (i < 10) { i = i + 1; i = i + 1; } }", None),
    ("fn main() { i = 0; while (i < 10) { if (input_byte()) { i = i + 1; } } }", None),
])
def test_threshold_shapes(src, bound):
    info = compute_completeness_threshold(parse_program(src))
    assert info.threshold == bound


def test_threshold_recursion_unknown():
    info = compute_completeness_threshold(parse_program(
        "fn f(n) { if (n > 0) { return f(n - 1); } return 0; } fn main() { r = f(3); }"))
    assert not info.known


LOOPED = ["loop_iter10", "safe_loop"]


@pytest.mark.parametrize("name", LOOPED)
@given(data=st.binary(max_size=8))
def test_threshold_bounds_concrete_iterations(name, data):
    p = program(name)
    info = compute_completeness_threshold(p)
    res = reference.execute(p, data)
    for key, count in res.loop_iterations.items():
        bound = info.loops[key]
        assert bound is not None and count <= bound


def test_threshold_bound_is_attained():
    # hand simulation: the loop runs for i = 1..10
    p = program("loop_iter10")
    res = reference.execute(p, b"\x00")
    assert max(res.loop_iterations.values()) == 10 == compute_completeness_threshold(p).threshold

"""Reference integer semantics: 64-bit evaluation checked against the i32 range."""

from __future__ import annotations

from ..minir.ir import INT_MAX, INT_MIN, FaultKind


def wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v & 0x80000000 else v


def _checked(v: int) -> tuple[int, FaultKind | None]:
    if v > INT_MAX:
        return 0, FaultKind.OVERFLOW
    if v < INT_MIN:
        return 0, FaultKind.UNDERFLOW
    return v, None


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def eval_op(op: str, a: int, b: int = 0) -> tuple[int, FaultKind | None]:
    """Apply ``op`` to i32 operands; returns (value, fault-or-None)."""
    if op == "add":
        return _checked(a + b)
    if op == "sub":
        return _checked(a - b)
    if op == "mul":
        return _checked(a * b)
    if op == "div":
        if b == 0:
            return 0, FaultKind.DIV_BY_ZERO
        return _checked(trunc_div(a, b))
    if op == "mod":
        if b == 0:
            return 0, FaultKind.DIV_BY_ZERO
        return a - trunc_div(a, b) * b, None
    if op == "shl":
        return _checked(a << (b & 31))
    if op == "shr":
        return a >> (b & 31), None
    if op == "and":
        return a & b, None
    if op == "or":
        return a | b, None
    if op == "xor":
        return a ^ b, None
    if op == "eq":
        return int(a == b), None
    if op == "ne":
        return int(a != b), None
    if op == "lt":
        return int(a < b), None
    if op == "le":
        return int(a <= b), None
    if op == "gt":
        return int(a > b), None
    if op == "ge":
        return int(a >= b), None
    if op == "land":
        return int(a != 0 and b != 0), None
    if op == "lor":
        return int(a != 0 or b != 0), None
    if op == "neg":
        return _checked(-a)
    if op == "not":
        return int(a == 0), None
    if op == "bnot":
        return ~a, None
    if op == "copy":
        return a, None
    raise ValueError(f"unknown op {op!r}")


def read_input(data: bytes, cursor: int, width: int) -> tuple[int, int]:
    """Read ``width`` bytes at ``cursor``; missing bytes read as zero."""
    chunk = data[cursor:cursor + width].ljust(width, b"\0")
    if width == 1:
        return chunk[0], cursor + width
    return int.from_bytes(chunk, "little", signed=True), cursor + width

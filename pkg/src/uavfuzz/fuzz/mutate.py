"""Byte-level mutation operators."""

from __future__ import annotations

import random
import struct
from enum import Enum
from typing import Sequence

from .testcase import DEFAULT_MAX_LEN, Origin, OriginKind, TestCase

INTERESTING_32 = (0, 1, -1, 2**31 - 1, -(2**31), 1024)
ARITH_MAX = 35


class Operator(str, Enum):
    BIT_FLIP = "bit_flip"
    SUBSTITUTE = "byte_substitute"
    INSERT = "byte_insert"
    DELETE = "byte_delete"
    ARITH = "arith32"
    DUPLICATE = "block_duplicate"
    SPLICE = "splice"
    INTERESTING = "interesting"


def applicable(data: bytes, pool: Sequence[bytes] = (), max_len: int = DEFAULT_MAX_LEN
               ) -> list[Operator]:
    """Operators that can act on ``data``; only insertion applies to empty input."""
    n = len(data)
    if n == 0:
        return [Operator.INSERT] if max_len > 0 else []
    ops = [Operator.BIT_FLIP, Operator.SUBSTITUTE, Operator.DELETE, Operator.INTERESTING]
    if n < max_len:
        ops += [Operator.INSERT, Operator.DUPLICATE]
    if n >= 4:
        ops.append(Operator.ARITH)
    if any(p and p != data for p in pool):
        ops.append(Operator.SPLICE)
    ops.sort(key=list(Operator).index)
    return ops


def apply_operator(data: bytes, op: Operator, rng: random.Random, pool: Sequence[bytes] = (),
                   *, pos: int | None = None, value: int | None = None,
                   max_len: int = DEFAULT_MAX_LEN) -> bytes:
    """Apply ``op`` once.  ``pos`` and ``value`` pin the otherwise random choices."""
    buf = bytearray(data)
    n = len(buf)
    if op is Operator.INSERT:
        at = rng.randint(0, n) if pos is None else pos
        buf.insert(at, rng.randrange(256) if value is None else value)
    elif n == 0:
        raise ValueError(f"{op.value} needs a non-empty input")
    elif op is Operator.BIT_FLIP:
        at = rng.randrange(n) if pos is None else pos
        bit = rng.randrange(8) if value is None else value
        buf[at] ^= 1 << bit
    elif op is Operator.SUBSTITUTE:
        at = rng.randrange(n) if pos is None else pos
        if value is None:
            value = (buf[at] + rng.randrange(1, 256)) & 0xFF  # always changes the byte
        buf[at] = value
    elif op is Operator.DELETE:
        at = rng.randrange(n) if pos is None else pos
        length = rng.randint(1, min(4, n - at)) if value is None else value
        del buf[at:at + length]
    elif op is Operator.ARITH:
        if n < 4:
            raise ValueError("arith32 needs at least 4 bytes")
        at = rng.randrange(n - 3) if pos is None else pos
        delta = rng.choice((-1, 1)) * rng.randint(1, ARITH_MAX) if value is None else value
        (word,) = struct.unpack_from("<I", buf, at)
        struct.pack_into("<I", buf, at, (word + delta) & 0xFFFFFFFF)
    elif op is Operator.DUPLICATE:
        at = rng.randrange(n) if pos is None else pos
        length = rng.randint(1, min(16, n - at)) if value is None else value
        buf[at + length:at + length] = buf[at:at + length]
    elif op is Operator.SPLICE:
        others = [p for p in pool if p and p != data]
        if not others:
            raise ValueError("splice needs another non-empty corpus member")
        other = others[rng.randrange(len(others))] if value is None else pool[value]
        cut = rng.randint(0, n) if pos is None else pos
        cut2 = rng.randint(0, len(other))
        buf = buf[:cut] + bytearray(other[cut2:])
    elif op is Operator.INTERESTING:
        at = rng.randrange(n) if pos is None else pos
        const = rng.choice(INTERESTING_32) if value is None else value
        raw = struct.pack("<I", const & 0xFFFFFFFF)
        buf[at:at + 4] = raw
    else:  # pragma: no cover
        raise ValueError(op)
    return bytes(buf[:max_len])


def mutate(parent: TestCase, rng_seed: int, corpus: Sequence[TestCase] = (),
           max_len: int = DEFAULT_MAX_LEN) -> TestCase:
    """One randomly chosen operator applied to ``parent``.

    Deterministic in (parent bytes, rng_seed, corpus snapshot).
    """
    rng = random.Random(rng_seed)
    pool = [tc.data for tc in corpus]
    ops = applicable(parent.data, pool, max_len)
    op = ops[rng.randrange(len(ops))]
    child = apply_operator(parent.data, op, rng, pool, max_len=max_len)
    return TestCase(child, Origin(OriginKind.MUTATED, parent.id, op.value))

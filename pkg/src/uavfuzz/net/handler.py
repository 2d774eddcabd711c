"""The endpoint's command handler, written in mini-IR.

The handler reads a fixed header of five words followed by the datagram
bytes::

    len  auth  mode  z  backlog  byte[0] .. byte[len-1]

``auth`` is 1 when the sender is the registered controller, 0 when it is
another address and 2 when no controller is registered yet.  ``mode`` is
0 on the ground and 1 in flight.  ``backlog`` is the number of queued
commands the handler scans before parsing.  The return value packs a
reply code in the low four bits and a numeric argument above them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

from ..minir import parse_program
from ..minir.ir import Program
from ..vm.machine import executor_for
from ..vm.outcome import ExecOutcome

DEFAULT_HANDLER_STEPS = 20_000
MAX_DIGITS = 4
CM_MIN, CM_MAX = 20, 500


class Reply(IntEnum):
    ERROR = 0
    OK = 1
    TAKEOFF = 2
    LAND = 3
    UP = 4
    DOWN = 5
    BATTERY = 6
    IGNORE = 7
    SESSION = 8


class Auth(IntEnum):
    OTHER = 0
    CONTROLLER = 1
    UNCLAIMED = 2


@dataclass(frozen=True)
class HandlerToggles:
    buffer_size: int = 1024
    unchecked_copy: bool = False
    no_auth: bool = False
    unbounded_queue: bool = False
    queue_limit: int = 64


def _word(text: str, at: int = 0) -> str:
    return " && ".join(f"buf[{at + i}] == {ord(c)}" for i, c in enumerate(text))


def _exact(text: str, kind: int) -> str:
    return (f"  if (len == {len(text)}) {{\n"
            f"    if ({_word(text)}) {{ kind = {kind}; }}\n"
            f"  }}\n")


def _prefixed(text: str, kind: int) -> str:
    # "up " must be followed by at least one more byte
    return (f"  if (len > {len(text)}) {{\n"
            f"    if ({_word(text)}) {{ kind = {kind}; start = {len(text)}; }}\n"
            f"  }}\n")


def handler_source(t: HandlerToggles) -> str:
    if t.buffer_size < 1:
        raise ValueError("buffer size must be positive")
    lines = [f"// command handler: buffer {t.buffer_size}, unchecked_copy={t.unchecked_copy},"
             f" no_auth={t.no_auth}, unbounded_queue={t.unbounded_queue}\n",
             "fn main() {\n",
             f"  i32[{t.buffer_size}] buf;\n",
             "  len = input();\n  auth = input();\n  mode = input();\n"
             "  z = input();\n  backlog = input();\n"]
    if not t.unchecked_copy:
        lines.append(f"  if (len > {t.buffer_size}) {{ return {Reply.IGNORE}; }}\n")
    if not t.unbounded_queue:
        lines.append(f"  if (backlog > {t.queue_limit}) {{ backlog = {t.queue_limit}; }}\n")
    lines.append("  q = 0;\n  while (q < backlog) { q = q + 1; }\n"
                 "  i = 0;\n  while (i < len) { buf[i] = input_byte(); i = i + 1; }\n"
                 "  kind = 0;\n  start = 0;\n")
    lines.append(_exact("command", Reply.SESSION))
    lines.append(_exact("takeoff", Reply.TAKEOFF))
    lines.append(_exact("land", Reply.LAND))
    lines.append(_exact("battery?", Reply.BATTERY))
    lines.append(_prefixed("up ", Reply.UP))
    lines.append(_prefixed("down ", Reply.DOWN))
    lines.append(f"  if (kind == 0) {{ return {Reply.ERROR}; }}\n")
    if not t.no_auth:
        lines.append(f"  if (auth == {Auth.OTHER}) {{ return {Reply.ERROR}; }}\n"
                     f"  if (auth == {Auth.UNCLAIMED}) {{\n"
                     f"    if (kind != {Reply.SESSION}) {{ return {Reply.ERROR}; }}\n"
                     "  }\n")
    lines.append(
        "  n = 0;\n"
        "  if (start > 0) {\n"
        "    ok = 1;\n    digits = 0;\n    j = start;\n"
        "    while (j < len) {\n"
        "      c = buf[j];\n"
        "      if (c < '0' || c > '9') { ok = 0; }\n"
        f"      if (digits >= {MAX_DIGITS}) {{ ok = 0; }}\n"
        "      if (ok == 1) { n = n * 10 + (c - '0'); digits = digits + 1; }\n"
        "      j = j + 1;\n"
        "    }\n"
        f"    if (ok == 0) {{ return {Reply.ERROR}; }}\n"
        f"    if (n < {CM_MIN}) {{ return {Reply.ERROR}; }}\n"
        f"    if (n > {CM_MAX}) {{ return {Reply.ERROR}; }}\n"
        "  }\n")
    lines.append(
        f"  if (kind == {Reply.TAKEOFF}) {{\n"
        f"    if (mode != 0) {{ return {Reply.ERROR}; }}\n  }}\n"
        f"  if (kind == {Reply.LAND}) {{\n"
        f"    if (mode != 1) {{ return {Reply.ERROR}; }}\n  }}\n"
        f"  if (kind == {Reply.UP}) {{\n"
        f"    if (mode != 1) {{ return {Reply.ERROR}; }}\n  }}\n"
        f"  if (kind == {Reply.DOWN}) {{\n"
        f"    if (mode != 1) {{ return {Reply.ERROR}; }}\n"
        f"    if (z - n < 0) {{ return {Reply.ERROR}; }}\n  }}\n"
        "  return kind + n * 16;\n"
        "}\n")
    return "".join(lines)


@lru_cache(maxsize=32)
def handler_program(t: HandlerToggles) -> Program:
    return parse_program(handler_source(t))


def handler_input(datagram: bytes, auth: int, mode: int, z: int, backlog: int) -> bytes:
    """Byte stream the handler reads for one datagram."""
    return struct.pack("<5i", len(datagram), auth, mode, z, min(backlog, 2**31 - 1)) + datagram


def decode_reply(value: int) -> tuple[Reply, int]:
    return Reply(value & 15), value >> 4


def run_handler(t: HandlerToggles, datagram: bytes, auth: int = Auth.CONTROLLER, mode: int = 0,
                z: int = 0, backlog: int = 0, step_budget: int = DEFAULT_HANDLER_STEPS
                ) -> ExecOutcome:
    """In-process equivalent of delivering ``datagram`` to the endpoint."""
    program = handler_program(t)
    return executor_for(program).run(handler_input(datagram, auth, mode, z, backlog), step_budget)

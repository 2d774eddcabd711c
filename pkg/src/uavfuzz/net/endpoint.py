"""Simulated UDP drone endpoint backed by the mini-IR command handler."""

from __future__ import annotations

import collections
import logging
import socket
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum

from ..vm.machine import executor_for
from ..vm.outcome import Status
from .handler import (DEFAULT_HANDLER_STEPS, Auth, HandlerToggles, Reply, decode_reply,
                      handler_input, handler_program)

log = logging.getLogger(__name__)

COMMAND_PORT = 8889
STATE_PORT = 8890
STATE_INTERVAL = 0.2
RECV_BUFFER = 1024
TAKEOFF_HEIGHT = 80  # cm
BATTERY_FULL = 100
_MAX_DATAGRAM = 65535


class BindError(OSError):
    """A command or state port could not be bound."""


@dataclass(frozen=True)
class EndpointConfig:
    command_port: int = COMMAND_PORT
    state_port: int = STATE_PORT
    interval: float = STATE_INTERVAL
    buffer_size: int = RECV_BUFFER
    unchecked_copy: bool = False
    no_auth: bool = False
    unbounded_queue: bool = False
    host: str = "127.0.0.1"
    queue_limit: int = 64
    handler_steps: int = DEFAULT_HANDLER_STEPS

    def __post_init__(self):
        if self.command_port == self.state_port and self.command_port != 0:
            raise ValueError("command and state ports must differ")
        if not self.interval > 0:
            raise ValueError("state interval must be positive")
        if self.buffer_size < 1:
            raise ValueError("buffer size must be positive")
        if self.queue_limit < 1 or self.handler_steps < 1:
            raise ValueError("queue limit and handler step budget must be positive")

    @property
    def toggles(self) -> HandlerToggles:
        return HandlerToggles(self.buffer_size, self.unchecked_copy, self.no_auth,
                              self.unbounded_queue, self.queue_limit)

    @property
    def hardened(self) -> bool:
        return not (self.unchecked_copy or self.no_auth or self.unbounded_queue)

    @property
    def command_address(self) -> tuple[str, int]:
        return self.host, self.command_port

    @property
    def state_address(self) -> tuple[str, int]:
        return self.host, self.state_port


class FlightMode(str, Enum):
    GROUNDED = "grounded"
    FLYING = "flying"


@dataclass
class DroneState:
    mode: FlightMode = FlightMode.GROUNDED
    x: int = 0
    y: int = 0
    z: int = 0
    battery: int = BATTERY_FULL
    controller: tuple[str, int] | None = None
    alive: bool = True
    history: list[str] = field(default_factory=list)  # accepted state-changing commands

    def __post_init__(self):
        if not 0 <= self.battery <= 100:
            raise ValueError("battery must be within 0..100")

    def line(self) -> str:
        return (f"mode:{self.mode.value};x:{self.x};y:{self.y};z:{self.z};"
                f"bat:{self.battery};\r\n")

    def copy(self) -> "DroneState":
        return replace(self, history=list(self.history))


def parse_state_line(text: str) -> dict[str, str]:
    out = {}
    for part in text.strip().split(";"):
        if ":" in part:
            k, v = part.split(":", 1)
            out[k] = v
    return out


class Endpoint:
    """Running endpoint: receiver, handler worker and state broadcaster threads.

    Drone state is guarded by a single lock.  When the handler faults or
    exhausts its step budget the endpoint stops answering and stops
    broadcasting, as a crashed firmware would.
    """

    def __init__(self, config: EndpointConfig | None = None):
        self.config = config or EndpointConfig()
        self.state = DroneState()
        self.lock = threading.Lock()
        self.queue: collections.deque = collections.deque()
        self.ready = threading.Condition()
        self.received = 0  # datagrams accepted into the queue since start
        self.last_outcome = None
        self.subscribers: set = set()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self.cmd_sock = self.state_sock = None
        self.program = handler_program(self.config.toggles)

    # -- lifecycle -----------------------------------------------------------------

    def start(self) -> "Endpoint":
        cfg = self.config
        try:
            self.cmd_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.cmd_sock.bind((cfg.host, cfg.command_port))
            self.state_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.state_sock.bind((cfg.host, cfg.state_port))
        except OSError as e:
            self._close()
            raise BindError(e.errno, f"cannot bind endpoint on {cfg.host}: {e.strerror}") from e
        self.cmd_sock.settimeout(0.05)
        self.state_sock.settimeout(0.0)
        self.config = replace(cfg, command_port=self.cmd_sock.getsockname()[1],
                              state_port=self.state_sock.getsockname()[1])
        for target in (self._receive, self._work, self._broadcast):
            t = threading.Thread(target=target, daemon=True, name=f"endpoint-{target.__name__}")
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._stop.set()
        with self.ready:
            self.ready.notify_all()
        for t in self._threads:
            t.join(timeout=2.0)
        self._close()

    def _close(self) -> None:
        for s in (self.cmd_sock, self.state_sock):
            if s is not None:
                s.close()

    def __enter__(self) -> "Endpoint":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def address(self) -> tuple[str, int]:
        return self.config.command_address

    @property
    def alive(self) -> bool:
        with self.lock:
            return self.state.alive

    def snapshot(self) -> DroneState:
        with self.lock:
            return self.state.copy()

    # -- threads -------------------------------------------------------------------

    def _receive(self) -> None:
        cfg = self.config
        while not self._stop.is_set():
            try:
                data, addr = self.cmd_sock.recvfrom(_MAX_DATAGRAM)
            except socket.timeout:
                continue
            except OSError:
                return
            with self.ready:
                if not cfg.unbounded_queue and len(self.queue) >= cfg.queue_limit:
                    continue  # hardened: drop when the queue is full
                self.queue.append((data, addr))
                self.received += 1
                self.ready.notify()

    def _backlog(self) -> int:
        # with unbounded_queue the command log is never trimmed
        if self.config.unbounded_queue:
            return self.received
        return len(self.queue)

    def _work(self) -> None:
        cfg = self.config
        while not self._stop.is_set():
            with self.ready:
                while not self.queue and not self._stop.is_set():
                    self.ready.wait(0.1)
                if self._stop.is_set():
                    return
                data, addr = self.queue.popleft()
                backlog = self._backlog()
            with self.lock:
                if not self.state.alive:
                    continue
                st = self.state
                if cfg.no_auth or st.controller == addr:
                    auth = Auth.CONTROLLER
                elif st.controller is None:
                    auth = Auth.UNCLAIMED
                else:
                    auth = Auth.OTHER
                mode = 1 if st.mode is FlightMode.FLYING else 0
                stream = handler_input(data, auth, mode, st.z, backlog)
                outcome = executor_for(self.program).run(stream, cfg.handler_steps)
                self.last_outcome = outcome
                if outcome.status is not Status.COMPLETED:
                    st.alive = False
                    log.warning("handler %s on %d-byte datagram from %s; endpoint down",
                                outcome.fault or outcome.status.value, len(data), addr)
                    continue
                reply = self._apply(decode_reply(outcome.return_value), addr)
            if reply is not None:
                try:
                    self.cmd_sock.sendto(reply, addr)
                except OSError:
                    pass

    def _apply(self, decoded: tuple[Reply, int], addr) -> bytes | None:
        """Apply a handler decision to the drone state (lock held)."""
        code, arg = decoded
        st = self.state
        if code is Reply.IGNORE:
            return None
        if code is Reply.ERROR:
            return b"error"
        if code is Reply.BATTERY:
            return str(st.battery).encode()
        if code is Reply.SESSION:
            if st.controller is None:
                st.controller = addr
        elif code is Reply.TAKEOFF:
            st.mode, st.z = FlightMode.FLYING, TAKEOFF_HEIGHT
        elif code is Reply.LAND:
            st.mode, st.z = FlightMode.GROUNDED, 0
        elif code is Reply.UP:
            st.z += arg
        elif code is Reply.DOWN:
            st.z -= arg
        if code not in (Reply.SESSION, Reply.OK):
            st.history.append(f"{code.name.lower()} {arg}".strip() if arg else code.name.lower())
        return b"ok"

    def _broadcast(self) -> None:
        interval = self.config.interval
        next_t = time.monotonic()
        while not self._stop.is_set():
            while True:  # drain subscription requests
                try:
                    _, addr = self.state_sock.recvfrom(_MAX_DATAGRAM)
                    self.subscribers.add(addr)
                except (BlockingIOError, socket.timeout):
                    break
                except OSError:
                    return
            with self.lock:
                line = self.state.line().encode() if self.state.alive else None
            if line is not None:
                for addr in list(self.subscribers):
                    try:
                        self.state_sock.sendto(line, addr)
                    except OSError:
                        self.subscribers.discard(addr)
            next_t += interval
            delay = next_t - time.monotonic()
            if delay < 0:
                next_t = time.monotonic()
                delay = 0
            self._stop.wait(delay)


def serve(config: EndpointConfig | None = None) -> Endpoint:
    """Bind and start an endpoint; call ``stop()`` on the result to shut it down."""
    return Endpoint(config).start()

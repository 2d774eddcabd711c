"""Simulated UDP drone endpoint and attack clients."""

from .attacks import (FLOOD_SIZE, PROBE_INTERVAL, PROBES, TAKEOVER_COMMANDS, AttackOutcome,
                      Classification, attack_dos, attack_takeover, probe_liveness)
from .endpoint import (COMMAND_PORT, STATE_INTERVAL, STATE_PORT, BindError, DroneState, Endpoint,
                       EndpointConfig, FlightMode, parse_state_line, serve)
from .handler import (DEFAULT_HANDLER_STEPS, Auth, HandlerToggles, Reply, decode_reply,
                      handler_input, handler_program, handler_source, run_handler)

__all__ = [
    "COMMAND_PORT", "DEFAULT_HANDLER_STEPS", "FLOOD_SIZE", "PROBES", "PROBE_INTERVAL",
    "STATE_INTERVAL", "STATE_PORT", "TAKEOVER_COMMANDS", "AttackOutcome", "Auth", "BindError",
    "Classification", "DroneState", "Endpoint", "EndpointConfig", "FlightMode", "HandlerToggles",
    "Reply", "attack_dos", "attack_takeover", "decode_reply", "handler_input", "handler_program",
    "handler_source", "parse_state_line", "probe_liveness", "run_handler", "serve",
]

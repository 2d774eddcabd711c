"""Concrete execution of mini-IR programs."""

from .machine import (DEFAULT_MAX_DEPTH, DEFAULT_STEP_BUDGET, Executor, MismatchError,
                      executor_for, replay, run)
from .outcome import ExecOutcome, ExecutionPath, Frame, State, Status, path_hash

__all__ = ["DEFAULT_MAX_DEPTH", "DEFAULT_STEP_BUDGET", "ExecOutcome", "ExecutionPath",
           "Executor", "Frame", "MismatchError", "State", "Status", "executor_for",
           "path_hash", "replay", "run"]

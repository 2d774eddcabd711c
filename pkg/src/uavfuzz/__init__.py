"""Hybrid fuzzing and bounded model checking for UAV control software."""

__version__ = "0.1.0"

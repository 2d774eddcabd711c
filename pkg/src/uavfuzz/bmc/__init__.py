"""Bounded model checking over bit-blasted verification conditions."""

from .blast import Blaster, CnfFormula, GateBuilder, read_dimacs
from .check import (DEFAULT_K, DEFAULT_TIMEOUT, Counterexample, UnknownReason,
                    VerificationCondition, Verdict, VerdictKind, check, default_k, encode,
                    enumerate_paths, solve_vc)
from .sat import SatResult, SatStatus, Solver, brute_force, solve
from .symex import EncodeError, ExploreStats, SymbolicPath
from .terms import Term, TermBuilder

__all__ = [
    "DEFAULT_K", "DEFAULT_TIMEOUT", "Blaster", "CnfFormula", "Counterexample", "EncodeError",
    "ExploreStats", "GateBuilder", "SatResult", "SatStatus", "Solver", "SymbolicPath", "Term",
    "TermBuilder", "UnknownReason", "VerificationCondition", "Verdict", "VerdictKind",
    "brute_force", "check", "default_k", "encode", "enumerate_paths", "read_dimacs", "solve",
    "solve_vc",
]

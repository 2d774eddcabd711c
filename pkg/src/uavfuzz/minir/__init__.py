"""Mini-IR: the small imperative language the verifier analyzes."""

from .ir import (EXIT, INT_MAX, INT_MIN, Assert, Assign, BasicBlock, Branch, Call, Const,
                 DerefLoad, DerefStore, Edge, FaultKind, Function, Goto, Input, Load,
                 Location, LoopInfo, Program, RefAddr, RefCopy, RefNull, Return,
                 SafetyProperty, Store, Var, instruction_faults)
from .lower import parse_program
from .parser import ParseError, ValidateError
from .pretty import format_program
from .threshold import ThresholdInfo, compute_completeness_threshold


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


__all__ = [
    "EXIT", "INT_MAX", "INT_MIN", "Assert", "Assign", "BasicBlock", "Branch", "Call",
    "Const", "DerefLoad", "DerefStore", "Edge", "FaultKind", "Function", "Goto", "Input",
    "Load", "Location", "LoopInfo", "ParseError", "Program", "RefAddr", "RefCopy",
    "RefNull", "Return", "SafetyProperty", "Store", "ThresholdInfo", "ValidateError",
    "Var", "compute_completeness_threshold", "format_program", "instruction_faults",
    "load_program", "parse_program",
]

from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from uavfuzz.minir import load_program

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
TARGETS = ROOT / "targets"
SCENARIOS = ROOT / "scenarios"

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SAFE = ("safe_abs", "safe_div", "safe_line", "safe_loop", "safe_ref")
BUGGY = ("assert_false", "buffer_overflow", "call_div", "checksum_pair", "div_by_zero",
         "loop_iter10", "magic_guard", "mul_overflow", "null_deref", "ref_oob",
         "signed_overflow", "signed_underflow")


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.uir"


_cache: dict = {}


def program(name: str):
    if name not in _cache:
        path = corpus_path(name) if corpus_path(name).exists() else TARGETS / f"{name}.uir"
        _cache[name] = load_program(path)
    return _cache[name]


@pytest.fixture(scope="session")
def corpus():
    return {p.stem: program(p.stem) for p in sorted(CORPUS.glob("*.uir"))}


@pytest.fixture(scope="session")
def tello():
    return program("tello_wire")

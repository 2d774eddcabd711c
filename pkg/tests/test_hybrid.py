from __future__ import annotations

import pytest
from conftest import BUGGY, SAFE, program
from oracles import exhaustive_faults

from uavfuzz.bmc import VerdictKind
from uavfuzz.fuzz import OriginKind, TestCase, campaign
from uavfuzz.hybrid import HybridConfig, coverage_report, verify
from uavfuzz.minir import FaultKind, parse_program
from uavfuzz.vm import replay, run

QUICK = dict(fuzz_budget=20_000, stuck_window=5_000, burst=2_000)

HIDDEN_EDGE = parse_program("""
fn main() {
  x = input();
  if (x == 0x12345678) {
    z = 1;
  }
}""")


def test_magic_guard_false_via_bmc():
    rep = verify(program("magic_guard"), config=HybridConfig(rng_seed=0, **QUICK))
    assert rep.verdict.kind is VerdictKind.FALSE
    assert rep.fuzz.stuck and rep.fuzz.crashes == 0
    (finding,) = rep.findings
    assert finding.stage == "bmc"
    assert finding.counterexample.inputs[:4] == (0x4D41474B).to_bytes(4, "little")
    assert replay(program("magic_guard"), finding.counterexample).fault.kind is FaultKind.ASSERT


def test_fuzz_crash_skips_bmc():
    rep = verify(program("assert_false"))
    assert rep.verdict.kind is VerdictKind.FALSE
    assert rep.findings[0].stage == "fuzz"
    assert all(v == 0 for v in rep.bmc.to_dict().values())
    assert rep.findings[0].minimized == b""


@pytest.mark.parametrize("name", ["safe_line", "safe_abs", "safe_div", "safe_ref"])
def test_safe_loop_free_true(name):
    p = program(name)
    faults, cursor = exhaustive_faults(p, 2, run)  # oracle first
    assert not faults and cursor <= 2
    rep = verify(p, config=HybridConfig(**QUICK))
    assert rep.verdict.kind is VerdictKind.TRUE and rep.verdict.complete
    assert rep.fuzz.crashes == 0 and not rep.findings


def test_synergy_models_cover_new_edges():
    rep = verify(HIDDEN_EDGE, config=HybridConfig(**QUICK))
    assert rep.verdict.kind is VerdictKind.TRUE
    assert rep.bmc.models_admitted >= 1
    models = [m for m in rep.corpus.members if m.origin.kind is OriginKind.BMC_MODEL]
    assert models and all(m.new_edges for m in models)
    assert rep.coverage == 100.0


TWO_BUGS = parse_program("""
fn main() {
  x = input_byte();
  y = input_byte();
  if (x == 7) {
    z = 10 / (y - y);
  }
  if (y == 200) {
    assert(0);
  }
}""")


def test_keep_going_collects_all():
    rep = verify(TWO_BUGS, config=HybridConfig(stop_on_crash=False, **QUICK))
    kinds = {f.property.kind for f in rep.findings}
    assert kinds == {FaultKind.ASSERT, FaultKind.DIV_BY_ZERO}
    assert len({f.property for f in rep.findings}) == len(rep.findings)
    stop = verify(TWO_BUGS, config=HybridConfig(**QUICK))
    assert len(stop.findings) == 1


@pytest.mark.parametrize("name", BUGGY)
def test_verdict_consistency_and_monotone_improvement(name):
    p = program(name)
    cfg = HybridConfig(stop_on_crash=False, rng_seed=4, **QUICK)
    rep = verify(p, config=cfg)
    assert rep.verdict.kind is VerdictKind.FALSE
    for f in rep.findings:
        assert replay(p, f.counterexample).fault == f.property
        assert run(p, f.minimized).fault == f.property
    fuzz_only = campaign(p, [TestCase.seed()], cfg.fuzz_budget, rng_seed=cfg.rng_seed,
                         stuck_window=cfg.stuck_window)
    hybrid_locs = {str(f.property) for f in rep.findings}
    fuzz_locs = {str(c.property) for c in fuzz_only.crashes}
    assert len(hybrid_locs) >= len(fuzz_locs)
    assert 0.0 <= rep.coverage <= 100.0


@pytest.mark.parametrize("name", SAFE)
def test_true_means_complete_and_crash_free(name):
    rep = verify(program(name), config=HybridConfig(**QUICK))
    assert rep.verdict.kind is VerdictKind.TRUE
    assert rep.verdict.complete and rep.fuzz.crashes == 0 and rep.exit_code == 0


def test_unknown_for_unbounded_loop():
    p = parse_program("fn main() { while (input_byte() != 0) { } }")
    rep = verify(p, config=HybridConfig(**QUICK))
    assert rep.verdict.kind is VerdictKind.UNKNOWN and rep.exit_code == 2


def test_report_dict_deterministic_drops_timing():
    rep = verify(program("safe_line"), config=HybridConfig(**QUICK))
    assert "elapsed_seconds" in rep.to_dict()
    assert "elapsed_seconds" not in rep.to_dict(deterministic=True)


def test_config_validation():
    for bad in (dict(fuzz_budget=0), dict(stuck_window=0), dict(rounds=0), dict(burst=-1),
                dict(k=0), dict(timeout=0)):
        with pytest.raises(ValueError):
            HybridConfig(**bad)


# -- coverage report ------------------------------------------------------------------------------

def test_coverage_all_edges():
    rep = verify(program("safe_abs"), config=HybridConfig(**QUICK))
    summary = coverage_report(rep)
    assert summary.percent == 100.0 and summary.missed == ()
    assert "100.0%" in summary.format()


def test_coverage_straight_line_five_edges():
    p = parse_program("fn a() { } fn b() { } fn c() { } fn d() { } "
                      "fn main() { a(); b(); c(); d(); }")
    assert len(p.edges) == 5
    rep = verify(p, config=HybridConfig(fuzz_budget=1))
    assert coverage_report(rep).percent == 100.0


def test_coverage_one_side_never_taken():
    # edges by hand: entry->then, entry->join, then->join, join->exit; a byte is always < 300
    p = parse_program("fn main() { x = input_byte(); if (x < 300) { y = 1; } }")
    assert len(p.edges) == 4
    rep = verify(p, config=HybridConfig(**QUICK))
    summary = coverage_report(rep)
    assert summary.covered == 3 and summary.percent == 75.0
    (missed,) = summary.missed
    else_edge = next(e for e in p.edges if e.src == 0 and e.id not in rep.corpus.edges)
    assert missed == str(else_edge)
    assert missed in summary.format()
    assert summary.to_dict()["missed_edges"] == [missed]

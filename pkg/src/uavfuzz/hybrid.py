"""Fuzz-then-verify coordinator.

The fuzzer explores first; when it crashes, stalls or runs out of budget the
bounded model checker takes over on the paths the fuzzer never took, and
solver models flow back into the corpus as new test cases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bmc.check import (DEFAULT_TIMEOUT, Counterexample, UnknownReason, Verdict, VerdictKind,
                        check, default_k)
from .bmc.symex import ExploreStats
from .fuzz.campaign import (DEFAULT_STUCK_WINDOW, Campaign, CampaignConfig, Corpus, CrashRecord,
                            Mode, StuckReport)
from .fuzz.minimize import minimize
from .fuzz.protocol import ProtocolSpec
from .fuzz.testcase import Origin, OriginKind, TestCase
from .minir.ir import Program, SafetyProperty
from .vm.machine import DEFAULT_STEP_BUDGET, replay
from .vm.reference import execute as reference_execute

DEFAULT_FUZZ_BUDGET = 100_000
DEFAULT_ROUNDS = 3
DEFAULT_BURST = 10_000


@dataclass
class HybridConfig:
    fuzz_budget: int = DEFAULT_FUZZ_BUDGET
    stuck_window: int = DEFAULT_STUCK_WINDOW
    k: int | None = None  # None: completeness threshold when known, else 10
    timeout: float | None = DEFAULT_TIMEOUT  # per solver query
    stop_on_crash: bool = True
    rng_seed: int = 0
    mode: Mode = Mode.MUTATIONAL
    spec: ProtocolSpec | None = None
    rounds: int = DEFAULT_ROUNDS
    burst: int = DEFAULT_BURST  # fuzz executions after each model injection
    bmc_time_limit: float | None = None  # wall clock for all BMC work
    step_budget: int = DEFAULT_STEP_BUDGET
    minimize: bool = True
    backend: str | None = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.mode is Mode.HYBRID_STAGE:
            self.mode = Mode.MUTATIONAL
        for name in ("fuzz_budget", "stuck_window", "rounds", "burst", "step_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be positive")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class Finding:
    """A replay-confirmed violation with its minimized input."""

    stage: str  # "fuzz" or "bmc"
    counterexample: Counterexample
    minimized: bytes

    @property
    def property(self) -> SafetyProperty:
        return self.counterexample.property

    def to_dict(self) -> dict:
        return {"stage": self.stage, **self.counterexample.to_dict(),
                "minimized_input": self.minimized.hex()}


@dataclass
class FuzzStageStats:
    executions: int = 0
    paths: int = 0
    edges: int = 0
    crashes: int = 0
    stuck: bool = False
    stopped_on: str = ""
    frontier: StuckReport | None = None

    def to_dict(self) -> dict:
        return {"executions": self.executions, "paths": self.paths, "edges": self.edges,
                "crashes": self.crashes, "stuck": self.stuck, "stopped_on": self.stopped_on,
                "frontier": None if self.frontier is None else self.frontier.to_dict()["frontier"]}


@dataclass
class BmcStageStats:
    rounds: int = 0
    checks: int = 0
    paths: int = 0
    obligations: int = 0
    sat: int = 0
    unsat: int = 0
    timeouts: int = 0
    excluded_paths: int = 0
    models_injected: int = 0
    models_admitted: int = 0
    burst_executions: int = 0

    def add(self, s: ExploreStats) -> None:
        self.checks += 1
        self.paths += s.paths
        self.obligations += s.obligations
        self.sat += s.sat
        self.unsat += s.unsat
        self.timeouts += s.timeouts
        self.excluded_paths += s.excluded_paths

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class HybridReport:
    verdict: Verdict
    fuzz: FuzzStageStats
    bmc: BmcStageStats
    covered_edges: int
    total_edges: int
    missed_edges: tuple[str, ...]
    paths_explored: int  # |Pi| at the end, fuzz and model executions together
    findings: list[Finding] = field(default_factory=list)
    elapsed: float = field(default=0.0, compare=False)
    corpus: Corpus | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.verdict.kind is VerdictKind.FALSE and not self.findings:
            raise ValueError("a False report needs at least one counterexample")

    @property
    def coverage(self) -> float:
        if self.total_edges == 0:
            return 100.0
        return 100.0 * self.covered_edges / self.total_edges

    @property
    def exit_code(self) -> int:
        return {VerdictKind.TRUE: 0, VerdictKind.FALSE: 1, VerdictKind.UNKNOWN: 2}[self.verdict.kind]

    def to_dict(self, deterministic: bool = False) -> dict:
        out = {"verdict": str(self.verdict), **self.verdict.to_dict(),
               "coverage": {"percent": round(self.coverage, 4), "covered": self.covered_edges,
                            "total": self.total_edges, "missed": list(self.missed_edges)},
               "paths_explored": self.paths_explored,
               "fuzz": self.fuzz.to_dict(), "bmc": self.bmc.to_dict(),
               "findings": [f.to_dict() for f in self.findings]}
        out.pop("stats", None)
        if not deterministic:
            out["elapsed_seconds"] = round(self.elapsed, 3)
        return out


def _counterexample(program: Program, data: bytes, prop: SafetyProperty) -> Counterexample:
    res = reference_execute(program, data, trace=True)
    depth = max([1, *res.loop_iterations.values()])
    cex = Counterexample(data, tuple(res.trace), prop, depth, res.outcome.path.decisions)
    replay(program, cex)  # raises MismatchError if the claim does not hold
    return cex


class _Coordinator:
    def __init__(self, program: Program, seeds, config: HybridConfig):
        self.program = program
        self.config = config
        cfg = CampaignConfig(mode=config.mode, spec=config.spec, rng_seed=config.rng_seed,
                             stuck_window=config.stuck_window, stop_on_crash=config.stop_on_crash,
                             step_budget=config.step_budget, backend=config.backend)
        self.campaign = Campaign(program, cfg)
        self.seeds = list(seeds or [TestCase.seed()])
        self.k = config.k if config.k is not None else default_k(program)
        self.findings: list[Finding] = []
        self.found: set[SafetyProperty] = set()
        self.fuzz = FuzzStageStats()
        self.bmc = BmcStageStats()
        self.deadline = (None if config.bmc_time_limit is None
                         else time.monotonic() + config.bmc_time_limit)

    # -- bookkeeping -------------------------------------------------------------

    def _record_crash(self, crash: CrashRecord, stage: str) -> None:
        prop = crash.property
        if prop in self.found:
            return
        data = crash.testcase.data
        small = data
        if self.config.minimize:
            small = minimize(self.program, crash.testcase, self.config.step_budget).data
        self.found.add(prop)
        self.findings.append(Finding(stage, _counterexample(self.program, data, prop), small))

    def _done(self) -> bool:
        return bool(self.findings) and self.config.stop_on_crash

    def _remaining(self) -> list[SafetyProperty]:
        return [p for p in self.program.properties if p not in self.found]

    def _check(self, exclude, frontier_edges=None) -> Verdict:
        total = None
        if self.deadline is not None:
            total = max(0.0, self.deadline - time.monotonic())
        v = check(self.program, self.k, exclude=exclude, timeout=self.config.timeout,
                  properties=self._remaining(), frontier_edges=frontier_edges,
                  total_timeout=total)
        self.bmc.add(v.stats)
        return v

    def _take_cex(self, v: Verdict) -> None:
        """Feed a BMC counterexample back through the fuzzer's executor."""
        tc = TestCase(v.counterexample.inputs, Origin(OriginKind.BMC_MODEL, None, None,
                                                      (str(v.counterexample.property),)))
        self.bmc.models_injected += 1
        admitted, crash = self.campaign.inject(tc)
        self.bmc.models_admitted += admitted
        if crash is None:  # already seen by the fuzzer under a different input
            crash = CrashRecord(tc, self.campaign.executor.run(tc.data, self.config.step_budget),
                                self.campaign.corpus.executions)
        self._record_crash(crash, "bmc")

    # -- stages ------------------------------------------------------------------

    def fuzz_stage(self) -> None:
        c = self.campaign
        c.seed(self.seeds)
        res = c.run(self.config.fuzz_budget)
        corpus = res.corpus
        self.fuzz = FuzzStageStats(corpus.executions, len(corpus.paths), len(corpus.edges),
                                   len(corpus.crashes), res.stuck.stuck, res.stopped_on, res.stuck)
        for crash in corpus.crashes:
            self._record_crash(crash, "fuzz")
            if self._done():
                break

    def synergy_stage(self) -> Verdict | None:
        """Up to ``rounds`` of BMC on unexplored paths followed by fuzz bursts."""
        c = self.campaign
        last = None
        for _ in range(self.config.rounds):
            if self._done():
                return None
            corpus = c.corpus
            uncovered = set(range(len(self.program.edges))) - corpus.edges
            self.bmc.rounds += 1
            v = self._check(corpus.decision_lists(), uncovered)
            last = v
            if v.kind is VerdictKind.FALSE:
                self._take_cex(v)
                continue
            fresh = 0
            for edge, data in v.frontier_models:
                tc = TestCase(data, Origin(OriginKind.BMC_MODEL, None, None, (f"edge{edge}",)))
                self.bmc.models_injected += 1
                admitted, crash = c.inject(tc)
                fresh += admitted
                self.bmc.models_admitted += admitted
                if crash is not None:
                    self._record_crash(crash, "bmc")
            if not fresh or self._done():
                break
            before = corpus.executions
            c.since_new_edge = 0
            res = c.run(self.config.burst)
            self.bmc.burst_executions += corpus.executions - before
            for crash in res.corpus.crashes:
                self._record_crash(crash, "fuzz")
        return last

    def confirm_stage(self) -> Verdict:
        """Whole-program check without exclusions, so True can be complete."""
        while True:
            v = self._check(())
            if v.kind is not VerdictKind.FALSE:
                return v
            self._take_cex(v)
            if self._done() or not self._remaining():
                return v

    def run(self) -> HybridReport:
        start = time.monotonic()
        self.fuzz_stage()
        final = None
        if not self._done():
            self.synergy_stage()
            if not self._done():
                final = self.confirm_stage()
        verdict = self._verdict(final)
        corpus = self.campaign.corpus
        covered = corpus.edges
        missed = tuple(str(e) for e in self.program.edges if e.id not in covered)
        return HybridReport(verdict, self.fuzz, self.bmc, len(covered), len(self.program.edges),
                            missed, len(corpus.paths), list(self.findings),
                            time.monotonic() - start, corpus)

    def _verdict(self, final: Verdict | None) -> Verdict:
        stats = ExploreStats(paths=self.bmc.paths, obligations=self.bmc.obligations,
                             sat=self.bmc.sat, unsat=self.bmc.unsat, timeouts=self.bmc.timeouts,
                             excluded_paths=self.bmc.excluded_paths)
        threshold = None if final is None else final.threshold
        if self.findings:
            return Verdict(VerdictKind.FALSE, self.k, counterexample=self.findings[0].counterexample,
                           stats=stats, threshold=threshold)
        if final.kind is VerdictKind.TRUE and final.complete:
            return Verdict(VerdictKind.TRUE, self.k, complete=True, stats=stats,
                           threshold=threshold)
        reason = final.reason or UnknownReason.UNBOUNDED
        return Verdict(VerdictKind.UNKNOWN, self.k, reason=reason, stats=stats,
                       threshold=threshold)


def verify(program: Program, seeds=(), config: HybridConfig | None = None) -> HybridReport:
    """Fuzz, hand the unexplored remainder to BMC, and combine the results.

    False means a replay-confirmed violation.  True requires a complete BMC
    proof with no crash.  Anything else is Unknown.
    """
    return _Coordinator(program, seeds, config or HybridConfig()).run()


@dataclass(frozen=True)
class CoverageSummary:
    covered: int
    total: int
    percent: float
    paths_by_stage: dict
    missed: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"covered": self.covered, "total": self.total, "percent": round(self.percent, 4),
                "paths_by_stage": dict(self.paths_by_stage), "missed_edges": list(self.missed)}

    def format(self) -> str:
        lines = [f"edge coverage: {self.covered}/{self.total} ({self.percent:.1f}%)"]
        for stage, n in self.paths_by_stage.items():
            lines.append(f"paths ({stage}): {n}")
        if self.missed:
            lines.append("missed edges:")
            lines.extend(f"  {e}" for e in self.missed)
        else:
            lines.append("missed edges: none")
        return "\n".join(lines) + "\n"


def coverage_report(report: HybridReport) -> CoverageSummary:
    stages = {"fuzz": report.fuzz.paths, "bmc": report.bmc.paths,
              "total explored": report.paths_explored}
    return CoverageSummary(report.covered_edges, report.total_edges, report.coverage, stages,
                           report.missed_edges)

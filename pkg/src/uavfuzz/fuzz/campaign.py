"""Coverage-guided campaign loop, corpus bookkeeping and stuck detection."""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ..minir.ir import Program, SafetyProperty
from ..vm.machine import DEFAULT_STEP_BUDGET, Executor
from ..vm.outcome import ExecOutcome
from .mutate import mutate
from .protocol import DEFAULT_ANOMALY_RATE, ProtocolSpec, generate
from .testcase import DEFAULT_MAX_LEN, TestCase

DEFAULT_STUCK_WINDOW = 50_000
COMPLEX_GUARD_BITS = 16


class Mode(str, Enum):
    MUTATIONAL = "mutational"
    GENERATIONAL = "generational"
    HYBRID_STAGE = "hybrid-stage"


class PathCollision(RuntimeError):
    """Two different decision lists hashed to the same path id."""


@dataclass(frozen=True)
class CrashRecord:
    testcase: TestCase
    outcome: ExecOutcome
    tick: int
    minimized: TestCase | None = None

    @property
    def key(self) -> tuple[str, str]:
        return self.outcome.fault.kind.value, str(self.outcome.fault.location)

    @property
    def property(self) -> SafetyProperty:
        return self.outcome.fault

    def to_dict(self) -> dict:
        return {"fault_kind": self.outcome.fault.kind.value,
                "location": str(self.outcome.fault.location),
                "input": self.testcase.data.hex(),
                "path_id": f"{self.outcome.path.path_id:016x}",
                "minimized_input": None if self.minimized is None else self.minimized.data.hex(),
                "tick": self.tick}


@dataclass
class Corpus:
    """Admitted test cases, global edge coverage, explored paths and crashes."""

    n_edges: int
    members: list[TestCase] = field(default_factory=list)
    coverage: np.ndarray = None  # uint8 per edge
    paths: dict[int, bytes] = field(default_factory=dict)  # path id -> packed decision codes
    crashes: list[CrashRecord] = field(default_factory=list)
    crash_keys: set = field(default_factory=set)
    executions: int = 0

    def __post_init__(self):
        if self.coverage is None:
            self.coverage = np.zeros(max(self.n_edges, 1), dtype=np.uint8)

    @property
    def edges(self) -> frozenset[int]:
        return frozenset(int(e) for e in np.flatnonzero(self.coverage[:self.n_edges]))

    def decision_lists(self) -> set[tuple[int, ...]]:
        """Explored paths as tuples of ``site * 2 + taken`` codes."""
        return {tuple(int(c) for c in np.frombuffer(raw, dtype="<i8")) for raw in self.paths.values()}

    def add_path(self, codes: np.ndarray) -> bool:
        raw = np.ascontiguousarray(codes, dtype="<i8").tobytes()
        pid = int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")
        seen = self.paths.get(pid)
        if seen is None:
            self.paths[pid] = raw
            return True
        if seen != raw:
            raise PathCollision(f"path id {pid:016x} maps to two decision lists")
        return False

    def merge(self, other: "Corpus") -> None:
        """Union in ``other``; commutative and idempotent on edges and paths."""
        np.maximum(self.coverage, other.coverage, out=self.coverage)
        for pid, raw in other.paths.items():
            if self.paths.setdefault(pid, raw) != raw:
                raise PathCollision(f"path id {pid:016x} maps to two decision lists")
        have = {tc.data for tc in self.members}
        self.members.extend(tc for tc in other.members if tc.data not in have)
        for c in other.crashes:
            if c.key not in self.crash_keys:
                self.crash_keys.add(c.key)
                self.crashes.append(c)
        self.executions += other.executions

    def summary(self) -> dict:
        return {"members": len(self.members), "edges": int(self.coverage[:self.n_edges].sum()),
                "total_edges": self.n_edges, "paths": len(self.paths),
                "crashes": len(self.crashes), "executions": self.executions}


@dataclass(frozen=True)
class FrontierBranch:
    site: int
    func: str
    block: int
    missing: int  # direction never taken: 1 then-side, 0 else-side
    guard_bits: int | None  # significant bits of the compared constant, if any

    @property
    def complex(self) -> bool:
        return self.guard_bits is not None and self.guard_bits >= COMPLEX_GUARD_BITS


@dataclass(frozen=True)
class StuckReport:
    since_new_edge: int
    window: int
    frontier: tuple[FrontierBranch, ...]

    @property
    def stuck(self) -> bool:
        return self.since_new_edge >= self.window

    @property
    def complex_guards(self) -> tuple[FrontierBranch, ...]:
        return tuple(f for f in self.frontier if f.complex)

    def to_dict(self) -> dict:
        return {"stuck": self.stuck, "since_new_edge": self.since_new_edge, "window": self.window,
                "frontier": [{"site": f.site, "location": f"{f.func}:B{f.block}",
                              "missing": "then" if f.missing else "else",
                              "guard_bits": f.guard_bits, "complex": f.complex}
                             for f in self.frontier]}


def significant_bits(value: int) -> int:
    """Bits needed for ``value`` in two's complement, excluding the sign bit."""
    return (value if value >= 0 else ~value).bit_length()


def frontier(program: Program, coverage: np.ndarray) -> tuple[FrontierBranch, ...]:
    """Branch sites reached with exactly one direction taken."""
    out = []
    for site in sorted(program.branch_sites):
        func, b, br = program.branch_sites[site]
        then_hit = coverage[program.edge_ids[(func, b, br.then)]]
        else_hit = coverage[program.edge_ids[(func, b, br.else_)]]
        if bool(then_hit) != bool(else_hit):
            bits = None if br.guard_const is None else significant_bits(br.guard_const)
            out.append(FrontierBranch(site, func, b, 1 if else_hit else 0, bits))
    return tuple(out)


@dataclass
class CampaignConfig:
    mode: Mode = Mode.MUTATIONAL
    spec: ProtocolSpec | None = None
    rng_seed: int = 0
    stuck_window: int = DEFAULT_STUCK_WINDOW
    stop_on_crash: bool = False
    stop_on_stuck: bool = True
    step_budget: int = DEFAULT_STEP_BUDGET
    max_len: int = DEFAULT_MAX_LEN
    anomaly_rate: float = DEFAULT_ANOMALY_RATE
    backend: str | None = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.mode is Mode.GENERATIONAL and self.spec is None:
            raise ValueError("generational mode needs a ProtocolSpec")
        if self.stuck_window < 1 or self.step_budget < 1:
            raise ValueError("stuck_window and step_budget must be positive")


@dataclass
class CampaignResult:
    corpus: Corpus
    stuck: StuckReport
    stopped_on: str  # "budget", "crash" or "stuck"

    @property
    def crashes(self) -> list[CrashRecord]:
        return self.corpus.crashes


class Campaign:
    """Stateful campaign so the hybrid coordinator can resume it between BMC rounds."""

    def __init__(self, program: Program, config: CampaignConfig | None = None,
                 corpus: Corpus | None = None):
        self.program = program
        self.config = config or CampaignConfig()
        self.executor = Executor(program, backend=self.config.backend)
        self.corpus = corpus or Corpus(len(program.edges))
        self.rng = random.Random(self.config.rng_seed)
        self.since_new_edge = 0

    def execute(self, tc: TestCase, admit: bool) -> tuple[bool, CrashRecord | None]:
        """Run one test case; returns (admitted, new crash record or None)."""
        corpus = self.corpus
        ex = self.executor
        status, fcode, pc, steps, ndec, _, _, _ = ex.run_raw(tc.data, self.config.step_budget)
        corpus.executions += 1
        tick = corpus.executions
        n = ex.bc.n_edges
        hits = np.asarray(ex.edge_hits, dtype=np.uint8)[:n]
        fresh = np.flatnonzero(hits > corpus.coverage[:n])
        corpus.add_path(np.asarray(ex.decisions[:ndec], dtype=np.int64))
        admitted = False
        if fresh.size:
            corpus.coverage[fresh] = 1
            self.since_new_edge = 0
            if admit:
                corpus.members.append(TestCase(tc.data, tc.origin, tick,
                                               tuple(int(e) for e in fresh)))
                admitted = True
        else:
            self.since_new_edge += 1
        crash = None
        if status == 1:  # fault
            outcome = ex.run(tc.data, self.config.step_budget)
            record = CrashRecord(tc, outcome, tick)
            if record.key not in corpus.crash_keys:
                corpus.crash_keys.add(record.key)
                corpus.crashes.append(record)
                crash = record
        return admitted, crash

    def seed(self, seeds: Sequence[TestCase]) -> None:
        for tc in seeds or [TestCase.seed()]:
            self._seed_one(tc)

    def _seed_one(self, tc: TestCase) -> None:
        # seeds join the corpus regardless of coverage
        before = len(self.corpus.members)
        admitted, _ = self.execute(tc, admit=True)
        if not admitted and tc.data not in {m.data for m in self.corpus.members[:before]}:
            self.corpus.members.append(TestCase(tc.data, tc.origin, self.corpus.executions))

    def inject(self, tc: TestCase) -> tuple[bool, CrashRecord | None]:
        """Execute an externally produced test case (e.g. a solver model)."""
        return self.execute(tc, admit=True)

    def _next_input(self) -> TestCase:
        cfg = self.config
        child_seed = self.rng.getrandbits(64)
        if cfg.mode is Mode.GENERATIONAL:
            return generate(cfg.spec, child_seed, cfg.anomaly_rate)
        members = self.corpus.members
        parent = members[self.rng.randrange(len(members))]
        return mutate(parent, child_seed, members, cfg.max_len)

    def run(self, budget: int) -> CampaignResult:
        cfg = self.config
        if budget < 0:
            raise ValueError("budget must be non-negative")
        stopped = "budget"
        if cfg.stop_on_crash and self.corpus.crashes:
            return CampaignResult(self.corpus, self.report(), "crash")
        for _ in range(budget):
            _, crash = self.execute(self._next_input(), admit=True)
            if crash is not None and cfg.stop_on_crash:
                stopped = "crash"
                break
            if cfg.stop_on_stuck and self.since_new_edge >= cfg.stuck_window:
                stopped = "stuck"
                break
        return CampaignResult(self.corpus, self.report(), stopped)

    def report(self) -> StuckReport:
        return StuckReport(self.since_new_edge, self.config.stuck_window,
                           frontier(self.program, self.corpus.coverage))


def campaign(program: Program, seeds: Sequence[TestCase], budget: int,
             mode: Mode | str = Mode.MUTATIONAL, spec: ProtocolSpec | None = None,
             jobs: int = 1, **options) -> CampaignResult:
    """Run a campaign of at most ``budget`` executions (not counting seeds).

    With ``jobs > 1`` the budget is split over independent workers whose
    corpora are merged afterwards; results are then reproducible per job
    count but not identical to the single-worker run.
    """
    config = CampaignConfig(mode=mode, spec=spec, **options)
    if jobs <= 1:
        c = Campaign(program, config)
        c.seed(seeds)
        return c.run(budget)

    def worker(j: int) -> CampaignResult:
        cfg = CampaignConfig(**{**config.__dict__,
                                "rng_seed": (config.rng_seed * 1_000_003 + j) & (2**64 - 1)})
        c = Campaign(program, cfg)
        c.seed(seeds)
        return c.run(budget // jobs + (1 if j < budget % jobs else 0))

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(worker, range(jobs)))
    merged = Corpus(len(program.edges))
    for r in results:
        merged.merge(r.corpus)
    stuck = StuckReport(min(r.stuck.since_new_edge for r in results), config.stuck_window,
                        frontier(program, merged.coverage))
    order = ("crash", "stuck", "budget")
    stopped = min((r.stopped_on for r in results), key=order.index)
    return CampaignResult(merged, stuck, stopped)

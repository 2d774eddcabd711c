"""Mutational versus generational comparison in the fuzzing-approaches table layout."""

from __future__ import annotations

from dataclasses import dataclass

from ..minir.ir import Program
from .campaign import CampaignResult, Mode, campaign
from .protocol import ProtocolSpec
from .testcase import TestCase


@dataclass(frozen=True)
class ComparisonRow:
    approach: str
    target: str
    budget: int
    faults: int
    locations: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"approach": self.approach, "target": self.target, "budget": self.budget,
                "faults": self.faults, "fault_locations": list(self.locations)}


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    def row(self, approach: str) -> ComparisonRow:
        return next(r for r in self.rows if r.approach.lower().startswith(approach.lower()))

    def to_dict(self) -> dict:
        return {"table": "Fuzzing Approaches Comparison", "budget_unit": "executions",
                "rows": [r.to_dict() for r in self.rows]}

    def format_table(self) -> str:
        head = ("Approach", "Target", "Budget (execs)", "Faults")
        body = [(r.approach, r.target, str(r.budget), str(r.faults)) for r in self.rows]
        widths = [max(len(x[i]) for x in (head, *body)) for i in range(4)]
        line = lambda cells: "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([line(head), sep, *(line(b) for b in body)])


def _distinct(result: CampaignResult) -> tuple[str, ...]:
    return tuple(sorted(f"{k}@{loc}" for k, loc in result.corpus.crash_keys))


def compare_modes(program: Program, spec: ProtocolSpec, budget: int, rng_seed: int = 0,
                  target: str = "target", seed_message: bytes | None = None) -> ComparisonReport:
    """One mutational and one generational campaign with equal execution budgets."""
    if seed_message is None:
        seed_message = spec.render(spec.rules[0], [f.lo for f in spec.rules[0].fields]).encode()
    rows = []
    if budget <= 0:
        return ComparisonReport((ComparisonRow("Mutational Fuzzer", target, 0, 0, ()),
                                 ComparisonRow("Generational Fuzzer", target, 0, 0, ())))
    mut = campaign(program, [TestCase.seed(seed_message)], budget, Mode.MUTATIONAL,
                   rng_seed=rng_seed, stop_on_stuck=False)
    gen = campaign(program, [TestCase.seed(seed_message)], budget, Mode.GENERATIONAL, spec,
                   rng_seed=rng_seed, stop_on_stuck=False)
    for name, res in (("Mutational Fuzzer", mut), ("Generational Fuzzer", gen)):
        locs = _distinct(res)
        rows.append(ComparisonRow(name, target, budget, len(locs), locs))
    return ComparisonReport(tuple(rows))

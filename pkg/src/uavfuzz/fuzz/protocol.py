"""Message grammars for generational fuzzing."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .testcase import Origin, OriginKind, TestCase

DEFAULT_ANOMALY_RATE = 0.5
MAX_OVERSIZE_DIGITS = 12


class Anomaly(str, Enum):
    OVERSIZE_FIELD = "oversize_field"
    OUT_OF_RANGE = "out_of_range"
    TOKEN_CORRUPTION = "token_corruption"


@dataclass(frozen=True)
class IntField:
    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class Rule:
    token: str
    fields: tuple[IntField, ...] = ()


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    rules: tuple[Rule, ...]
    separator: str = " "
    anomalies: tuple[Anomaly, ...] = tuple(Anomaly)

    def __post_init__(self):
        if not self.rules:
            raise ValueError("protocol grammar must have at least one rule")
        for r in self.rules:
            if not r.token or self.separator in r.token:
                raise ValueError(f"bad token {r.token!r}")
            for f in r.fields:
                if f.lo > f.hi:
                    raise ValueError(f"empty range for field {f.name} of {r.token}")

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolSpec":
        rules = tuple(Rule(r["token"], tuple(IntField(f.get("name", f"arg{i}"), int(f["min"]),
                                                      int(f["max"]))
                                             for i, f in enumerate(r.get("fields", ()))))
                      for r in d["rules"])
        anomalies = tuple(Anomaly(a) for a in d.get("anomalies", [a.value for a in Anomaly]))
        return cls(d.get("name", "protocol"), rules, d.get("separator", " "), anomalies)

    def to_dict(self) -> dict:
        return {"name": self.name, "separator": self.separator,
                "rules": [{"token": r.token, **({"fields": [
                    {"name": f.name, "min": f.lo, "max": f.hi} for f in r.fields]}
                    if r.fields else {})} for r in self.rules],
                "anomalies": [a.value for a in self.anomalies]}

    def render(self, rule: Rule, values) -> str:
        return self.separator.join([rule.token, *(str(v) for v in values)])

    def parse(self, message: bytes | str):
        """(rule, values) when ``message`` is in the grammar's language, else None."""
        if isinstance(message, bytes):
            try:
                message = message.decode("ascii")
            except UnicodeDecodeError:
                return None
        parts = message.split(self.separator)
        for rule in self.rules:
            if parts[0] != rule.token or len(parts) != 1 + len(rule.fields):
                continue
            values = []
            for text, f in zip(parts[1:], rule.fields):
                if not text.isdigit() and not (text[:1] == "-" and text[1:].isdigit()):
                    return None
                if text != str(int(text)):  # canonical decimal only
                    return None
                v = int(text)
                if not f.lo <= v <= f.hi:
                    return None
                values.append(v)
            return rule, tuple(values)
        return None

    def accepts(self, message: bytes | str) -> bool:
        return self.parse(message) is not None


def load_spec(path: str | Path) -> ProtocolSpec:
    with open(path, encoding="utf-8") as fh:
        return ProtocolSpec.from_dict(json.load(fh))


def tello_spec() -> ProtocolSpec:
    text = resources.files("uavfuzz.data").joinpath("tello.json").read_text(encoding="utf-8")
    return ProtocolSpec.from_dict(json.loads(text))


def _anomalous(spec: ProtocolSpec, rng: random.Random, kind: Anomaly) -> tuple[str, list[str]]:
    with_fields = [r for r in spec.rules if r.fields]
    if kind is not Anomaly.TOKEN_CORRUPTION and with_fields:
        rule = with_fields[rng.randrange(len(with_fields))]
        values: list[int | str] = [rng.randint(f.lo, f.hi) for f in rule.fields]
        k = rng.randrange(len(rule.fields))
        f = rule.fields[k]
        if kind is Anomaly.OVERSIZE_FIELD:
            digits = rng.randint(len(str(abs(f.hi))) + 1, MAX_OVERSIZE_DIGITS)
            values[k] = rng.randint(max(10 ** (digits - 1), f.hi + 1), 10 ** digits - 1)
        else:
            span = max(1, (f.hi - f.lo) // 10)
            values[k] = f.hi + rng.randint(1, span) if rng.random() < 0.5 else f.lo - rng.randint(1, span)
        trace = [f"rule:{rule.token}", f"anomaly:{kind.value}", f"field:{f.name}"]
        return spec.render(rule, values), trace
    # token corruption (also the fallback for grammars without integer fields)
    rule = spec.rules[rng.randrange(len(spec.rules))]
    values = [rng.randint(f.lo, f.hi) for f in rule.fields]
    tok = list(rule.token)
    at = rng.randrange(len(tok))
    valid_tokens = {r.token for r in spec.rules}
    while True:
        tok[at] = chr(rng.randrange(33, 127))
        if "".join(tok) not in valid_tokens and spec.separator not in tok[at]:
            break
    trace = [f"rule:{rule.token}", f"anomaly:{Anomaly.TOKEN_CORRUPTION.value}"]
    return spec.render(Rule("".join(tok), rule.fields), values), trace


def generate(spec: ProtocolSpec, rng_seed: int, anomaly_rate: float = DEFAULT_ANOMALY_RATE,
             anomaly: Anomaly | None = None) -> TestCase:
    """One message: grammar-valid with probability 1 - anomaly_rate, else one anomaly applied."""
    if not 0.0 <= anomaly_rate <= 1.0:
        raise ValueError("anomaly_rate must lie in [0, 1]")
    rng = random.Random(rng_seed)
    if rng.random() < anomaly_rate and spec.anomalies:
        kind = anomaly or spec.anomalies[rng.randrange(len(spec.anomalies))]
        text, trace = _anomalous(spec, rng, kind)
    else:
        rule = spec.rules[rng.randrange(len(spec.rules))]
        values = [rng.randint(f.lo, f.hi) for f in rule.fields]
        text = spec.render(rule, values)
        trace = [f"rule:{rule.token}", *(f"{f.name}={v}" for f, v in zip(rule.fields, values))]
    return TestCase(text.encode("ascii"), Origin(OriginKind.GENERATED, trace=tuple(trace)))

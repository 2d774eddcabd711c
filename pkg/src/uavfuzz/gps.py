"""GPS spoofing capture model.

A spoofer near the target transmits a counterfeit signal.  Its received
power follows free-space path loss; the receiver locks onto it (is
"captured") when it beats the aggregate authentic signal by a margin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GPS_L1_MHZ = 1575.42
DEFAULT_AUTHENTIC_DBM = -130.0
DEFAULT_MARGIN_DB = 3.0
FSPL_CONSTANT_DB = 32.44  # distance in km, frequency in MHz


class DomainError(ValueError):
    """A distance or frequency outside the model's domain."""


def fspl_db(distance_m: float, freq_mhz: float) -> float:
    if not distance_m > 0:
        raise DomainError(f"distance must be positive, got {distance_m} m")
    if not freq_mhz > 0:
        raise DomainError(f"frequency must be positive, got {freq_mhz} MHz")
    return 20.0 * math.log10(distance_m / 1000.0) + 20.0 * math.log10(freq_mhz) + FSPL_CONSTANT_DB


def received_power(tx_power_dbm: float, distance_m: float, freq_mhz: float = GPS_L1_MHZ) -> float:
    """Power in dBm at ``distance_m`` from a ``tx_power_dbm`` isotropic transmitter."""
    return tx_power_dbm - fspl_db(distance_m, freq_mhz)


def received_power_array(tx_power_dbm, distance_m, freq_mhz=GPS_L1_MHZ) -> np.ndarray:
    """Vectorized ``received_power``; all distances must be positive."""
    d = np.asarray(distance_m, dtype=float)
    f = np.asarray(freq_mhz, dtype=float)
    if np.any(~(d > 0)) or np.any(~(f > 0)):
        raise DomainError("distances and frequencies must be positive")
    return (np.asarray(tx_power_dbm, dtype=float) - 20.0 * np.log10(d / 1000.0)
            - 20.0 * np.log10(f) - FSPL_CONSTANT_DB)


Vec3 = tuple[float, float, float]


def _vec3(v) -> Vec3:
    t = tuple(float(x) for x in v)
    if len(t) != 3:
        raise ValueError(f"expected a 3-vector, got {v!r}")
    return t


@dataclass(frozen=True)
class SpoofScenario:
    tx_position: Vec3  # spoofer antenna, meters
    target_position: Vec3  # receiver on the UAV, meters; also its true position
    tx_power_dbm: float
    spoofed_position: Vec3  # position the spoofer wants the receiver to report
    satellite_distances: tuple[float, ...] = ()  # authentic ranges, meters (informational)
    authentic_power_dbm: float = DEFAULT_AUTHENTIC_DBM
    freq_mhz: float = GPS_L1_MHZ
    margin_db: float = DEFAULT_MARGIN_DB
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tx_position", _vec3(self.tx_position))
        object.__setattr__(self, "target_position", _vec3(self.target_position))
        object.__setattr__(self, "spoofed_position", _vec3(self.spoofed_position))
        object.__setattr__(self, "satellite_distances",
                           tuple(float(r) for r in self.satellite_distances))
        if not self.freq_mhz > 0:
            raise DomainError(f"frequency must be positive, got {self.freq_mhz} MHz")
        if any(not r > 0 for r in self.satellite_distances):
            raise DomainError("satellite distances must be positive")

    @property
    def spoofer_distance(self) -> float:
        """Distance from spoofer to target in meters."""
        return math.dist(self.tx_position, self.target_position)

    def to_dict(self) -> dict:
        return {"name": self.name, "tx_position": list(self.tx_position),
                "target_position": list(self.target_position),
                "spoofed_position": list(self.spoofed_position),
                "satellite_distances": list(self.satellite_distances),
                "tx_power_dbm": self.tx_power_dbm,
                "authentic_power_dbm": self.authentic_power_dbm,
                "freq_mhz": self.freq_mhz, "margin_db": self.margin_db}

    @classmethod
    def from_dict(cls, d: dict) -> "SpoofScenario":
        known = {"name", "tx_position", "target_position", "spoofed_position",
                 "satellite_distances", "tx_power_dbm", "authentic_power_dbm", "freq_mhz",
                 "margin_db"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown scenario fields: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class SpoofResult:
    spoofed_power_dbm: float
    authentic_power_dbm: float
    captured: bool
    reported_position: Vec3
    distance_m: float

    @property
    def advantage_db(self) -> float:
        return self.spoofed_power_dbm - self.authentic_power_dbm

    def to_dict(self) -> dict:
        return {"captured": self.captured, "spoofed_power_dbm": round(self.spoofed_power_dbm, 6),
                "authentic_power_dbm": self.authentic_power_dbm,
                "advantage_db": round(self.advantage_db, 6), "distance_m": round(self.distance_m, 6),
                "reported_position": list(self.reported_position)}

    def format(self) -> str:
        return (f"distance {self.distance_m:.1f} m, spoofed {self.spoofed_power_dbm:.2f} dBm, "
                f"authentic {self.authentic_power_dbm:.2f} dBm\n"
                f"captured = {str(self.captured).lower()}\n"
                f"reported position = {list(self.reported_position)}\n")


def evaluate(scenario: SpoofScenario) -> SpoofResult:
    d = scenario.spoofer_distance
    p = received_power(scenario.tx_power_dbm, d, scenario.freq_mhz)
    captured = p > scenario.authentic_power_dbm + scenario.margin_db
    pos = scenario.spoofed_position if captured else scenario.target_position
    return SpoofResult(p, scenario.authentic_power_dbm, captured, pos, d)


def load_scenario(path) -> SpoofScenario:
    """Read a scenario record (JSON object) from ``path``."""
    text = Path(path).read_text(encoding="utf-8")
    d = json.loads(text)
    d.setdefault("name", Path(path).stem)
    return SpoofScenario.from_dict(d)

"""Coverage-guided mutational and generational fuzzing."""

from .campaign import (COMPLEX_GUARD_BITS, DEFAULT_STUCK_WINDOW, Campaign, CampaignConfig,
                       CampaignResult, Corpus, CrashRecord, FrontierBranch, Mode, PathCollision,
                       StuckReport, campaign, frontier, significant_bits)
from .compare import ComparisonReport, ComparisonRow, compare_modes
from .minimize import NonReproducible, minimize
from .mutate import INTERESTING_32, Operator, applicable, apply_operator, mutate
from .protocol import (DEFAULT_ANOMALY_RATE, Anomaly, IntField, ProtocolSpec, Rule, generate,
                       load_spec, tello_spec)
from .storage import read_corpus, write_corpus, write_crashes
from .testcase import DEFAULT_MAX_LEN, Origin, OriginKind, TestCase

__all__ = [
    "COMPLEX_GUARD_BITS", "DEFAULT_ANOMALY_RATE", "DEFAULT_MAX_LEN", "DEFAULT_STUCK_WINDOW",
    "INTERESTING_32", "Anomaly", "Campaign", "CampaignConfig", "CampaignResult",
    "ComparisonReport", "ComparisonRow", "Corpus", "CrashRecord", "FrontierBranch", "IntField",
    "Mode", "NonReproducible", "Operator", "Origin", "OriginKind", "PathCollision",
    "ProtocolSpec", "Rule", "StuckReport", "TestCase", "applicable", "apply_operator",
    "campaign", "compare_modes", "frontier", "generate", "load_spec", "minimize", "mutate",
    "read_corpus", "significant_bits", "tello_spec", "write_corpus", "write_crashes",
]

"""Deterministic token-based linkage of patient records to external death data."""

from .ingest import RawRecord, SourceLayout, merge_monthly_update, parse_source
from .linker import (
    Category,
    LinkedRow,
    Thresholds,
    TokenIndex,
    TokenizedDataset,
    ValidationStats,
    build_index,
    categorize,
    link_deaths,
    rank_tokens,
    validate_token,
)
from .normalize import (
    CleanRecord,
    FieldStatus,
    ValidityConfig,
    clean_record,
    normalize_digits,
    normalize_name,
    validate_date,
    validate_ssn,
)
from .profile import FieldProfile, TokenProfile, profile_field, profile_token
from .synth import SynthConfig, TruthMap, generate_population, score_against_truth
from .tokens import (
    DEFAULT_RULES,
    RuleTable,
    TokenRule,
    TokenSet,
    generate_all,
    generate_token,
    soundex,
)

__all__ = [
    "DEFAULT_RULES", "Category", "CleanRecord", "FieldProfile", "FieldStatus", "LinkedRow",
    "RawRecord", "RuleTable", "SourceLayout", "SynthConfig", "Thresholds", "TokenIndex",
    "TokenProfile", "TokenRule", "TokenSet", "TokenizedDataset", "TruthMap", "ValidationStats",
    "ValidityConfig", "build_index", "categorize", "clean_record", "generate_all",
    "generate_population", "generate_token", "link_deaths", "merge_monthly_update",
    "normalize_digits", "normalize_name", "parse_source", "profile_field", "profile_token",
    "rank_tokens", "score_against_truth", "soundex", "validate_date", "validate_ssn",
    "validate_token",
]

__version__ = "0.1.0"

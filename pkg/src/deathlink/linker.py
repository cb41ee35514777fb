"""Token indexes, validation statistics, categories and 1-to-1 death linkage.

A link is only ever made through a token value that occurs exactly once in
each dataset. Tokens are tried in priority order (best validation match
rate first) and the first qualifying token wins.
"""

from __future__ import annotations

import datetime as dt
import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .normalize import CleanRecord, ConfigError
from .tokens import RuleTable, TokenSet, generate_all

SINGLE_RECORD = "single-record"
UNIQUE_DOD = "unique-dod"
VALIDATION_MODES = (SINGLE_RECORD, UNIQUE_DOD)


class TokenIndex:
    """Exact value -> record ids multimap for one token id over one dataset."""

    def __init__(self, token_id: int, built_from: str = ""):
        self.token_id = token_id
        self.built_from = built_from
        self.entries = {}

    def add(self, value: str, record_id: str) -> None:
        ids = self.entries.get(value)
        if ids is None:
            self.entries[value] = [record_id]
        else:
            ids.append(record_id)

    def count(self, value: Optional[str]) -> int:
        ids = self.entries.get(value)
        return len(ids) if ids else 0

    def unique_id(self, value: Optional[str]) -> Optional[str]:
        """The single record bearing ``value``, or None if absent or shared."""
        ids = self.entries.get(value)
        if ids is not None and len(ids) == 1:
            return ids[0]
        return None

    def ids(self, value: Optional[str]) -> list:
        return self.entries.get(value, [])

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, value) -> bool:
        return value in self.entries


def build_index(dump: Iterable[tuple], token_id: int, built_from: str = "") -> TokenIndex:
    """Index ``(record_id, token_id, value)`` rows for one token id."""
    index = TokenIndex(token_id, built_from)
    for rid, tid, value in dump:
        if tid == token_id and value is not None:
            index.add(value, rid)
    return index


def build_indexes(token_sets: Iterable[TokenSet], token_ids: Sequence[int],
                  built_from: str = "") -> dict:
    indexes = {tid: TokenIndex(tid, built_from) for tid in token_ids}
    for ts in token_sets:
        for tid, index in indexes.items():
            value = ts.tokens.get(tid)
            if value is not None:
                index.add(value, ts.record_id)
    return indexes


class TokenizedDataset:
    """Clean records of one dataset plus their token sets and lazily built indexes."""

    def __init__(self, label: str, records: Sequence[CleanRecord], rules: RuleTable = RuleTable(),
                 token_sets: Optional[Sequence[TokenSet]] = None):
        self.label = label
        self.records = list(records)
        self.rules = rules
        if token_sets is None:
            token_sets = [generate_all(r, rules) for r in self.records]
        self.token_sets = list(token_sets)
        self.by_id = {r.record_id: r for r in self.records}
        self._indexes = {}

    def __len__(self):
        return len(self.records)

    def index(self, token_id: int) -> TokenIndex:
        idx = self._indexes.get(token_id)
        if idx is None:
            idx = build_indexes(self.token_sets, (token_id,), self.label)[token_id]
            self._indexes[token_id] = idx
        return idx

    def death_dates(self) -> dict:
        return {r.record_id: r.death_date for r in self.records}

    def subset(self, keep) -> "TokenizedDataset":
        pairs = [(r, t) for r, t in zip(self.records, self.token_sets) if keep(r)]
        return TokenizedDataset(self.label, [p[0] for p in pairs], self.rules, [p[1] for p in pairs])

    def validation_subset(self) -> "TokenizedDataset":
        """Records with a valid death date."""
        return self.subset(lambda r: r.death_date is not None)


@dataclass(frozen=True)
class ValidationStats:
    token_id: int
    one_to_one_count: int = 0
    dod_match: int = 0
    dod_nonmatch: int = 0

    def __post_init__(self):
        if self.dod_match + self.dod_nonmatch != self.one_to_one_count:
            raise ValueError("dod_match + dod_nonmatch must equal one_to_one_count")

    @property
    def rate(self) -> Optional[Fraction]:
        if self.one_to_one_count == 0:
            return None
        return Fraction(self.dod_match, self.one_to_one_count)

    @property
    def match_rate(self) -> Optional[float]:
        rate = self.rate
        return None if rate is None else float(rate)


class Category(enum.IntEnum):
    CATEGORY1 = 1
    CATEGORY2 = 2
    CATEGORY3 = 3


@dataclass(frozen=True)
class Thresholds:
    """Category 1 is rate > upper, category 3 is rate < lower, category 2 the rest."""

    upper: float = 0.80
    lower: float = 0.50

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise ConfigError(f"need 0 <= lower <= upper <= 1, got {self.lower}, {self.upper}")


def categorize(stats, thresholds: Thresholds = Thresholds()) -> Optional[Category]:
    """Category for a ValidationStats (or a bare rate); None when the rate is undefined."""
    rate = stats.rate if isinstance(stats, ValidationStats) else stats
    if rate is None:
        return None
    rate = Fraction(rate) if not isinstance(rate, float) else Fraction(str(rate))
    if rate > Fraction(str(thresholds.upper)):
        return Category.CATEGORY1
    if rate < Fraction(str(thresholds.lower)):
        return Category.CATEGORY3
    return Category.CATEGORY2


def rank_tokens(stats: Iterable[ValidationStats]) -> list:
    """Token ids by match rate (desc), then 1-to-1 count (desc), then id (asc).

    Tokens without any 1-to-1 match have no rate and are left out.
    """
    rated = [s for s in stats if s.rate is not None]
    rated.sort(key=lambda s: (-s.rate, -s.one_to_one_count, s.token_id))
    return [s.token_id for s in rated]


def _to_date(yyyymmdd: str) -> dt.date:
    return dt.date(int(yyyymmdd[:4]), int(yyyymmdd[4:6]), int(yyyymmdd[6:]))


def dates_agree(a: str, b: str, tolerance_days: int = 0) -> bool:
    if tolerance_days == 0 or a == b:
        return a == b
    try:
        return abs((_to_date(a) - _to_date(b)).days) <= tolerance_days
    except ValueError:
        # month/day checks can be off in strict mode, leaving non-calendar dates
        return False


def validate_token(token_id: int, subset: TokenizedDataset, external_index: TokenIndex,
                   external_dod: Mapping[str, Optional[str]], mode: str = SINGLE_RECORD,
                   tolerance_days: int = 0) -> ValidationStats:
    """DoD match / non-match counts for one token over the validation subset.

    A subset record counts when its token value is unique within the subset
    and, on the external side, either belongs to exactly one record that
    reports a death date (``single-record``) or to records that all report
    the same single death date (``unique-dod``).
    """
    if external_index.token_id != token_id:
        raise ValueError(f"external index is for token {external_index.token_id}, not {token_id}")
    if mode not in VALIDATION_MODES:
        raise ConfigError(f"unknown validation mode {mode!r}")
    in_subset = Counter(ts.tokens.get(token_id) for ts in subset.token_sets)
    matched = nonmatched = 0
    for rec, ts in zip(subset.records, subset.token_sets):
        value = ts.tokens.get(token_id)
        if value is None or in_subset[value] != 1 or rec.death_date is None:
            continue
        if mode == SINGLE_RECORD:
            ext_id = external_index.unique_id(value)
            if ext_id is None:
                continue
            ext_dod = external_dod.get(ext_id)
            if ext_dod is None:
                continue
        else:
            dods = {external_dod.get(i) for i in external_index.ids(value)} - {None}
            if len(dods) != 1:
                continue
            (ext_dod,) = dods
        if dates_agree(rec.death_date, ext_dod, tolerance_days):
            matched += 1
        else:
            nonmatched += 1
    return ValidationStats(token_id, matched + nonmatched, matched, nonmatched)


def validate_all(patients: TokenizedDataset, external: TokenizedDataset, mode: str = SINGLE_RECORD,
                 tolerance_days: int = 0) -> list:
    subset = patients.validation_subset()
    dods = external.death_dates()
    return [validate_token(tid, subset, external.index(tid), dods, mode, tolerance_days)
            for tid in patients.rules.ids]


@dataclass(frozen=True)
class LinkedRow:
    record_id: str
    dod_patient: Optional[str] = None
    dod_external: Optional[str] = None
    category: Optional[Category] = None
    token_id: Optional[int] = None
    external_id: Optional[str] = None

    @property
    def linked(self) -> bool:
        return self.external_id is not None


def link_deaths(patients: TokenizedDataset, external: TokenizedDataset, ranked: Sequence[int],
                categories: Mapping[int, Category]) -> list:
    """One LinkedRow per patient, in patient order.

    For each patient the ranked tokens are scanned in order; the first
    token whose value is unique in both datasets supplies the external
    record, its death date, the token's category and the token id.
    """
    missing = [t for t in ranked if t not in categories]
    if missing:
        raise ConfigError(f"ranked tokens without a category: {missing}")
    pairs = [(tid, patients.index(tid), external.index(tid)) for tid in ranked]
    ext_dod = external.death_dates()
    rows = []
    for rec, ts in zip(patients.records, patients.token_sets):
        row = LinkedRow(rec.record_id, dod_patient=rec.death_date)
        for tid, p_idx, e_idx in pairs:
            value = ts.tokens.get(tid)
            if value is None or p_idx.count(value) != 1:
                continue
            ext_id = e_idx.unique_id(value)
            if ext_id is None:
                continue
            row = LinkedRow(rec.record_id, rec.death_date, ext_dod.get(ext_id),
                            categories[tid], tid, ext_id)
            break
        rows.append(row)
    return rows

"""Complete / distinct / invalid counts for fields and tokens.

Field completeness is measured on the raw value (present = not null and
not blank), so a garbage value such as ``%^3`` is both complete and
invalid. Field distinctness counts distinct raw values; token
distinctness counts distinct generated token strings. The two can differ
for the same element because cleaning merges raw spellings.

Accumulators are mergeable, so per-shard partial profiles can be combined.
Distinct counts are exact unless a profiler is built with ``exact=False``,
in which case a HyperLogLog sketch is used and the result is marked
approximate.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .ingest import RawRecord
from .normalize import (
    IDENTITY_FIELDS,
    CleanRecord,
    ConfigError,
    FieldStatus,
    ValidityConfig,
    normalize_digits,
    validate_ssn,
)


class HyperLogLog:
    """Small HyperLogLog distinct-count sketch (2**p registers)."""

    def __init__(self, p: int = 14):
        self.p = p
        self.m = 1 << p
        self.registers = bytearray(self.m)

    def add(self, value: str) -> None:
        h = int.from_bytes(hashlib.blake2b(value.encode(), digest_size=8).digest(), "big")
        idx = h >> (64 - self.p)
        rest = h & ((1 << (64 - self.p)) - 1)
        rank = (64 - self.p) - rest.bit_length() + 1
        if rank > self.registers[idx]:
            self.registers[idx] = rank

    def merge(self, other: "HyperLogLog") -> None:
        self.registers = bytearray(max(a, b) for a, b in zip(self.registers, other.registers))

    def __len__(self) -> int:
        m = self.m
        alpha = 0.7213 / (1 + 1.079 / m)
        est = alpha * m * m / sum(2.0 ** -r for r in self.registers)
        zeros = self.registers.count(0)
        if est <= 2.5 * m and zeros:
            est = m * math.log(m / zeros)
        return int(round(est))


class DistinctCounter:
    def __init__(self, exact: bool = True):
        self.exact = exact
        self._values = set() if exact else HyperLogLog()

    def add(self, value: str) -> None:
        self._values.add(value)

    def merge(self, other: "DistinctCounter") -> None:
        if self.exact != other.exact:
            raise ValueError("cannot merge exact and approximate counters")
        if self.exact:
            self._values |= other._values
        else:
            self._values.merge(other._values)

    def __len__(self) -> int:
        return len(self._values)


@dataclass(frozen=True)
class FieldProfile:
    field: str
    complete: int
    distinct: int
    invalid: int
    total_records: int
    exact: bool = True


@dataclass(frozen=True)
class TokenProfile:
    token_id: int
    complete: int
    distinct: int
    total_records: int
    exact: bool = True

    @property
    def complete_pct(self) -> float:
        return self.complete / self.total_records if self.total_records else 0.0

    @property
    def distinct_pct(self) -> float:
        return self.distinct / self.total_records if self.total_records else 0.0


def _check_field(name: str) -> None:
    if name not in IDENTITY_FIELDS:
        raise ConfigError(f"unknown field {name!r}; expected one of {IDENTITY_FIELDS}")


class FieldProfiler:
    """Accumulates FieldProfiles for several fields over (raw, clean) pairs."""

    def __init__(self, field_names=IDENTITY_FIELDS, exact: bool = True):
        for name in field_names:
            _check_field(name)
        self.fields = tuple(field_names)
        self.exact = exact
        self.total = 0
        self.complete = Counter()
        self.invalid = Counter()
        self.distinct = {f: DistinctCounter(exact) for f in self.fields}

    def add(self, raw: RawRecord, clean: CleanRecord) -> None:
        self.total += 1
        for name in self.fields:
            value = getattr(raw, name)
            if value is None or not value.strip():
                continue
            self.complete[name] += 1
            self.distinct[name].add(value)
            if clean.status.get(name) is FieldStatus.INVALID:
                self.invalid[name] += 1

    def merge(self, other: "FieldProfiler") -> "FieldProfiler":
        self.total += other.total
        self.complete.update(other.complete)
        self.invalid.update(other.invalid)
        for name in self.fields:
            self.distinct[name].merge(other.distinct[name])
        return self

    def result(self, name: str) -> FieldProfile:
        return FieldProfile(name, self.complete[name], len(self.distinct[name]),
                            self.invalid[name], self.total, self.exact)

    def results(self) -> list:
        return [self.result(f) for f in self.fields]


class TokenProfiler:
    def __init__(self, rule_ids: Iterable[int], exact: bool = True):
        self.rule_ids = tuple(rule_ids)
        self.exact = exact
        self.total = 0
        self.complete = Counter()
        self.distinct = {t: DistinctCounter(exact) for t in self.rule_ids}

    def add_row(self, token_id: int, value: str) -> None:
        self.complete[token_id] += 1
        self.distinct[token_id].add(value)

    def add(self, token_set) -> None:
        self.total += 1
        for tid in self.rule_ids:
            value = token_set.tokens.get(tid)
            if value is not None:
                self.complete[tid] += 1
                self.distinct[tid].add(value)

    def merge(self, other: "TokenProfiler") -> "TokenProfiler":
        self.total += other.total
        self.complete.update(other.complete)
        for tid in self.rule_ids:
            self.distinct[tid].merge(other.distinct[tid])
        return self

    def result(self, token_id: int) -> TokenProfile:
        return TokenProfile(token_id, self.complete[token_id], len(self.distinct[token_id]),
                            self.total, self.exact)

    def results(self) -> list:
        return [self.result(t) for t in self.rule_ids]


def profile_field(pairs: Iterable[tuple], field: str) -> FieldProfile:
    """Profile one field over ``(RawRecord, CleanRecord)`` pairs."""
    prof = FieldProfiler((field,))
    for raw, clean in pairs:
        prof.add(raw, clean)
    return prof.result(field)


def profile_token(dump: Iterable[tuple], token_id: int, total_records: int) -> TokenProfile:
    """Profile one token id from ``(record_id, token_id, value)`` dump rows."""
    records = set()
    values = set()
    for rid, tid, value in dump:
        if tid == token_id and value is not None:
            records.add(rid)
            values.add(value)
    return TokenProfile(token_id, len(records), len(values), total_records)


def ssn_pattern(raw: Optional[str], cfg: ValidityConfig = ValidityConfig()) -> Optional[str]:
    """Bucket an invalid raw SSN into a breakdown pattern; None if valid or missing.

    Denylisted and repeated-digit values are reported verbatim
    (``888-88-8888``); structural failures are reported by shape
    (``9xx-xx-xxxx``, ``xxx-00-xxxx``).
    """
    if raw is None or not raw.strip():
        return None
    digits = normalize_digits(raw)
    if digits is None:
        return "no-digits"
    reason = validate_ssn(digits, cfg)
    if reason is None:
        return None
    if len(digits) == 9 and (digits in cfg.ssn_denylist or digits == digits[0] * 9):
        return f"{digits[:3]}-{digits[3:5]}-{digits[5:]}"
    return {
        "length": "wrong-length",
        "area-000": "000-xx-xxxx",
        "area-666": "666-xx-xxxx",
        "area-9xx": "9xx-xx-xxxx",
        "group-00": "xxx-00-xxxx",
        "serial-0000": "xxx-xx-0000",
        "denylist": f"{digits[:3]}-{digits[3:5]}-{digits[5:]}",
        "repeated-digit": f"{digits[:3]}-{digits[3:5]}-{digits[5:]}",
    }[reason]


def invalid_ssn_breakdown(raws: Iterable[RawRecord], cfg: ValidityConfig = ValidityConfig()) -> list:
    """``(pattern, count)`` pairs, most frequent first, ties by pattern."""
    counts = Counter()
    for raw in raws:
        pattern = ssn_pattern(raw.ssn, cfg)
        if pattern is not None:
            counts[pattern] += 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))

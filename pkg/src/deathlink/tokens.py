"""Linkage tokens built by concatenating standardized identity elements.

A token exists only when every element it uses is valid; otherwise it is
None. Parts are concatenated without a separator, so ``ssn + birth_date``
for 123354789 and 20081225 is ``12335478920081225``. Because there is no
delimiter, two different variable-length name combinations can in rare
cases produce the same string.

Rule part syntax (used in rule files and ``Part.parse``)::

    ssn                full field value
    last4:ssn          last four characters
    first3:first_name  first N characters (whole value when shorter)
    initial:middle_name
    year:birth_date    YYYY of a YYYYMMDD date
    soundex:last_name
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

from .normalize import IDENTITY_FIELDS, CleanRecord, ConfigError

_SOUNDEX_CODES = {}
for _letters, _digit in (("BFPV", "1"), ("CGJKQSXZ", "2"), ("DT", "3"),
                         ("L", "4"), ("MN", "5"), ("R", "6")):
    for _ch in _letters:
        _SOUNDEX_CODES[_ch] = _digit


def soundex(name: str) -> str:
    """American Soundex of an uppercase A-Z name, e.g. ROBERT -> R163.

    Letters with the same code separated only by H or W are coded once;
    vowels (and Y) separate them.
    """
    if not name or not name.isascii() or not name.isalpha() or not name.isupper():
        raise ValueError(f"soundex needs a non-empty uppercase A-Z string, got {name!r}")
    first = name[0]
    out = [first]
    prev = _SOUNDEX_CODES.get(first)
    for ch in name[1:]:
        code = _SOUNDEX_CODES.get(ch)
        if code is None:
            if ch not in "HW":
                prev = None
            continue
        if code != prev:
            out.append(code)
            if len(out) == 4:
                break
        prev = code
    return "".join(out).ljust(4, "0")


_PART_RE = re.compile(r"^(?:(last4|initial|year|soundex|first(\d+)):)?([a-z_]+)$")


@dataclass(frozen=True)
class Part:
    kind: str  # field | last4 | first | initial | year | soundex
    field: str
    n: int = 0

    @classmethod
    def parse(cls, text: str) -> "Part":
        m = _PART_RE.match(text.strip())
        if not m or m.group(3) not in IDENTITY_FIELDS:
            raise ConfigError(f"bad token part {text!r}")
        op, n, name = m.groups()
        if op is None:
            return cls("field", name)
        if n is not None:
            if int(n) < 1:
                raise ConfigError(f"bad token part {text!r}")
            return cls("first", name, int(n))
        return cls(op, name)

    def extract(self, value: str) -> str:
        kind = self.kind
        if kind == "field":
            return value
        if kind == "last4":
            return value[-4:]
        if kind == "first":
            return value[:self.n]
        if kind == "initial":
            return value[0]
        if kind == "year":
            return value[:4]
        return soundex(value)

    def __str__(self) -> str:
        if self.kind == "field":
            return self.field
        if self.kind == "first":
            return f"first{self.n}:{self.field}"
        return f"{self.kind}:{self.field}"

    def describe(self) -> str:
        return {
            "field": "{f}",
            "last4": "{f} (last 4)",
            "first": "1st {n} characters of {f}",
            "initial": "1st initial of {f}",
            "year": "YYYY of {f}",
            "soundex": "{f} (soundex)",
        }[self.kind].format(f=self.field, n=self.n)


@dataclass(frozen=True)
class TokenRule:
    id: int
    parts: tuple

    @classmethod
    def parse(cls, rule_id: int, parts: Sequence[str]) -> "TokenRule":
        if not parts:
            raise ConfigError(f"rule {rule_id} has no parts")
        return cls(int(rule_id), tuple(Part.parse(p) for p in parts))

    @property
    def fields(self) -> frozenset:
        return frozenset(p.field for p in self.parts)

    def describe(self) -> str:
        return " + ".join(p.describe() for p in self.parts)


_TABLE = {
    1: "ssn last_name middle_name first_name birth_date",
    2: "ssn last_name first_name birth_date",
    3: "ssn birth_date",
    4: "ssn year:birth_date first_name last_name",
    5: "ssn last_name middle_name first_name",
    6: "ssn",
    7: "last4:ssn last_name middle_name first_name birth_date",
    8: "last4:ssn birth_date",
    9: "last_name middle_name first_name birth_date",
    10: "last_name middle_name first_name year:birth_date",
    11: "last_name first_name birth_date",
    12: "last_name initial:middle_name first_name",
    13: "last_name first3:first_name birth_date",
    14: "last_name initial:first_name birth_date",
    15: "soundex:last_name soundex:middle_name soundex:first_name birth_date",
    16: "soundex:last_name soundex:middle_name soundex:first_name year:birth_date",
    17: "soundex:last_name soundex:first_name birth_date",
    18: "last_name",
    19: "first_name",
    20: "birth_date",
}

DEFAULT_RULES = tuple(TokenRule.parse(i, text.split()) for i, text in _TABLE.items())


class RuleTable:
    """Ordered, id-addressable collection of token rules."""

    def __init__(self, rules: Iterable[TokenRule] = DEFAULT_RULES):
        self.rules = tuple(rules)
        self.by_id = {r.id: r for r in self.rules}
        if len(self.by_id) != len(self.rules):
            raise ConfigError("duplicate rule ids in rule table")
        self.ids = tuple(r.id for r in self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __getitem__(self, rule_id: int) -> TokenRule:
        return self.by_id[rule_id]

    @classmethod
    def from_json(cls, data, extend_defaults: bool = False) -> "RuleTable":
        """Rules from ``[{"id": 21, "parts": ["ssn", "first3:last_name"]}, ...]``."""
        rules = [TokenRule.parse(item["id"], item["parts"]) for item in data]
        if extend_defaults:
            rules = list(DEFAULT_RULES) + rules
        return cls(rules)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RuleTable":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            return cls.from_json(data["rules"], extend_defaults=data.get("extend_defaults", False))
        return cls.from_json(data)

    def to_json(self) -> list:
        return [{"id": r.id, "parts": [str(p) for p in r.parts]} for r in self.rules]


@dataclass(frozen=True)
class TokenSet:
    record_id: str
    tokens: dict  # rule id -> token string or None

    def get(self, rule_id: int) -> Optional[str]:
        return self.tokens.get(rule_id)


def generate_token(rule: TokenRule, rec: CleanRecord) -> Optional[str]:
    pieces = []
    for part in rule.parts:
        value = getattr(rec, part.field)
        if value is None or not rec.is_valid(part.field):
            return None
        pieces.append(part.extract(value))
    return "".join(pieces)


def generate_all(rec: CleanRecord, rules: RuleTable = RuleTable()) -> TokenSet:
    return TokenSet(rec.record_id, {r.id: generate_token(r, rec) for r in rules})


DUMP_HEADER = ("record_id", "token_id", "token_value")


def iter_dump_rows(token_sets: Iterable[TokenSet]) -> Iterator[tuple]:
    for ts in token_sets:
        for rule_id, value in ts.tokens.items():
            if value is not None:
                yield ts.record_id, rule_id, value


def write_token_dump(token_sets: Iterable[TokenSet], out: TextIO) -> int:
    """One delimited row per non-null token; returns the row count."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DUMP_HEADER)
    n = 0
    for row in iter_dump_rows(token_sets):
        writer.writerow(row)
        n += 1
    return n


def read_token_dump(src: TextIO) -> Iterator[tuple]:
    reader = csv.reader(src)
    header = next(reader, None)
    if header is None:
        return
    if tuple(header) != DUMP_HEADER:
        raise ValueError(f"not a token dump: header {header}")
    for rid, tid, value in reader:
        yield rid, int(tid), value


def dump_to_string(token_sets: Iterable[TokenSet]) -> str:
    buf = io.StringIO()
    write_token_dump(token_sets, buf)
    return buf.getvalue()

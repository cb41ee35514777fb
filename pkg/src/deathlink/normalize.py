"""Cleaning, standardization and validation of identity fields.

Both datasets go through exactly this code path. Names are reduced to
uppercase A-Z and truncated; SSNs and dates are reduced to digits and then
validated. Nothing here attempts to repair human errors (swapped names,
transposed letters, MM/DD swaps); bad values are flagged, not fixed.
"""

from __future__ import annotations

import calendar
import datetime as dt
import enum
import re
import unicodedata
from dataclasses import dataclass, field, fields
from typing import Optional

from .ingest import RawRecord

NAME_FIELDS = ("first_name", "middle_name", "last_name")
DATE_FIELDS = ("birth_date", "death_date")
IDENTITY_FIELDS = ("first_name", "middle_name", "last_name", "birth_date", "death_date", "ssn")

NAME_MAX_LENGTH = {"first_name": 15, "middle_name": 15, "last_name": 20}

DEFAULT_SSN_DENYLIST = frozenset({"123456789", "012345678", "001010001", "090909090"})

_NON_DIGIT = re.compile(r"[^0-9]+")
_NON_ALPHA = re.compile(r"[^A-Za-z]+")

# Letters NFKD does not decompose into base letter + combining mark.
_SPECIAL_FOLDS = str.maketrans({
    "ß": "ss", "ẞ": "SS", "æ": "ae", "Æ": "AE", "œ": "oe", "Œ": "OE",
    "ø": "o", "Ø": "O", "ł": "l", "Ł": "L", "đ": "d", "Đ": "D",
    "ð": "d", "Ð": "D", "þ": "th", "Þ": "TH", "ı": "i",
})


class FieldStatus(str, enum.Enum):
    VALID = "valid"
    MISSING = "missing"
    INVALID = "invalid"


class ConfigError(ValueError):
    """Raised for unusable configuration (fatal, exit code 1 in the CLI)."""


@dataclass(frozen=True)
class ValidityConfig:
    """Bounds and lists used when validating dates and SSNs.

    ``max_year`` defaults to the current calendar year. ``strict_paper()``
    returns the original analysis settings: years 1850-2022 and no
    month/day range check.
    """

    min_year: int = 1850
    max_year: int = field(default_factory=lambda: dt.date.today().year)
    ssn_denylist: frozenset = DEFAULT_SSN_DENYLIST
    reject_repeated_digits: bool = True
    check_month_day: bool = True
    diacritics: str = "fold"

    def __post_init__(self):
        if self.min_year >= self.max_year:
            raise ConfigError(f"min_year ({self.min_year}) must be < max_year ({self.max_year})")
        if self.diacritics not in ("fold", "delete"):
            raise ConfigError(f"diacritics must be 'fold' or 'delete', got {self.diacritics!r}")
        bad = [s for s in self.ssn_denylist if not (len(s) == 9 and s.isdigit())]
        if bad:
            raise ConfigError(f"ssn_denylist entries must be 9 digits: {sorted(bad)}")
        object.__setattr__(self, "ssn_denylist", frozenset(self.ssn_denylist))

    @classmethod
    def strict_paper(cls) -> "ValidityConfig":
        return cls(min_year=1850, max_year=2022, check_month_day=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ValidityConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown validity options: {sorted(unknown)}")
        data = dict(data)
        if "ssn_denylist" in data:
            data["ssn_denylist"] = frozenset(data["ssn_denylist"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "min_year": self.min_year,
            "max_year": self.max_year,
            "ssn_denylist": sorted(self.ssn_denylist),
            "reject_repeated_digits": self.reject_repeated_digits,
            "check_month_day": self.check_month_day,
            "diacritics": self.diacritics,
        }


@dataclass(frozen=True)
class CleanRecord:
    record_id: str
    first_name: Optional[str] = None
    middle_name: Optional[str] = None
    last_name: Optional[str] = None
    birth_date: Optional[str] = None
    death_date: Optional[str] = None
    ssn: Optional[str] = None
    status: dict = field(default_factory=dict, compare=True, hash=False)

    def is_valid(self, name: str) -> bool:
        return self.status.get(name) is FieldStatus.VALID

    def as_raw(self) -> RawRecord:
        """Feed cleaned values back in as raw input (used for idempotence checks)."""
        return RawRecord(self.record_id, **{f: getattr(self, f) for f in IDENTITY_FIELDS})


def normalize_digits(raw: Optional[str]) -> Optional[str]:
    """Keep only the characters 0-9; None when nothing survives."""
    if not raw:
        return None
    digits = _NON_DIGIT.sub("", raw)
    return digits or None


DATE_ORDERS = ("YMD", "MDY", "DMY")
_DIGIT_GROUPS = re.compile(r"[0-9]+")


def normalize_date(raw: Optional[str], order: str = "YMD") -> Optional[str]:
    """Digits of a date rearranged to YYYYMMDD according to the source ``order``.

    With the default YMD order this is plain digit stripping. For MDY / DMY
    sources, separated forms (``5/7/1950``) are split on the separators and
    zero-padded; an unseparated 8-digit string is split by position.
    Anything else is returned as bare digits and left to validation.
    """
    if order == "YMD" or not raw:
        return normalize_digits(raw)
    if order not in DATE_ORDERS:
        raise ConfigError(f"date order must be one of {DATE_ORDERS}, got {order!r}")
    groups = _DIGIT_GROUPS.findall(raw)
    if len(groups) == 1 and len(groups[0]) == 8:
        g = groups[0]
        groups = [g[:2], g[2:4], g[4:]]
    if len(groups) != 3:
        return normalize_digits(raw)
    parts = dict(zip(order, groups))
    y, m, d = parts["Y"], parts["M"], parts["D"]
    if len(y) != 4 or len(m) > 2 or len(d) > 2:
        return "".join(groups)
    return y + m.zfill(2) + d.zfill(2)


def fold_diacritics(text: str) -> str:
    text = text.translate(_SPECIAL_FOLDS)
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_name(raw: Optional[str], field_name: str, diacritics: str = "fold") -> Optional[str]:
    """Standardize a name: fold accents, keep A-Z only, uppercase, truncate.

    ``field_name`` is one of first_name/middle_name/last_name (the short
    forms first/middle/last are accepted too) and selects the length limit.
    With ``diacritics="delete"`` accented letters are dropped instead of
    folded to their base letter.
    """
    if field_name in ("first", "middle", "last"):
        field_name += "_name"
    max_len = NAME_MAX_LENGTH[field_name]
    if not raw:
        return None
    if diacritics == "fold" and not raw.isascii():
        raw = fold_diacritics(raw)
    name = _NON_ALPHA.sub("", raw).upper()[:max_len]
    return name or None


def validate_ssn(digits: Optional[str], cfg: ValidityConfig = ValidityConfig()) -> Optional[str]:
    """Return the first failed SSN rule, or None if ``digits`` is a valid SSN.

    Rules, in order: length, area 000, area 666, area 900-999, group 00,
    serial 0000, explicit denylist, single repeated digit.
    """
    if digits is None or len(digits) != 9 or not digits.isdigit():
        return "length"
    area, group, serial = digits[:3], digits[3:5], digits[5:]
    if area == "000":
        return "area-000"
    if area == "666":
        return "area-666"
    if area[0] == "9":
        return "area-9xx"
    if group == "00":
        return "group-00"
    if serial == "0000":
        return "serial-0000"
    if digits in cfg.ssn_denylist:
        return "denylist"
    if cfg.reject_repeated_digits and digits == digits[0] * 9:
        return "repeated-digit"
    return None


def validate_date(digits: Optional[str], cfg: ValidityConfig = ValidityConfig()) -> Optional[str]:
    """Return the first failed rule for a YYYYMMDD digit string, or None if valid."""
    if digits is None or len(digits) != 8 or not digits.isdigit():
        return "length"
    year, month, day = int(digits[:4]), int(digits[4:6]), int(digits[6:])
    if year < cfg.min_year:
        return "year-below-min"
    if year > cfg.max_year:
        return "year-above-max"
    if cfg.check_month_day:
        if not 1 <= month <= 12:
            return "month-out-of-range"
        if not 1 <= day <= calendar.monthrange(year, month)[1]:
            return "day-out-of-range"
    return None


def _is_missing(raw: Optional[str]) -> bool:
    return raw is None or not raw.strip()


def clean_field(name: str, raw: Optional[str], cfg: ValidityConfig, date_order: str = "YMD"):
    """Clean one field; returns ``(value, status)``."""
    if _is_missing(raw):
        return None, FieldStatus.MISSING
    if name in NAME_FIELDS:
        value = normalize_name(raw, name, cfg.diacritics)
        problem = None if value else "empty"
    elif name == "ssn":
        value = normalize_digits(raw)
        problem = validate_ssn(value, cfg)
    else:
        value = normalize_date(raw, date_order)
        problem = validate_date(value, cfg)
    if problem is not None:
        return None, FieldStatus.INVALID
    return value, FieldStatus.VALID


def clean_record(raw: RawRecord, cfg: ValidityConfig = ValidityConfig(),
                 date_order: str = "YMD") -> CleanRecord:
    """Normalize and validate every identity field of ``raw`` independently.

    A blank or absent raw value is MISSING; a present value that cleaning
    empties or validation rejects is INVALID and stored as None.
    """
    values = {}
    status = {}
    for name in IDENTITY_FIELDS:
        values[name], status[name] = clean_field(name, getattr(raw, name), cfg, date_order)
    return CleanRecord(raw.record_id, status=status, **values)


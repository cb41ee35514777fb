"""Reading person rows from delimited or fixed-width files.

The layout of a source file is always supplied as configuration; no byte
layout is built in. Bad rows are skipped and collected with their line
number so that reports can say how many rows were dropped.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, Union

log = logging.getLogger(__name__)

ROLES = ("record_id", "first_name", "middle_name", "last_name", "birth_date", "death_date", "ssn")

class IngestError(Exception):
    """Fatal ingest problem: bad layout, unreadable header or undecodable input."""


@dataclass(frozen=True)
class RawRecord:
    record_id: str
    first_name: Optional[str] = None
    middle_name: Optional[str] = None
    last_name: Optional[str] = None
    birth_date: Optional[str] = None
    death_date: Optional[str] = None
    ssn: Optional[str] = None


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class ParseResult:
    records: list
    errors: list
    rows_read: int

    @property
    def rows_emitted(self) -> int:
        return len(self.records)

    def summary(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_emitted": self.rows_emitted,
            "rows_rejected": len(self.errors),
        }


@dataclass(frozen=True)
class SourceLayout:
    """How to find each identity role in a source file.

    ``column_map`` maps a role to a header name (delimited with header), a
    0-based column index (delimited without header) or a
    ``(byte_start, byte_length)`` span (fixed width). ``date_order`` tells
    the normalizer how the source writes dates.
    """

    format: str = "delimited"
    column_map: dict = field(default_factory=dict)
    delimiter: str = ","
    has_header: bool = True
    encoding: str = "utf-8"
    date_order: str = "YMD"

    def __post_init__(self):
        if self.format not in ("delimited", "fixed_width"):
            raise IngestError(f"unknown format {self.format!r}")
        if self.date_order not in ("YMD", "MDY", "DMY"):
            raise IngestError(f"date_order must be YMD, MDY or DMY, got {self.date_order!r}")
        unknown = set(self.column_map) - set(ROLES)
        if unknown:
            raise IngestError(f"unknown roles in column_map: {sorted(unknown)}")
        if self.format == "delimited":
            if len(self.delimiter) != 1:
                raise IngestError("delimiter must be a single character")
            targets = list(self.column_map.values())
            if len(set(targets)) != len(targets):
                raise IngestError("two roles map to the same column")
            for role, col in self.column_map.items():
                if self.has_header and not isinstance(col, str):
                    raise IngestError(f"role {role}: expected a header name, got {col!r}")
                if not self.has_header and not (isinstance(col, int) and col >= 0):
                    raise IngestError(f"role {role}: expected a column index, got {col!r}")
        else:
            spans = {}
            for role, span in self.column_map.items():
                try:
                    start, length = (int(x) for x in span)
                except (TypeError, ValueError):
                    raise IngestError(f"role {role}: bad span {span!r}") from None
                if start < 0 or length < 1:
                    raise IngestError(f"role {role}: span must have start >= 0 and length >= 1")
                spans[role] = (start, length)
            ordered = sorted(spans.items(), key=lambda kv: kv[1])
            for (r1, (s1, l1)), (r2, (s2, _)) in zip(ordered, ordered[1:]):
                if s1 + l1 > s2:
                    raise IngestError(f"spans for {r1} and {r2} overlap")
            object.__setattr__(self, "column_map", spans)

    def require(self, *roles: str) -> None:
        missing = [r for r in roles if r not in self.column_map]
        if missing:
            raise IngestError(f"layout lacks required role(s): {missing}")

    @property
    def line_width(self) -> int:
        return max((s + n for s, n in self.column_map.values()), default=0)

    @classmethod
    def from_dict(cls, data: dict) -> "SourceLayout":
        data = dict(data)
        cmap = data.get("column_map", {})
        if data.get("format") == "fixed_width":
            cmap = {k: tuple(v) for k, v in cmap.items()}
        data["column_map"] = cmap
        try:
            return cls(**data)
        except TypeError as exc:
            raise IngestError(f"bad layout: {exc}") from None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SourceLayout":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        cmap = self.column_map
        if self.format == "fixed_width":
            cmap = {k: list(v) for k, v in cmap.items()}
        return {
            "format": self.format,
            "column_map": dict(cmap),
            "delimiter": self.delimiter,
            "has_header": self.has_header,
            "encoding": self.encoding,
            "date_order": self.date_order,
        }


def standard_layout(delimiter: str = ",") -> SourceLayout:
    """Delimited layout whose header names equal the role names."""
    return SourceLayout("delimited", {r: r for r in ROLES}, delimiter=delimiter)


def _cell(value: Optional[str]) -> Optional[str]:
    return value if value else None


def _iter_delimited(layout: SourceLayout, stream: BinaryIO, result: ParseResult):
    text = io.TextIOWrapper(stream, encoding=layout.encoding, newline="")
    reader = csv.reader(text, delimiter=layout.delimiter)
    width = None
    if layout.has_header:
        try:
            header = next(reader)
        except StopIteration:
            return
        except (csv.Error, UnicodeDecodeError) as exc:
            raise IngestError(f"unreadable header: {exc}") from None
        positions = {name: i for i, name in enumerate(header)}
        missing = [c for c in layout.column_map.values() if c not in positions]
        if missing:
            raise IngestError(f"header lacks column(s) {missing}")
        index = {role: positions[col] for role, col in layout.column_map.items()}
        width = len(header)
    else:
        index = dict(layout.column_map)
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            result.rows_read += 1
            result.errors.append(RowError(reader.line_num, f"malformed row: {exc}"))
            continue
        except UnicodeDecodeError as exc:
            raise IngestError(f"input not decodable as {layout.encoding}: {exc}") from None
        if not row:
            continue
        result.rows_read += 1
        if width is None:
            width = len(row)
        if len(row) != width or (index and len(row) <= max(index.values())):
            result.errors.append(
                RowError(reader.line_num, f"expected {width} fields, found {len(row)}"))
            continue
        yield reader.line_num, {role: _cell(row[i]) for role, i in index.items()}


def _iter_fixed(layout: SourceLayout, stream: BinaryIO, result: ParseResult):
    width = layout.line_width
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip(b"\r\n")
        if not line.strip():
            continue
        result.rows_read += 1
        if len(line) < width:
            result.errors.append(RowError(line_no, f"line is {len(line)} bytes, layout needs {width}"))
            continue
        values = {}
        try:
            for role, (start, length) in layout.column_map.items():
                chunk = line[start:start + length].decode(layout.encoding).strip()
                values[role] = chunk or None
        except UnicodeDecodeError as exc:
            raise IngestError(f"line {line_no} not decodable as {layout.encoding}: {exc}") from None
        yield line_no, values


def parse_source(layout: SourceLayout, stream: BinaryIO) -> ParseResult:
    """Parse a binary stream into RawRecords, in file order.

    Rows with the wrong number of fields, short fixed-width lines and
    duplicate record ids are skipped and reported in ``errors``. When the
    layout has no record_id role, ids are assigned from the row ordinal.
    """
    result = ParseResult(records=[], errors=[], rows_read=0)
    rows = _iter_delimited(layout, stream, result) if layout.format == "delimited" \
        else _iter_fixed(layout, stream, result)
    seen = set()
    for line_no, values in rows:
        rid = values.pop("record_id", None) if "record_id" in layout.column_map \
            else f"R{result.rows_read}"
        if rid is not None:
            rid = rid.strip()
        if not rid:
            result.errors.append(RowError(line_no, "empty record_id"))
            continue
        if rid in seen:
            result.errors.append(RowError(line_no, f"duplicate record_id {rid!r}"))
            continue
        seen.add(rid)
        result.records.append(RawRecord(rid, **values))
    return result


def read_source(path: Union[str, Path], layout: SourceLayout) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_source(layout, fh)


def serialize_records(layout: SourceLayout, records: Iterable[RawRecord]) -> bytes:
    """Write records back out under ``layout`` (inverse of parse_source)."""
    cmap = layout.column_map
    out = io.BytesIO()
    if layout.format == "delimited":
        text = io.TextIOWrapper(out, encoding=layout.encoding, newline="", write_through=True)
        writer = csv.writer(text, delimiter=layout.delimiter, lineterminator="\n")
        if layout.has_header:
            header_roles = list(cmap)
            writer.writerow([cmap[r] for r in header_roles])
            for rec in records:
                writer.writerow([getattr(rec, r) or "" for r in header_roles])
        else:
            width = max(cmap.values()) + 1
            for rec in records:
                row = [""] * width
                for role, i in cmap.items():
                    row[i] = getattr(rec, role) or ""
                writer.writerow(row)
        text.flush()
        text.detach()
    else:
        width = layout.line_width
        for rec in records:
            line = bytearray(b" " * width)
            for role, (start, length) in cmap.items():
                value = (getattr(rec, role) or "").encode(layout.encoding)
                if len(value) > length:
                    raise IngestError(f"{role} value {value!r} wider than its {length}-byte span")
                line[start:start + len(value)] = value
            out.write(bytes(line) + b"\n")
    return out.getvalue()


@dataclass
class MergeResult:
    records: list
    rejected: list
    warnings: list


def _person_key(rec: RawRecord) -> Optional[str]:
    if not rec.ssn:
        return None
    digits = "".join(ch for ch in rec.ssn if ch.isdigit() and ch.isascii())
    return digits or None


def merge_monthly_update(existing: Iterable[RawRecord], update: Iterable[RawRecord]) -> MergeResult:
    """Apply a death-master update: per SSN, the update's record replaces the old one whole.

    Records are keyed by the digits of their SSN. Output order is the
    existing order (replaced records keep their slot) followed by SSNs new
    in the update, in update order. A full snapshot is just an update that
    happens to cover every SSN.
    """
    rejected, warnings = [], []

    def keyed(records, label):
        by_key = {}
        for rec in records:
            key = _person_key(rec)
            if key is None:
                rejected.append(rec)
                continue
            if key in by_key:
                msg = f"{label}: duplicate ssn {key}, keeping the later record {rec.record_id!r}"
                log.warning(msg)
                warnings.append(msg)
            by_key[key] = rec
        return by_key

    merged = keyed(existing, "existing")
    merged.update(keyed(update, "update"))
    return MergeResult(list(merged.values()), rejected, warnings)

"""Text and JSON renderings of profile, validation and linkage results."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from typing import Iterable, Sequence

from .linker import LinkedRow, Thresholds, ValidationStats, categorize
from .normalize import IDENTITY_FIELDS, FieldStatus
from .profile import FieldProfile, TokenProfile
from .tokens import RuleTable

LINKED_HEADER = ("record_id", "dod_patient", "dod_external", "category", "token_id", "external_id")


def format_pct(fraction, digits: int = 4) -> str:
    if fraction is None:
        return ""
    return f"{float(fraction) * 100:.{digits}g}%"


def text_table(headers: Sequence[str], rows: Iterable[Sequence]) -> str:
    rows = [["" if v is None else str(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(v)) for w, v in zip(widths, row)]

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out) + "\n"


def to_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def status_tallies(cleans) -> dict:
    counts = {f: Counter() for f in IDENTITY_FIELDS}
    for rec in cleans:
        for f in IDENTITY_FIELDS:
            counts[f][rec.status[f].value] += 1
    return {f: {s.value: counts[f][s.value] for s in FieldStatus} for f in IDENTITY_FIELDS}


def field_profile_rows(profiles: Sequence[FieldProfile]) -> list:
    return [{"field": p.field, "complete": p.complete, "distinct": p.distinct,
             "invalid": p.invalid, "total_records": p.total_records, "exact": p.exact}
            for p in profiles]


def field_profile_text(profiles: Sequence[FieldProfile], title: str = "") -> str:
    body = text_table(("field", "complete", "distinct", "invalid"),
                      [(p.field, p.complete, p.distinct, p.invalid) for p in profiles])
    return f"{title}\n{body}" if title else body


def token_profile_rows(profiles: Sequence[TokenProfile], rules: RuleTable, digits: int = 4) -> list:
    return [{"token_id": p.token_id, "token": rules[p.token_id].describe(),
             "complete": p.complete, "complete_pct": format_pct(p.complete_pct, digits),
             "distinct": p.distinct, "distinct_pct": format_pct(p.distinct_pct, digits),
             "total_records": p.total_records, "exact": p.exact}
            for p in profiles]


def token_profile_text(profiles: Sequence[TokenProfile], rules: RuleTable, digits: int = 4,
                       title: str = "") -> str:
    rows = token_profile_rows(profiles, rules, digits)
    body = text_table(("id", "token", "complete", "%", "distinct", "%"),
                      [(r["token_id"], r["token"], r["complete"], r["complete_pct"],
                        r["distinct"], r["distinct_pct"]) for r in rows])
    return f"{title}\n{body}" if title else body


def validation_rows(stats: Sequence[ValidationStats], ranked: Sequence[int], rules: RuleTable,
                    thresholds: Thresholds = Thresholds(), digits: int = 4) -> list:
    """Rated tokens in rank order, then tokens without a rate by id."""
    by_id = {s.token_id: s for s in stats}
    order = list(ranked) + sorted(t for t in by_id if t not in set(ranked))
    rows = []
    for tid in order:
        s = by_id[tid]
        cat = categorize(s, thresholds)
        rows.append({
            "token_id": tid,
            "token": rules[tid].describe(),
            "one_to_one": s.one_to_one_count,
            "dod_match": s.dod_match,
            "dod_nonmatch": s.dod_nonmatch,
            "match_rate": format_pct(s.rate, digits),
            "category": None if cat is None else int(cat),
        })
    return rows


def validation_text(rows: Sequence[dict], title: str = "") -> str:
    body = text_table(("id", "token", "1-to-1", "DoD match", "DoD non-match", "rate", "category"),
                      [(r["token_id"], r["token"], r["one_to_one"], r["dod_match"],
                        r["dod_nonmatch"], r["match_rate"], r["category"]) for r in rows])
    return f"{title}\n{body}" if title else body


def ssn_breakdown_text(breakdown: Sequence[tuple], title: str = "") -> str:
    body = text_table(("invalid ssn", "count"), breakdown)
    return f"{title}\n{body}" if title else body


def linked_csv(rows: Iterable[LinkedRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LINKED_HEADER)
    for r in rows:
        writer.writerow((r.record_id, r.dod_patient or "", r.dod_external or "",
                         "" if r.category is None else int(r.category),
                         "" if r.token_id is None else r.token_id, r.external_id or ""))
    return buf.getvalue()

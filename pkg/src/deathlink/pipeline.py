"""Clean + tokenize batches of raw records, optionally across worker processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

from .ingest import RawRecord
from .normalize import ValidityConfig, clean_record
from .profile import FieldProfiler, TokenProfiler
from .tokens import RuleTable, generate_all

CHUNK_SIZE = 20_000


def _prepare_chunk(args):
    raws, cfg, rules, date_order = args
    cleans = [clean_record(r, cfg, date_order) for r in raws]
    return cleans, [generate_all(c, rules) for c in cleans]


def _chunks(seq: Sequence, size: int):
    for i in range(0, len(seq), size):
        yield seq[i:i + size]


def prepare(raws: Sequence[RawRecord], cfg: ValidityConfig, rules: RuleTable = RuleTable(),
            threads: int = 1, date_order: str = "YMD"):
    """Return ``(clean_records, token_sets)`` in input order."""
    raws = list(raws)
    if threads <= 1 or len(raws) <= CHUNK_SIZE:
        return _prepare_chunk((raws, cfg, rules, date_order))
    cleans, token_sets = [], []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        jobs = ((chunk, cfg, rules, date_order) for chunk in _chunks(raws, CHUNK_SIZE))
        for c, t in pool.map(_prepare_chunk, jobs):
            cleans.extend(c)
            token_sets.extend(t)
    return cleans, token_sets


def profile_stream(raws: Iterable[RawRecord], cfg: ValidityConfig, rules: RuleTable = RuleTable(),
                   exact: bool = True, date_order: str = "YMD"):
    """Normalize, tokenize and profile without keeping records in memory.

    Returns ``(FieldProfiler, TokenProfiler)``.
    """
    fields = FieldProfiler(exact=exact)
    tokens = TokenProfiler(rules.ids, exact=exact)
    for raw in raws:
        clean = clean_record(raw, cfg, date_order)
        fields.add(raw, clean)
        tokens.add(generate_all(clean, rules))
    return fields, tokens

"""Independent reference implementations used to check the engine.

These deliberately avoid the engine's indexes and helpers: they work on
plain lists with nested loops so that agreement means something.
"""

import datetime as dt

NAMED_INVALID = {"123456789", "012345678", "001010001", "090909090"}


def ssn_is_valid(s):
    """Rule-by-rule SSN check using integer arithmetic."""
    if len(s) != 9 or not s.isdigit():
        return False
    area, group, serial = int(s[:3]), int(s[3:5]), int(s[5:])
    if area == 0 or area == 666 or area >= 900:
        return False
    if group == 0 or serial == 0:
        return False
    if s in NAMED_INVALID:
        return False
    return len(set(s)) > 1


def date_is_valid(s, min_year=1850, max_year=2022):
    """Calendar check through datetime.date."""
    if len(s) != 8 or not s.isdigit():
        return False
    try:
        d = dt.date(int(s[:4]), int(s[4:6]), int(s[6:]))
    except ValueError:
        return False
    return min_year <= d.year <= max_year


def _count(values, v):
    return values.count(v)


def brute_validate(token_id, patients, externals, mode="single-record"):
    """``patients``/``externals``: lists of (CleanRecord, TokenSet).

    Returns ``(one_to_one, match, nonmatch)``.
    """
    subset = [(r, t) for r, t in patients if r.death_date is not None]
    sub_vals = [t.tokens.get(token_id) for _, t in subset]
    ext_vals = [t.tokens.get(token_id) for _, t in externals]
    match = nonmatch = 0
    for (rec, _), v in zip(subset, sub_vals):
        if v is None or _count(sub_vals, v) != 1:
            continue
        hits = [externals[j][0] for j, ev in enumerate(ext_vals) if ev == v]
        if mode == "single-record":
            if len(hits) != 1 or hits[0].death_date is None:
                continue
            ext_dod = hits[0].death_date
        else:
            dods = {h.death_date for h in hits if h.death_date is not None}
            if len(dods) != 1:
                continue
            ext_dod = dods.pop()
        if ext_dod == rec.death_date:
            match += 1
        else:
            nonmatch += 1
    return match + nonmatch, match, nonmatch


def brute_link(patients, externals, ranked, categories):
    """Materialize every (patient, external) token match, then apply the 1-to-1 rules.

    Returns a list of tuples (record_id, dod_patient, dod_external,
    category, token_id, external_id).
    """
    all_matches = {}
    pat_vals = {}
    for tid in ranked:
        pv = [t.tokens.get(tid) for _, t in patients]
        ev = [t.tokens.get(tid) for _, t in externals]
        pat_vals[tid] = pv
        all_matches[tid] = [(i, j) for i, a in enumerate(pv) if a is not None
                            for j, b in enumerate(ev) if a == b]
    out = []
    for i, (rec, _) in enumerate(patients):
        row = (rec.record_id, rec.death_date, None, None, None, None)
        for tid in ranked:
            v = pat_vals[tid][i]
            if v is None or _count(pat_vals[tid], v) != 1:
                continue
            partners = [j for (pi, j) in all_matches[tid] if pi == i]
            if len(partners) != 1:
                continue
            ext = externals[partners[0]][0]
            row = (rec.record_id, rec.death_date, ext.death_date, categories[tid], tid, ext.record_id)
            break
        out.append(row)
    return out


def recount(rows, truth_pairs):
    """TP / FP / FN from plain tuples."""
    tp = sum(1 for r in rows if r[5] is not None and truth_pairs.get(r[0]) == r[5])
    fp = sum(1 for r in rows if r[5] is not None and truth_pairs.get(r[0]) != r[5])
    return tp, fp, len(truth_pairs) - tp

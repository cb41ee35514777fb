import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deathlink.ingest import RawRecord
from deathlink.normalize import ConfigError, ValidityConfig, clean_record
from deathlink.pipeline import prepare, profile_stream
from deathlink.profile import (
    FieldProfiler,
    HyperLogLog,
    TokenProfiler,
    invalid_ssn_breakdown,
    profile_field,
    profile_token,
    ssn_pattern,
)
from deathlink.synth import SynthConfig, generate_population
from deathlink.tokens import RuleTable, generate_all, iter_dump_rows

CFG = ValidityConfig(max_year=2022)
RULES = RuleTable()


def pairs_of(raws, date_order="YMD"):
    return [(r, clean_record(r, CFG, date_order)) for r in raws]


def test_five_person_first_name(five_person_records):
    prof = profile_field(pairs_of(five_person_records, "MDY"), "first_name")
    assert (prof.complete, prof.distinct, prof.invalid) == (5, 4, 1)


def test_five_person_birth_date(five_person_records):
    prof = profile_field(pairs_of(five_person_records, "MDY"), "birth_date")
    assert (prof.complete, prof.distinct, prof.invalid) == (4, 3, 0)


def test_empty_dataset():
    prof = FieldProfiler()
    assert all((p.complete, p.distinct, p.invalid, p.total_records) == (0, 0, 0, 0)
               for p in prof.results())
    tp = TokenProfiler(RULES.ids).result(3)
    assert (tp.complete, tp.distinct, tp.complete_pct) == (0, 0, 0.0)


def test_unknown_field_rejected():
    with pytest.raises(ConfigError):
        FieldProfiler(("zip",))


def test_token18_last_names():
    raws = [RawRecord(str(i), last_name=n) for i, n in enumerate(["Doe", "doe ", "Roe"])]
    sets = [generate_all(c, RULES) for _, c in pairs_of(raws)]
    tp = profile_token(iter_dump_rows(sets), 18, len(sets))
    assert (tp.complete, tp.distinct) == (3, 2)
    # raw spellings differ, so the field view sees three distinct values
    assert profile_field(pairs_of(raws), "last_name").distinct == 3


def _synth_raws(n, seed=5, **rates):
    patients, external, _ = generate_population(SynthConfig(n, seed=seed, error_rates=rates))
    return patients + external


def test_distinct_matches_sort_unique_oracle():
    raws = _synth_raws(5000, null=0.1, typo=0.05, invalid_ssn=0.1)
    assert len(raws) >= 7500
    fields, tokens = profile_stream(raws, CFG, RULES)
    for name in ("first_name", "last_name", "birth_date", "ssn"):
        vals = sorted(getattr(r, name) for r in raws if getattr(r, name) and getattr(r, name).strip())
        uniq = [v for i, v in enumerate(vals) if i == 0 or v != vals[i - 1]]
        prof = fields.result(name)
        assert (prof.complete, prof.distinct) == (len(vals), len(uniq))
    _, sets = prepare(raws, CFG, RULES)
    for tid in RULES.ids:
        vals = sorted(ts.tokens[tid] for ts in sets if ts.tokens.get(tid) is not None)
        assert tokens.result(tid).complete == len(vals)
        assert tokens.result(tid).distinct == len(set(vals))


def test_token_complete_bounded_by_field_validity():
    raws = _synth_raws(800, null=0.2, typo=0.1, invalid_ssn=0.2, date_swap=0.1)
    pairs = pairs_of(raws)
    fields = FieldProfiler()
    tokens = TokenProfiler(RULES.ids)
    for raw, clean in pairs:
        fields.add(raw, clean)
        tokens.add(generate_all(clean, RULES))
    for rule in RULES:
        for f in rule.fields:
            p = fields.result(f)
            assert tokens.result(rule.id).complete <= p.complete - p.invalid


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_profile_permutation_invariant(rnd):
    raws = _synth_raws(60, seed=11, null=0.2, typo=0.1)
    shuffled = list(raws)
    rnd.shuffle(shuffled)
    a_f, a_t = profile_stream(raws, CFG, RULES)
    b_f, b_t = profile_stream(shuffled, CFG, RULES)
    assert a_f.results() == b_f.results() and a_t.results() == b_t.results()


def test_merge_equals_single_pass():
    raws = _synth_raws(400, null=0.1)
    whole_f, whole_t = profile_stream(raws, CFG, RULES)
    left_f, left_t = profile_stream(raws[:250], CFG, RULES)
    right_f, right_t = profile_stream(raws[250:], CFG, RULES)
    assert left_f.merge(right_f).results() == whole_f.results()
    assert left_t.merge(right_t).results() == whole_t.results()


def test_hyperloglog_estimate_close():
    for n in (100, 5000, 60000):
        h = HyperLogLog()
        for i in range(n):
            h.add(f"v{i}")
        assert abs(len(h) - n) / n < 0.03


def test_hyperloglog_merge():
    a, b, both = HyperLogLog(), HyperLogLog(), HyperLogLog()
    for i in range(3000):
        (a if i % 2 else b).add(str(i))
        both.add(str(i))
    a.merge(b)
    assert len(a) == len(both)


def test_approximate_mode_is_flagged():
    raws = _synth_raws(200)
    fields, tokens = profile_stream(raws, CFG, RULES, exact=False)
    exact_f, _ = profile_stream(raws, CFG, RULES)
    assert not fields.result("ssn").exact and not tokens.result(6).exact
    est, true = fields.result("ssn").distinct, exact_f.result("ssn").distinct
    assert abs(est - true) / true < 0.05


@pytest.mark.parametrize("raw, pattern", [
    ("999-99-9999", "999-99-9999"),
    ("888-88-8888", "888-88-8888"),
    ("000-00-0000", "000-00-0000"),
    ("912-34-5678", "9xx-xx-xxxx"),
    ("123-00-4567", "xxx-00-xxxx"),
    ("666-12-3456", "666-xx-xxxx"),
    ("000-12-3456", "000-xx-xxxx"),
    ("123-45-0000", "xxx-xx-0000"),
    ("123-45-6789", "123-45-6789"),
    ("001-01-0001", "001-01-0001"),
    ("12-345", "wrong-length"),
    ("unknown", "no-digits"),
    ("123-35-4789", None),
    ("", None),
    (None, None),
])
def test_ssn_pattern(raw, pattern):
    assert ssn_pattern(raw) == pattern


def test_invalid_ssn_breakdown_order():
    raws = [RawRecord(str(i), ssn=s) for i, s in enumerate(
        ["999-99-9999"] * 3 + ["888-88-8888"] * 3 + ["912-34-5678"] + ["123-35-4789"] * 5)]
    assert invalid_ssn_breakdown(raws) == [("888-88-8888", 3), ("999-99-9999", 3), ("9xx-xx-xxxx", 1)]


def test_breakdown_total_equals_invalid_count():
    rng = random.Random(2)
    raws = [RawRecord(str(i), ssn="".join(rng.choice("0123456789-") for _ in range(rng.randint(0, 12))))
            for i in range(2000)]
    total = sum(c for _, c in invalid_ssn_breakdown(raws, CFG))
    assert total == profile_field(pairs_of(raws), "ssn").invalid

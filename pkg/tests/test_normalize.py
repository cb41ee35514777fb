import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from deathlink.ingest import RawRecord
from deathlink.normalize import (
    IDENTITY_FIELDS,
    CleanRecord,
    ConfigError,
    FieldStatus,
    ValidityConfig,
    clean_record,
    normalize_date,
    normalize_digits,
    normalize_name,
    validate_date,
    validate_ssn,
)

STRICT = ValidityConfig.strict_paper()
CFG_2022 = ValidityConfig(max_year=2022)


@pytest.mark.parametrize("raw, expected", [
    ("123-35-4789", "123354789"),
    ("2008/12/25", "20081225"),
    ("2008-12-25", "20081225"),
    ("--", None),
    ("", None),
    (None, None),
    (" 12 3 ", "123"),
])
def test_normalize_digits(raw, expected):
    assert normalize_digits(raw) == expected


@pytest.mark.parametrize("raw, kind, expected", [
    ("%^3", "first", None),
    ("O'Brien-Smith ", "last", "OBRIENSMITH"),
    ("josé", "first", "JOSE"),
    ("ABCDEFGHIJKLMNOP", "first", "ABCDEFGHIJKLMNO"),
    ("ABCDEFGHIJKLMNOP", "middle", "ABCDEFGHIJKLMNO"),
    ("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "last", "ABCDEFGHIJKLMNOPQRST"),
    ("St. John", "last", "STJOHN"),
    ("Müller", "last", "MULLER"),
    ("Søndergaard", "last", "SONDERGAARD"),
    ("Łukasz", "first", "LUKASZ"),
    ("Straße", "last", "STRASSE"),
    ("  ", "first", None),
])
def test_normalize_name(raw, kind, expected):
    assert normalize_name(raw, kind) == expected


def test_strip_happens_before_truncation():
    # 15 letters once the leading punctuation is gone
    assert normalize_name("...ABCDEFGHIJKLMNO", "first") == "ABCDEFGHIJKLMNO"


def test_diacritics_delete_mode():
    assert normalize_name("josé", "first", diacritics="delete") == "JOS"


@pytest.mark.parametrize("digits, reason", [
    ("666123456", "area-666"),
    ("000123456", "area-000"),
    ("912345678", "area-9xx"),
    ("123004567", "group-00"),
    ("123450000", "serial-0000"),
    ("123456789", "denylist"),
    ("012345678", "denylist"),
    ("888888888", "repeated-digit"),
    ("12345678", "length"),
    ("1234567890", "length"),
    (None, "length"),
    ("856123456", None),
])
def test_validate_ssn(digits, reason):
    assert validate_ssn(digits) == reason


def test_ssn_denylist_is_extensible():
    cfg = ValidityConfig(ssn_denylist={"856123456"})
    assert validate_ssn("856123456", cfg) == "denylist"
    # replacing the list drops the named defaults
    assert validate_ssn("123456789", cfg) is None


@pytest.mark.parametrize("digits, cfg, reason", [
    ("20081225", CFG_2022, None),
    ("18491231", CFG_2022, "year-below-min"),
    ("18500101", CFG_2022, None),
    ("20230101", CFG_2022, "year-above-max"),
    ("20221231", CFG_2022, None),
    ("20080230", CFG_2022, "day-out-of-range"),
    ("20080229", CFG_2022, None),
    ("19000229", CFG_2022, "day-out-of-range"),
    ("20001301", CFG_2022, "month-out-of-range"),
    ("20000001", CFG_2022, "month-out-of-range"),
    ("2008122", CFG_2022, "length"),
    ("20080230", STRICT, None),
    ("20231301", STRICT, "year-above-max"),
])
def test_validate_date(digits, cfg, reason):
    assert validate_date(digits, cfg) == reason


@settings(max_examples=500)
@given(st.integers(min_value=18000101, max_value=20301231).map(str))
def test_validate_date_matches_calendar_oracle(s):
    assert (validate_date(s, CFG_2022) is None) == oracles.date_is_valid(s, 1850, 2022)


def test_validity_config_rejects_inverted_years():
    with pytest.raises(ConfigError):
        ValidityConfig(min_year=2000, max_year=1999)


def test_default_max_year_is_current_year():
    import datetime as dt
    assert ValidityConfig().max_year == dt.date.today().year


@pytest.mark.parametrize("raw, order, expected", [
    ("05/07/1950", "MDY", "19500507"),
    ("5/7/1950", "MDY", "19500507"),
    ("07/05/1950", "DMY", "19500507"),
    ("05071950", "MDY", "19500507"),
    ("1950-05-07", "YMD", "19500507"),
    ("12/3/2007", "MDY", "20071203"),
    ("garbage", "MDY", None),
])
def test_normalize_date_orders(raw, order, expected):
    assert normalize_date(raw, order) == expected


def test_clean_record_statuses():
    rec = clean_record(RawRecord("x", first_name="Jhon", birth_date=None), CFG_2022)
    assert rec.first_name == "JHON" and rec.status["first_name"] is FieldStatus.VALID
    assert rec.birth_date is None and rec.status["birth_date"] is FieldStatus.MISSING

    rec = clean_record(RawRecord("x", first_name="%^3", birth_date="   ", ssn="999-99-9999"))
    assert rec.first_name is None and rec.status["first_name"] is FieldStatus.INVALID
    assert rec.status["birth_date"] is FieldStatus.MISSING
    assert rec.status["ssn"] is FieldStatus.INVALID


def test_clean_record_all_valid():
    raw = RawRecord("P1", "John", "Q", "Doe", "1950-05-07", "2001-02-03", "123-35-4789")
    rec = clean_record(raw, CFG_2022)
    assert all(rec.status[f] is FieldStatus.VALID for f in IDENTITY_FIELDS)
    assert rec == CleanRecord("P1", "JOHN", "Q", "DOE", "19500507", "20010203", "123354789",
                              status={f: FieldStatus.VALID for f in IDENTITY_FIELDS})


def test_both_datasets_share_one_path():
    """Same raw values under two ids clean identically (differential check)."""
    raws = [RawRecord("a", " josé ", "", "O'Neil", "2008/12/25", None, "123-35-4789"),
            RawRecord("b", "MARIA", "x", "Peña", "18491231", "2022-02-30", "666-12-3456")]
    for raw in raws:
        as_patient = clean_record(raw)
        as_external = clean_record(RawRecord("other", *[getattr(raw, f) for f in IDENTITY_FIELDS]))
        assert [getattr(as_patient, f) for f in IDENTITY_FIELDS] == \
               [getattr(as_external, f) for f in IDENTITY_FIELDS]
        assert as_patient.status == as_external.status


raw_text = st.one_of(st.none(), st.text(max_size=40),
                     st.binary(max_size=40).map(lambda b: b.decode("latin-1")))
raw_records = st.builds(RawRecord, st.just("r"), raw_text, raw_text, raw_text, raw_text,
                        raw_text, raw_text)

NAME_RE = {"first_name": re.compile(r"^[A-Z]{1,15}$"), "middle_name": re.compile(r"^[A-Z]{1,15}$"),
           "last_name": re.compile(r"^[A-Z]{1,20}$")}


@settings(max_examples=400)
@given(raw_records)
def test_clean_record_output_invariants(raw):
    rec = clean_record(raw, CFG_2022)
    for f in IDENTITY_FIELDS:
        value = getattr(rec, f)
        assert (value is not None) == (rec.status[f] is FieldStatus.VALID)
        if value is None:
            continue
        if f in NAME_RE:
            assert NAME_RE[f].match(value)
        elif f == "ssn":
            assert oracles.ssn_is_valid(value)
        else:
            assert len(value) == 8 and value.isdigit()
            assert oracles.date_is_valid(value, 1850, 2022)


@settings(max_examples=300)
@given(raw_records)
def test_clean_record_idempotent(raw):
    once = clean_record(raw, CFG_2022)
    twice = clean_record(once.as_raw(), CFG_2022)
    assert [getattr(once, f) for f in IDENTITY_FIELDS] == [getattr(twice, f) for f in IDENTITY_FIELDS]
    for f in IDENTITY_FIELDS:
        if once.status[f] is FieldStatus.VALID:
            assert twice.status[f] is FieldStatus.VALID


DEFAULT_SSN_PATTERNS = [
    "999-99-9999", "888-88-8888", "000-00-0000", "912-34-5678", "123-00-4567", "666-12-3456",
    "000-12-3456", "001-01-0001", "111-11-1111", "123-45-6789", "012-34-5678", "090-90-9090",
    "444-44-4444", "555-55-5555", "777-77-7777", "666-66-6666", "333-33-3333",
]


@pytest.mark.parametrize("ssn", DEFAULT_SSN_PATTERNS + ["123-45-0000"])
def test_breakdown_patterns_rejected(ssn):
    assert validate_ssn(normalize_digits(ssn)) is not None


def test_structural_ssns_match_rule_oracle():
    rng = random.Random(7)
    accepted = 0
    for _ in range(3000):
        s = "".join(rng.choice("0123456789") for _ in range(9))
        if rng.random() < 0.2:
            s = rng.choice(["000", "666", "9" + s[1:3]]) + s[3:]
        ok = validate_ssn(s) is None
        assert ok == oracles.ssn_is_valid(s), s
        accepted += ok
    assert accepted >= 100

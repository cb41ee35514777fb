"""Seeded synthetic patient / death-master pairs with a known truth map.

Errors are injected into the raw strings before normalization, independently
for each dataset. Error rates are keyed ``kind`` (applies to every eligible
field) or ``kind.field`` (overrides for one field)::

    {"null": 0.02, "null.middle_name": 0.5, "typo": 0.05, "date_swap": 0.01}

Kinds: null, invalid_ssn, typo, transposition, date_swap.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Union

from .ingest import RawRecord, serialize_records, standard_layout
from .normalize import IDENTITY_FIELDS, NAME_FIELDS, ConfigError, validate_ssn

GIVEN_NAMES = (
    "James", "Mary", "John", "Patricia", "Robert", "Jennifer", "Michael", "Linda", "William",
    "Elizabeth", "David", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah",
    "Charles", "Karen", "Christopher", "Nancy", "Daniel", "Lisa", "Matthew", "Betty", "Anthony",
    "Margaret", "Mark", "Sandra", "Donald", "Ashley", "Steven", "Kimberly", "Paul", "Emily",
    "Andrew", "Donna", "Joshua", "Michelle", "Kenneth", "Dorothy", "Kevin", "Carol", "Brian",
    "Amanda", "George", "Melissa", "Edward", "Deborah", "Ronald", "Stephanie", "Timothy",
    "Rebecca", "Jason", "Sharon", "Jeffrey", "Laura", "Ryan", "Cynthia", "Jacob", "Kathleen",
    "Gary", "Amy", "Nicholas", "Shirley", "Eric", "Angela", "Jonathan", "Helen", "Stephen",
    "Anna", "Larry", "Brenda", "Justin", "Pamela", "Scott", "Nicole", "Brandon", "Emma",
    "Benjamin", "Samantha", "Samuel", "Katherine", "Gregory", "Christine", "Frank", "Debra",
    "Alexander", "Rachel", "Raymond", "Catherine", "Patrick", "Carolyn", "Jack", "Janet",
    "Dennis", "Ruth", "Jerry", "Maria", "Tyler", "Heather", "Aaron", "Diane", "Jose", "Virginia",
    "Adam", "Julie", "Henry", "Joyce", "Nathan", "Victoria", "Douglas", "Olivia", "Zachary",
    "Kelly", "Peter", "Christina", "Kyle", "Lauren", "Walter", "Joan", "Ethan", "Evelyn",
    "Jeremy", "Judith", "Harold", "Megan", "Keith", "Cheryl", "Christian", "Andrea", "Roger",
    "Hannah", "Noah", "Martha", "Gerald", "Jacqueline", "Carl", "Frances", "Terry", "Gloria",
    "Sean", "Ann", "Austin", "Teresa", "Arthur", "Kathryn", "Lawrence", "Sara", "Jesse", "Janice",
    "Dylan", "Jean", "Bryan", "Alice", "Joe", "Madison", "Jordan", "Doris", "Billy", "Abigail",
    "Bruce", "Julia", "Albert", "Judy", "Willie", "Grace", "Gabriel", "Denise", "Logan", "Amber",
    "José", "María", "François", "Zoë", "Renée", "Björn", "Søren", "Jürgen", "Łukasz", "Dvořák",
    "Mei", "Wei", "Hiroshi", "Yuki", "Priya", "Arjun", "Aisha", "Mohammed", "Fatima", "Olúwadé",
    "Siobhán", "Niamh", "Giulia", "Matteo", "Ana-Lucía", "Jean-Luc", "Chloé", "Inés", "Raúl",
    "Nguyễn", "Thảo", "Sung-min", "Ji-woo", "Oksana", "Dmitri", "Agnieszka", "Göran", "Ørjan",
)

SURNAMES = (
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez",
    "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas", "Taylor",
    "Moore", "Jackson", "Martin", "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez",
    "Clark", "Ramirez", "Lewis", "Robinson", "Walker", "Young", "Allen", "King", "Wright",
    "Scott", "Torres", "Nguyen", "Hill", "Flores", "Green", "Adams", "Nelson", "Baker", "Hall",
    "Rivera", "Campbell", "Mitchell", "Carter", "Roberts", "Gomez", "Phillips", "Evans", "Turner",
    "Diaz", "Parker", "Cruz", "Edwards", "Collins", "Reyes", "Stewart", "Morris", "Morales",
    "Murphy", "Cook", "Rogers", "Gutierrez", "Ortiz", "Morgan", "Cooper", "Peterson", "Bailey",
    "Reed", "Kelly", "Howard", "Ramos", "Kim", "Cox", "Ward", "Richardson", "Watson", "Brooks",
    "Chavez", "Wood", "James", "Bennett", "Gray", "Mendoza", "Ruiz", "Hughes", "Price", "Alvarez",
    "Castillo", "Sanders", "Patel", "Myers", "Long", "Ross", "Foster", "Jimenez", "Powell",
    "Jenkins", "Perry", "Russell", "Sullivan", "Bell", "Coleman", "Butler", "Henderson", "Barnes",
    "Gonzales", "Fisher", "Vasquez", "Simmons", "Romero", "Jordan", "Patterson", "Alexander",
    "Hamilton", "Graham", "Reynolds", "Griffin", "Wallace", "Moreno", "West", "Cole", "Hayes",
    "Bryant", "Herrera", "Gibson", "Ellis", "Tran", "Medina", "Aguilar", "Stevens", "Murray",
    "Ford", "Castro", "Marshall", "Owens", "Harrison", "Fernandez", "McDonald", "Woods",
    "Washington", "Kennedy", "Wells", "Vargas", "Henry", "Chen", "Freeman", "Webb", "Tucker",
    "Guzman", "Burns", "Crawford", "Olson", "Simpson", "Porter", "Hunter", "Gordon", "Mendez",
    "Silva", "Shaw", "Snyder", "Mason", "Dixon", "Muñoz", "Hunt", "Hicks", "Holmes", "Palmer",
    "Wagner", "Black", "Robertson", "Boyd", "Rose", "Stone", "Salazar", "Fox", "Warren", "Mills",
    "O'Brien", "O'Connor", "McCarthy", "D'Angelo", "Van der Berg", "De la Cruz", "St. John",
    "Smith-Jones", "Müller", "Schröder", "Jäger", "Lefèvre", "Côté", "Peña", "Núñez", "Ibáñez",
    "Gonçalves", "Kowalczyk", "Wiśniewski", "Dvořáková", "Søndergaard", "Ångström", "Çelik",
    "Yılmaz", "Nakamura", "Takahashi", "Watanabe", "Zhang", "Wang", "Li", "Liu", "Huang",
    "Singh", "Kumar", "Sharma", "Okafor", "Adeyemi", "Haddad", "Khoury", "Cohen", "Levi",
)

ERROR_KINDS = ("null", "invalid_ssn", "typo", "transposition", "date_swap")
ERROR_FIELDS = {
    "null": IDENTITY_FIELDS,
    "invalid_ssn": ("ssn",),
    "typo": NAME_FIELDS + ("ssn",),
    "transposition": NAME_FIELDS + ("ssn",),
    "date_swap": ("birth_date", "death_date"),
}
DEFAULT_SSNS = ("999-99-9999", "888-88-8888", "000-00-0000", "123-45-6789", "111-11-1111")

_FIRST_DAY = dt.date(1900, 1, 1).toordinal()
_LAST_BIRTH = dt.date(2015, 12, 31).toordinal()
_LAST_DEATH = dt.date(2022, 12, 31).toordinal()


@dataclass(frozen=True)
class SynthConfig:
    n_persons: int
    overlap_fraction: float = 0.5
    seed: int = 0
    error_rates: Mapping[str, float] = field(default_factory=dict)
    dod_coverage: float = 1.0
    patient_dod_coverage: float = 0.5

    def __post_init__(self):
        if not isinstance(self.n_persons, int) or self.n_persons < 1:
            raise ConfigError(f"n_persons must be an integer >= 1, got {self.n_persons!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in ("overlap_fraction", "dod_coverage", "patient_dod_coverage"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        for key, rate in self.error_rates.items():
            kind, _, fname = key.partition(".")
            if kind not in ERROR_KINDS or (fname and fname not in ERROR_FIELDS[kind]):
                raise ConfigError(f"unknown error rate key {key!r}")
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"error rate {key} must be in [0, 1], got {rate}")

    def rate(self, kind: str, fname: str) -> float:
        return self.error_rates.get(f"{kind}.{fname}", self.error_rates.get(kind, 0.0))

    def to_dict(self) -> dict:
        return {
            "n_persons": self.n_persons,
            "overlap_fraction": self.overlap_fraction,
            "seed": self.seed,
            "error_rates": dict(sorted(self.error_rates.items())),
            "dod_coverage": self.dod_coverage,
            "patient_dod_coverage": self.patient_dod_coverage,
        }


@dataclass
class TruthMap:
    pairs: dict  # patient record_id -> external record_id
    patient_ids: frozenset = frozenset()
    external_ids: frozenset = frozenset()

    def __post_init__(self):
        if len(set(self.pairs.values())) != len(self.pairs):
            raise ValueError("truth map is not injective")


@dataclass(frozen=True)
class Person:
    first: str
    middle: str
    last: str
    dob: dt.date
    dod: dt.date
    ssn: str


def _random_ssn(rng: random.Random, used: set) -> str:
    while True:
        digits = f"{rng.randint(1, 899):03d}{rng.randint(1, 99):02d}{rng.randint(1, 9999):04d}"
        if digits not in used and validate_ssn(digits) is None:
            used.add(digits)
            return digits


def _person(rng: random.Random, used_ssns: set) -> Person:
    dob = rng.randint(_FIRST_DAY, _LAST_BIRTH)
    dod = rng.randint(dob, _LAST_DEATH)
    return Person(
        first=rng.choice(GIVEN_NAMES),
        middle=rng.choice(GIVEN_NAMES),
        last=rng.choice(SURNAMES),
        dob=dt.date.fromordinal(dob),
        dod=dt.date.fromordinal(dod),
        ssn=_random_ssn(rng, used_ssns),
    )


def _typo(rng: random.Random, text: str) -> str:
    positions = [i for i, ch in enumerate(text) if ch.isalnum()]
    if not positions:
        return text
    i = rng.choice(positions)
    pool = "0123456789" if text[i].isdigit() else "abcdefghijklmnopqrstuvwxyz"
    options = [c for c in pool if c != text[i].lower()]
    repl = rng.choice(options)
    if text[i].isupper():
        repl = repl.upper()
    return text[:i] + repl + text[i + 1:]


def _transpose(rng: random.Random, text: str) -> str:
    pairs = [i for i in range(len(text) - 1)
             if text[i].isalnum() and text[i + 1].isalnum() and text[i] != text[i + 1]]
    if not pairs:
        return text
    i = rng.choice(pairs)
    return text[:i] + text[i + 1] + text[i] + text[i + 2:]


def _render_name(rng: random.Random, name: str) -> str:
    style = rng.random()
    if style < 0.4:
        return name.upper()
    if style < 0.5:
        return name.lower()
    if style < 0.55:
        return f" {name} "
    return name


def _render_date(d: dt.date, style: str, swap: bool) -> str:
    month, day = (d.day, d.month) if swap else (d.month, d.day)
    if style == "patient":
        return f"{d.year:04d}-{month:02d}-{day:02d}"
    return f"{d.year:04d}{month:02d}{day:02d}"


def _render(rng: random.Random, person: Person, record_id: str, style: str, cfg: SynthConfig,
            has_dod: bool) -> RawRecord:
    canonical = {
        "first_name": person.first, "middle_name": person.middle, "last_name": person.last,
        "birth_date": person.dob, "death_date": person.dod if has_dod else None,
        "ssn": person.ssn,
    }
    values = {}
    for fname in IDENTITY_FIELDS:
        # one sub-stream per field keeps fields independent of each other's error draws
        local = random.Random(rng.getrandbits(64))
        value = canonical[fname]
        if value is None or local.random() < cfg.rate("null", fname):
            values[fname] = None
        elif fname in ("birth_date", "death_date"):
            values[fname] = _render_date(value, style, local.random() < cfg.rate("date_swap", fname))
        elif fname == "ssn" and local.random() < cfg.rate("invalid_ssn", "ssn"):
            values[fname] = local.choice(DEFAULT_SSNS)
        else:
            if local.random() < cfg.rate("typo", fname):
                value = _typo(local, value)
            if local.random() < cfg.rate("transposition", fname):
                value = _transpose(local, value)
            if fname == "ssn":
                values[fname] = f"{value[:3]}-{value[3:5]}-{value[5:]}" if style == "patient" else value
            else:
                values[fname] = _render_name(local, value)
    return RawRecord(record_id, **values)


def generate_population(cfg: SynthConfig):
    """Return ``(patients, external, truth)``; a pure function of ``cfg``.

    Overlap persons appear in both datasets; the remaining persons are
    split between patient-only and external-only. Every external record is
    a death-master row and reports a death date with probability
    ``dod_coverage``; patient records carry the same death date with
    probability ``patient_dod_coverage``.
    """
    rng = random.Random(cfg.seed)
    used_ssns = set()
    persons = [_person(rng, used_ssns) for _ in range(cfg.n_persons)]
    n_overlap = round(cfg.n_persons * cfg.overlap_fraction)
    rest = cfg.n_persons - n_overlap
    n_patient_only = (rest + 1) // 2
    patient_people = list(range(n_overlap + n_patient_only))
    external_people = list(range(n_overlap)) + list(range(n_overlap + n_patient_only, cfg.n_persons))
    rng.shuffle(patient_people)
    rng.shuffle(external_people)

    patients, external = [], []
    patient_of, external_of = {}, {}
    for i, p in enumerate(patient_people, start=1):
        rid = f"P{i:07d}"
        has_dod = rng.random() < cfg.patient_dod_coverage
        patients.append(_render(rng, persons[p], rid, "patient", cfg, has_dod))
        patient_of[p] = rid
    for i, p in enumerate(external_people, start=1):
        rid = f"E{i:07d}"
        has_dod = rng.random() < cfg.dod_coverage
        external.append(_render(rng, persons[p], rid, "external", cfg, has_dod))
        external_of[p] = rid
    pairs = {patient_of[p]: external_of[p] for p in range(n_overlap)}
    pairs = dict(sorted(pairs.items()))
    truth = TruthMap(pairs, frozenset(patient_of.values()), frozenset(external_of.values()))
    return patients, external, truth


@dataclass(frozen=True)
class Score:
    true_positive: int
    false_positive: int
    false_negative: int

    @property
    def precision(self) -> float:
        linked = self.true_positive + self.false_positive
        return self.true_positive / linked if linked else 1.0

    @property
    def recall(self) -> float:
        actual = self.true_positive + self.false_negative
        return self.true_positive / actual if actual else 1.0


def score_against_truth(rows: Iterable, truth: TruthMap) -> Score:
    """Count TP / FP / FN of LinkedRows against the truth map.

    A link is a true positive when it names the patient's true partner and
    a false positive otherwise. A truth pair is a false negative when its
    patient was not linked to the true partner.
    """
    tp = fp = 0
    for row in rows:
        if row.record_id not in truth.patient_ids:
            raise ValueError(f"unknown patient id {row.record_id!r}")
        if row.external_id is None:
            continue
        if row.external_id not in truth.external_ids:
            raise ValueError(f"unknown external id {row.external_id!r}")
        if truth.pairs.get(row.record_id) == row.external_id:
            tp += 1
        else:
            fp += 1
    return Score(tp, fp, len(truth.pairs) - tp)


def write_dataset(path: Union[str, Path], records: Iterable[RawRecord]) -> None:
    Path(path).write_bytes(serialize_records(standard_layout(), records))


def truth_csv(truth: TruthMap) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("patient_id", "external_id"))
    writer.writerows(truth.pairs.items())
    return buf.getvalue()


def write_truth(path: Union[str, Path], truth: TruthMap) -> None:
    Path(path).write_text(truth_csv(truth), encoding="utf-8")


def read_truth(path: Union[str, Path], patient_ids=(), external_ids=()) -> TruthMap:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        pairs = {p: e for p, e in reader}
    return TruthMap(pairs, frozenset(patient_ids) or frozenset(pairs),
                    frozenset(external_ids) or frozenset(pairs.values()))

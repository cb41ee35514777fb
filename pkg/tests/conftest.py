import pytest

from deathlink.ingest import RawRecord
from deathlink.linker import ValidationStats

# (token_id, one_to_one, dod_match, dod_nonmatch, printed rate %) in printed order
PUBLISHED_STATS = [
    (7, 1081, 920, 161, 85.1),
    (1, 1074, 914, 160, 85.1),
    (5, 1103, 938, 165, 85.0),
    (9, 1170, 986, 184, 84.3),
    (15, 1260, 1039, 221, 82.5),
    (2, 3232, 2647, 585, 81.9),
    (4, 3296, 2696, 600, 81.8),
    (3, 4084, 3292, 792, 80.6),
    (11, 3847, 2972, 875, 77.3),
    (6, 4445, 3398, 1047, 76.4),
    (13, 4240, 3206, 1034, 75.6),
    (17, 4821, 3098, 1723, 64.3),
    (14, 5198, 3249, 1949, 62.5),
    (10, 1572, 934, 638, 59.4),
    (8, 7611, 2636, 4975, 34.6),
    (12, 2325, 767, 1558, 33.0),
    (16, 2592, 760, 1832, 29.3),
    (19, 427, 56, 371, 13.1),
    (18, 521, 66, 455, 12.7),
    (20, 79, 4, 75, 5.1),
]


@pytest.fixture
def published_stats():
    return [ValidationStats(t, n, m, x) for t, n, m, x, _ in PUBLISHED_STATS]


@pytest.fixture
def five_person_records():
    """Five persons: first name and MM/DD/YYYY date of birth."""
    rows = [
        ("1", "Jhon", None),
        ("2", "Arthur", "05/07/1950"),
        ("3", "Anna", "05/07/1950"),
        ("4", "%^3", "08/08/1997"),
        ("5", "Jhon", "02/03/1990"),
    ]
    return [RawRecord(rid, first_name=fn, birth_date=dob) for rid, fn, dob in rows]


@pytest.fixture
def small_linkage_raw():
    """Patients 1001-1003 and a small death master, built so that each
    patient's first 1-to-1 token under the published priority is the one
    shown in the linked-death illustration (tokens 1, 6 and 8)."""
    patients = [
        RawRecord("1001", "John", "Quincy", "Public", "1930-01-01", None, "123-35-4789"),
        RawRecord("1002", "Marie", "Ann", "Smith", "1940-02-03", "2007-12-03", "234-56-7890"),
        RawRecord("1003", "Alice", "May", "Baker", "1950-03-03", None, "456-78-8912"),
    ]
    external = [
        RawRecord("E1", "JOHN", "QUINCY", "PUBLIC", "19300101", "19930717", "123354789"),
        # shares last-4 + names + DoB with E1, so token 7 is not unique for 1001
        RawRecord("E4", "JOHN", "QUINCY", "PUBLIC", "19300101", "19990101", "223454789"),
        RawRecord("E2", "MARY", "ANN", "SMITH", "19400202", "20071207", "234567890"),
        RawRecord("E3", "ROBERT", "LEE", "JONES", "19500303", "20210405", "345678912"),
    ]
    return patients, external


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    prev = _criteria.get(number)
    duration = call.duration + (prev[2] if prev else 0.0)
    detail = dict(item.user_properties).get("detail", f"{duration:.2f} s")
    _criteria[number] = (title, ok and (prev is None or prev[1]), detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, detail = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title} ({detail})")

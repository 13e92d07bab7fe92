import numpy as np
import pytest

from affectreg import lexfeat
from affectreg.synthetic import write_toy_lexicons


@pytest.fixture
def lexicon_files(tmp_path):
    return write_toy_lexicons(tmp_path / "lexicons")


@pytest.fixture
def toy_lexicons(lexicon_files):
    return lexfeat.load_lexicons(**lexicon_files)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: one line per criterion, whatever the capture mode
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _CRITERIA.setdefault(mark.args[0], [mark.args[1], []])
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[number][1].append("skipped" if report.skipped else report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcomes = _CRITERIA[number]
        if not outcomes:
            status = "NOT RUN"
        elif "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "UNVERIFIED (skipped)"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {number:>2}: {status:<20} {title}")

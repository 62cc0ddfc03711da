import random

import pytest
from hypothesis import settings

from jsblock.fixtures import fixture_path
from jsblock.filters import parse_list

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def fixture_filters():
    return parse_list(fixture_path("filters.txt").read_text(encoding="utf-8"), "filters.txt")


_CRITERIA: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    # A criterion passes only if setup, call and teardown all pass.
    for key, number in report.user_properties:
        if key == "criterion":
            _CRITERIA[number] = _CRITERIA.get(number, True) and not report.failed


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if _CRITERIA[number] else 'FAIL'}")

import sys
import time
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

FIXTURES = TESTS / "fixtures"

_ACCEPTANCE_KEY = pytest.StashKey[list]()
_STARTED_KEY = pytest.StashKey[float]()


def pytest_configure(config):
    config.stash[_STARTED_KEY] = time.monotonic()
    config.stash[_ACCEPTANCE_KEY] = []


def pytest_collection_modifyitems(config, items):
    # the acceptance suite runs last so its wall-clock criterion sees the whole run
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def session_elapsed(request):
    return lambda: time.monotonic() - request.config.stash[_STARTED_KEY]


@pytest.fixture
def criterion(request):
    """``criterion(name, ok, detail)``: print one PASS/FAIL line, then assert."""

    def report(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        print(line)
        request.config.stash[_ACCEPTANCE_KEY].append(line)
        assert ok, line

    return report


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def fixture_corpus():
    return FIXTURES / "corpus.jsonl"

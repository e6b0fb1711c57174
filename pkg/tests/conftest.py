import functools

import pytest

from frontlab.gallery import gallery_surface
from frontlab.singular import analyze


@functools.lru_cache(maxsize=None)
def surface(name):
    return gallery_surface(name)


@functools.lru_cache(maxsize=None)
def singular_set(name, n=129):
    return analyze(surface(name), n)


@pytest.fixture(scope="session")
def surf():
    return surface


@pytest.fixture(scope="session")
def sset():
    return singular_set


ACCEPTANCE_LINES = []


def acceptance_line(number, text, ok):
    """Print and record one PASS/FAIL line of the acceptance suite."""
    line = "%s criterion %d: %s" % ("PASS" if ok else "FAIL", number, text)
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import random

import pytest

from zkpodi.algebra import CircuitParams
from zkpodi.authority import issue_orthonym, issue_pseudonyms, lea_init

DEFAULT = CircuitParams(4, 8, 1)


class Fleet:
    """A seeded LEA plus helpers to provision vehicles against it."""

    def __init__(self, params_list, seed):
        self.rng = random.Random(seed)
        self.lea = lea_init(params_list, self.rng)
        self._n = 0

    def keys(self, params):
        return self.lea.keys(params)

    def vehicle(self, params, count=1):
        self._n += 1
        s = issue_orthonym(self.lea, f"car-{self._n}", params, self.rng)
        return s, issue_pseudonyms(self.lea, s, count, params, self.rng)


@pytest.fixture(scope="session")
def fleet():
    return Fleet([DEFAULT, CircuitParams(4, 8, 3), CircuitParams(2, 2, 1)], seed=2024)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number, name, ok, detail=""):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})"
        print(line)
        request.config.stash.setdefault(ACCEPTANCE, []).append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

import itertools

import numpy as np
import pytest


def enumerate_union_of_products(k):
    """Literal evaluation of the constraint and weight, variables numbered from 1."""
    n = 3 * k + 1
    table = {}
    for bits in itertools.product((0, 1), repeat=n):
        s = dict(zip(range(1, n + 1), bits))
        sat = all(s[3 * k + 1] or s[i] for i in range(1, 2 * k + 1)) and all(
            (not s[3 * k + 1]) or s[i] for i in range(2 * k + 1, 3 * k + 1)
        )
        if sat:
            w = 1
            for i in range(2 * k + 1, 3 * k + 1):
                w *= 3 ** s[i]
            table["".join(map(str, bits))] = w
    z = sum(table.values())
    return {key: w / z for key, w in table.items()}, z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# outcome lines for the acceptance suite, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])

import math

import numpy as np
import pytest

from qwscatter import CoinField, make_coin

SQ = 1 / math.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hadamard():
    return make_coin(SQ, SQ, SQ, -SQ)


@pytest.fixture
def double_hadamard(hadamard):
    return CoinField.double_barrier(hadamard, hadamard, 2)


ACCEPTANCE = {}


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> str:
    """Store and print one result line for an acceptance criterion."""
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

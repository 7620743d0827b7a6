import math

import numpy as np
import pytest

from telepovm.protocol import Channel, Payload

# (0.7, 0.5, 0.4, sqrt(0.1)): smallest coefficient squared is 0.1, so p = 0.4
SKEWED = (0.7, 0.5, 0.4, math.sqrt(0.10))
UNIFORM = (0.5, 0.5, 0.5, 0.5)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def skewed():
    return Channel(*SKEWED)


@pytest.fixture
def uniform():
    return Channel(*UNIFORM)


def random_pairs(n, seed=7):
    """n (payload, channel) pairs drawn from a fixed stream."""
    g = np.random.default_rng(seed)
    return [(Payload.haar(g), Channel.random(g)) for _ in range(n)]


def basis_payloads():
    return [Payload(*np.eye(4)[k]) for k in range(4)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

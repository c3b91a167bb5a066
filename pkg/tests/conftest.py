import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qkd_rotsym.channel import random_channel

seeds = st.integers(min_value=0, max_value=2**32 - 1)
kraus_counts = st.integers(min_value=1, max_value=4)
thetas = st.floats(min_value=0.05, max_value=math.pi / 2)
angles = st.floats(min_value=-math.pi, max_value=math.pi)


def complex_matrices(n=2):
    parts = st.floats(min_value=-1, max_value=1, allow_nan=False)
    return st.lists(parts, min_size=2 * n * n, max_size=2 * n * n).map(
        lambda xs: (np.array(xs[: n * n]) + 1j * np.array(xs[n * n:])).reshape(n, n)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[(11, 1), (12, 2), (13, 3), (14, 4)], ids=lambda p: f"seed{p[0]}-k{p[1]}")
def some_channel(request):
    return random_channel(*request.param)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

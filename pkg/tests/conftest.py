import numpy as np
import pytest
from hypothesis import strategies as st

from biququart.states import QuquartState


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_state(rng) -> QuquartState:
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    return QuquartState.from_amplitudes(v)


finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
amplitude_vectors = st.lists(st.tuples(finite, finite), min_size=4, max_size=4).map(
    lambda xs: np.array([complex(a, b) for a, b in xs])
).filter(lambda v: np.linalg.norm(v) > 1e-3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from stabcert.pauli import PauliOperator

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@st.composite
def paulis(draw, n=None, max_n=6):
    if n is None:
        n = draw(st.integers(1, max_n))
    x = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    z = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    phase = draw(st.integers(0, 3))
    return PauliOperator.from_bits(x, z, phase)


@st.composite
def pauli_pairs(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    return draw(paulis(n=n)), draw(paulis(n=n))


@st.composite
def pauli_triples(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    return draw(paulis(n=n)), draw(paulis(n=n)), draw(paulis(n=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)

import pytest
from hypothesis import settings

from srlp_lab import corpus, make_walk

settings.register_profile("default", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("default")

# filled by the acceptance module, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line[1])


@pytest.fixture(scope="session")
def walks():
    return corpus.corpus_walks()


@pytest.fixture(scope="session")
def symmetric_hold():
    return corpus.builtin_walk("symmetric_hold")


@pytest.fixture(scope="session")
def periodic():
    return corpus.builtin_walk("periodic")


@pytest.fixture(scope="session")
def drift_out():
    return corpus.builtin_walk("drift_out")


@pytest.fixture(scope="session")
def edge_recurrent():
    return corpus.edge_recurrent_walk()


def constant(p, r, q):
    return make_walk({"family": "constant", "tail": [p, r, q]})


def tabular(prefix, tail):
    return make_walk({"family": "tabular_with_constant_tail", "prefix": prefix, "tail": tail})

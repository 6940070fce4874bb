import numpy as np
import pytest

from vitalsig.synthgen import synth_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """The 4-session synthetic corpus, generated once per test run."""
    out = tmp_path_factory.mktemp("corpus")
    synth_corpus(out, n_sessions=4, seed=0)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

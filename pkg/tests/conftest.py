import numpy as np
import pytest
import scipy.sparse as sp

from polyglot_id.corpus import load_tag_map
from polyglot_id.features import FeatureMatrix
from polyglot_id.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="session")
def tag_map():
    return load_tag_map()


@pytest.fixture(scope="session")
def small_corpus(tag_map):
    """Four languages, 40 questions each; quick to train on."""
    cfg = SynthConfig(languages=("go", "java", "python", "sql"), per_language=40, seed=11)
    return generate_corpus(cfg, tag_map)


@pytest.fixture(scope="session")
def default_corpus(tag_map):
    return generate_corpus(SynthConfig(), tag_map)


@pytest.fixture
def separable_1d():
    """Class A (code 0) at 0.0 and 0.1, class B (code 1) at 1.0 and 1.1."""
    X = sp.csr_matrix(np.array([[0.0], [0.1], [1.0], [1.1]]))
    return FeatureMatrix(X, np.array([0, 0, 1, 1]))


def random_matrix(rng, n_rows, n_cols, n_classes, density=0.3):
    X = sp.random(n_rows, n_cols, density=density, random_state=rng,
                  data_rvs=lambda k: rng.random(k), format="csr")
    labels = rng.integers(0, n_classes, size=n_rows)
    # make sure every class is present
    labels[:n_classes] = np.arange(n_classes)
    return FeatureMatrix(X, labels)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)

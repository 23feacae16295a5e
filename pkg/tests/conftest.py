import numpy as np
import pytest

from streamctc import Alphabet, EmissionMatrix


def random_emissions(rng: np.random.Generator, alphabet: Alphabet,
                     num_frames: int) -> EmissionMatrix:
    """Row-stochastic Dirichlet rows; strictly positive entries."""
    rows = rng.dirichlet(np.ones(alphabet.size), size=num_frames)
    return EmissionMatrix(alphabet, rows)


def one_hot_emissions(alphabet: Alphabet, labels) -> EmissionMatrix:
    """Certainty emissions along a label path ('-' means blank)."""
    rows = np.zeros((len(labels), alphabet.size))
    for t, label in enumerate(labels):
        idx = alphabet.blank_index if label == "-" else alphabet.index_of(label)
        rows[t, idx] = 1.0
    return EmissionMatrix(alphabet, rows)


@pytest.fixture
def ab_alphabet():
    return Alphabet("ab")

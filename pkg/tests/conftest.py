import numpy as np
import pytest

from streamgda import ClassTextEmbeddings, MixtureState, refactor


def random_spd(dim, rng, scale=1.0):
    """Well-conditioned random SPD matrix."""
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T / dim + np.eye(dim))


def make_state(means, covariance, soft_counts=None, weighted_total=None,
               ridge_epsilon=1e-4):
    """Assemble a state directly from parameters and factorize it."""
    means = np.asarray(means, dtype=np.float64)
    k = means.shape[0]
    counts = np.full(k, 1.0 / k) if soft_counts is None else np.asarray(soft_counts, float)
    state = MixtureState(
        means=means.copy(),
        soft_counts=counts.copy(),
        priors=counts / counts.sum(),
        covariance=np.asfortranarray(np.asarray(covariance, dtype=np.float64)),
        weighted_total=float(counts.sum() if weighted_total is None else weighted_total),
        ridge_epsilon=ridge_epsilon,
    )
    refactor(state)
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def simple_text():
    return ClassTextEmbeddings(
        embeddings=np.array([[1.0, 0.0], [0.0, 1.0]]),
        class_names=["a", "b"],
    )

import numpy as np
import pytest
from numpy.testing import assert_allclose

from streamgda import (
    AdaptConfig,
    InvalidInput,
    SyntheticSpec,
    batch_em,
    e_step,
    generate_synthetic,
    init_state,
    weighted_m_step,
)


def test_batch_em_recovers_separated_mixture(rng):
    n = 1500
    labels = rng.integers(0, 2, size=n)
    centers = np.array([[3.0, 0.0], [-3.0, 0.0]])
    x = centers[labels] + rng.standard_normal((n, 2))
    result = batch_em(x, np.array([[1.0, 0.0], [-1.0, 0.0]]))
    assert result.converged
    assert_allclose(result.means, centers, atol=0.15)
    assert_allclose(result.priors, [0.5, 0.5], atol=0.05)
    assert_allclose(result.covariance, np.eye(2), atol=0.15)


def test_batch_em_loglik_monotone_to_convergence(rng):
    x = rng.standard_normal((400, 3)) + np.array([1.0, 0.0, 0.0])
    lls = []
    for iters in (1, 2, 5, 20):
        r = batch_em(x, np.eye(3)[:2], max_iterations=iters)
        lls.append(r.log_likelihood)
    assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))


def test_single_cluster_means_collapse_to_sample_mean(rng):
    # identical initial means keep the responsibilities symmetric, so both
    # class means track the overall running mean
    center = np.array([0.6, -0.2])
    n = 4000
    x = center + 0.5 * rng.standard_normal((n, 2))
    init = np.array([center, center])

    batch = batch_em(x, init)
    sample_mean = x.mean(axis=0)
    assert_allclose(batch.means[0], sample_mean, atol=1e-3)
    assert_allclose(batch.means[1], sample_mean, atol=1e-3)

    from conftest import make_state

    state = make_state(init, np.eye(2))
    for row in x:
        gamma = e_step(state, row)
        weighted_m_step(state, row, gamma, 1.0)
    assert_allclose(state.means[0], sample_mean, atol=1e-3)
    assert_allclose(state.means[1], sample_mean, atol=1e-3)


def test_batch_em_rejects_single_class(rng):
    with pytest.raises(InvalidInput):
        batch_em(rng.standard_normal((50, 2)), np.array([[0.0, 0.0]]))


def test_nonconvergence_reported_not_raised(rng):
    x = rng.standard_normal((300, 2))
    r = batch_em(x, np.array([[0.5, 0.0], [-0.5, 0.0]]), max_iterations=2)
    assert not r.converged
    assert r.iterations == 2

"""Full-dataset EM reference used to validate the online recursion.

Deliberately independent of the streaming implementation: densities are
evaluated with explicit log-determinants and LU solves instead of the
engine's Cholesky machinery, and parameters are refit from all samples at
once every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass
class BatchEMResult:
    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool


def _log_densities(features, means, covariance):
    n, d = features.shape
    sign, logdet = np.linalg.slogdet(covariance)
    if sign <= 0:
        raise InvalidInput("covariance lost positive definiteness during batch EM")
    inv = np.linalg.inv(covariance)
    out = np.empty((n, means.shape[0]))
    for y in range(means.shape[0]):
        diff = features - means[y]
        out[:, y] = np.einsum("ij,jk,ik->i", diff, inv, diff)
    return -0.5 * (out + d * np.log(2.0 * np.pi) + logdet)


def batch_em(
    features: np.ndarray,
    init_means: np.ndarray,
    max_iterations: int = 500,
    tolerance: float = 1e-8,
) -> BatchEMResult:
    """Fit a shared-covariance Gaussian mixture by batch EM.

    Starts from the given means, identity covariance and uniform priors.
    Stops when the relative log-likelihood change drops below ``tolerance``
    or after ``max_iterations``; non-convergence is reported, not raised.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInput("features must be an n x d matrix")
    n, d = x.shape
    means = np.asarray(init_means, dtype=np.float64).copy()
    k = means.shape[0]
    if k < 2:
        raise InvalidInput(f"need at least 2 classes, got {k}")

    covariance = np.eye(d)
    priors = np.full(k, 1.0 / k)

    prev_ll = -np.inf
    ll = prev_ll
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        scores = _log_densities(x, means, covariance) + np.log(priors)
        top = scores.max(axis=1, keepdims=True)
        gamma = np.exp(scores - top)
        row_sums = gamma.sum(axis=1, keepdims=True)
        ll = float((top[:, 0] + np.log(row_sums[:, 0])).sum())
        gamma /= row_sums

        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= tolerance * max(1.0, abs(prev_ll)):
            converged = True
            break
        prev_ll = ll

        mass = gamma.sum(axis=0)
        priors = mass / n
        means = (gamma.T @ x) / mass[:, None]
        covariance = np.zeros((d, d))
        for y in range(k):
            diff = x - means[y]
            covariance += (diff * gamma[:, y : y + 1]).T @ diff
        covariance /= max(n - 1, 1)

    return BatchEMResult(
        means=means,
        covariance=covariance,
        priors=priors,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
    )

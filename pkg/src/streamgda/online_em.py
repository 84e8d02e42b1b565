"""Single-sample EM: posterior responsibilities and confidence-weighted updates.

All operations mutate and return the passed state; one sample at a time,
in stream order. The posterior is computed in log space so the shared
normalization constant of the class densities cancels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dgemm
from scipy.special import xlogy

from .errors import InvalidInput
from .state import AdaptConfig, MixtureState, _half_solve, _maintained_factor


@dataclass
class Posterior:
    """Per-class responsibilities for one sample; entries sum to one."""

    gamma: np.ndarray


@dataclass
class UpdateTrace:
    """Bookkeeping for one update: the applied weight and total-mass change."""

    sample_weight: float
    gamma: Posterior
    pre_total: float
    post_total: float


def self_entropy(probs) -> float:
    """Shannon entropy in nats, with 0*log(0) taken as 0."""
    p = np.asarray(probs, dtype=np.float64)
    return float(-xlogy(p, p).sum())


def entropy_weight(entropy: float, beta: float) -> float:
    """Confidence weight exp(-beta * entropy); 1 at zero entropy."""
    return float(np.exp(-beta * entropy))


def _checked_feature(state, feature):
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (state.dim,):
        raise InvalidInput(f"feature shape {x.shape} does not match dimension {state.dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("feature contains non-finite entries")
    return x


def _posterior_core(state, x):
    factor = _maintained_factor(state)
    # (x-mu)^T Sigma^-1 (x-mu) = ||L^-1 (x-mu)||^2 for Sigma = L L^T
    half = _half_solve(factor, (state.means - x).T)
    mahalanobis = np.einsum("ij,ij->j", half, half)

    scores = np.log(state.priors) - 0.5 * mahalanobis
    scores -= scores.max()
    gamma = np.exp(scores)
    gamma /= gamma.sum()
    return gamma


def e_step(state: MixtureState, feature: np.ndarray) -> Posterior:
    """Responsibilities gamma_y = softmax_y(log prior_y - 0.5 * Mahalanobis_y).

    Uses the maintained Cholesky factor, refreshing it at the state's
    ``refactor_interval`` cadence; between refreshes a factor at most one
    interval old serves the adaptation loop. Prediction-path solves always
    reflect the current covariance instead.
    """
    return Posterior(gamma=_posterior_core(state, _checked_feature(state, feature)))


def weighted_m_step(
    state: MixtureState,
    feature: np.ndarray,
    gamma: Posterior,
    sample_weight: float,
) -> tuple[MixtureState, UpdateTrace]:
    """Apply one weighted update to counts, means, priors and covariance.

    With w the sample weight and g the responsibilities:
      mean_y   <- (N_y * mean_y + w*g_y * x) / (N_y + w*g_y)
      N_y      <- N_y + w*g_y
      cov      <- ((n-1)*cov + w * sum_y g_y (x-mean_y')(x-mean_y')^T) / max(n+w-1, 1)
      total n  <- n + w
      prior_y  <- N_y / sum_j N_j
    where n is the pre-update weighted total and the new means enter the
    outer products. The factorization is left stale (refresh is on demand).
    """
    if sample_weight <= 0.0:
        raise InvalidInput(f"sample_weight must be positive, got {sample_weight}")
    x = np.asarray(feature, dtype=np.float64)
    g = np.asarray(gamma.gamma, dtype=np.float64)
    if g.shape != (state.num_classes,):
        raise InvalidInput("gamma has wrong number of classes")
    if g.min() < -1e-12 or abs(g.sum() - 1.0) > 1e-6:
        raise InvalidInput("gamma is not a valid distribution")

    pre_total = _apply_update(state, x, g, sample_weight)
    trace = UpdateTrace(
        sample_weight=sample_weight,
        gamma=Posterior(gamma=g),
        pre_total=pre_total,
        post_total=state.weighted_total,
    )
    return state, trace


def _apply_update(state, x, g, sample_weight):
    """The update arithmetic shared by the public entry points."""
    pre_total = state.weighted_total
    wg = sample_weight * g

    counts_new = state.soft_counts + wg
    state.means *= (state.soft_counts / counts_new)[:, None]
    state.means += (wg / counts_new)[:, None] * x
    state.soft_counts = counts_new
    state.priors = counts_new / counts_new.sum()

    residuals = x - state.means
    weighted = residuals * np.sqrt(wg)[:, None]
    numer_coeff = pre_total - 1.0
    denom = max(pre_total + sample_weight - 1.0, 1.0)
    state.covariance *= numer_coeff / denom
    # rank-K accumulation cov += W^T W / denom without a temporary
    state.covariance = dgemm(
        1.0 / denom,
        weighted.T,
        weighted,
        beta=1.0,
        c=state.covariance,
        overwrite_c=1,
    )
    state.weighted_total = pre_total + sample_weight
    state.updates_since_refactor += 1
    state._covariance_version += 1
    return pre_total


def adapt_step(
    state: MixtureState,
    feature: np.ndarray,
    zero_shot_probs: np.ndarray,
    config: AdaptConfig,
    update_means: bool = True,
    update_covariance: bool = True,
) -> tuple[MixtureState, Posterior, UpdateTrace]:
    """One full adaptation step: entropy weight, E-step, weighted M-step.

    ``update_means`` / ``update_covariance`` exist for ablation runs; both
    default on. With adaptation disabled the state is returned untouched
    together with the posterior and a zero-effect trace.
    """
    probs = np.asarray(zero_shot_probs, dtype=np.float64)
    if probs.min() < -1e-12 or abs(probs.sum() - 1.0) > 1e-6:
        raise InvalidInput("zero_shot_probs is not a valid distribution")

    x = _checked_feature(state, feature)

    # with every adaptive branch frozen there is nothing left to update
    if not config.adaptation_enabled or not (update_means or update_covariance):
        gamma = Posterior(gamma=_posterior_core(state, x))
        trace = UpdateTrace(
            sample_weight=0.0,
            gamma=gamma,
            pre_total=state.weighted_total,
            post_total=state.weighted_total,
        )
        return state, gamma, trace

    weight = entropy_weight(self_entropy(probs), config.beta)
    g = _posterior_core(state, x)
    gamma = Posterior(gamma=g)

    if update_means and update_covariance:
        pre_total = _apply_update(state, x, g, weight)
        trace = UpdateTrace(
            sample_weight=weight,
            gamma=gamma,
            pre_total=pre_total,
            post_total=state.weighted_total,
        )
        return state, gamma, trace
    return _ablated_m_step(state, x, gamma, weight, update_means, update_covariance)


def _ablated_m_step(state, feature, gamma, sample_weight, update_means, update_covariance):
    """M-step variant with the mean or covariance branch switched off."""
    x = np.asarray(feature, dtype=np.float64)
    g = gamma.gamma
    pre_total = state.weighted_total
    wg = sample_weight * g

    counts_new = state.soft_counts + wg
    if update_means:
        state.means *= (state.soft_counts / counts_new)[:, None]
        state.means += (wg / counts_new)[:, None] * x
    if update_covariance:
        residuals = x - state.means
        weighted = residuals * np.sqrt(wg)[:, None]
        denom = max(pre_total + sample_weight - 1.0, 1.0)
        state.covariance *= (pre_total - 1.0) / denom
        state.covariance = dgemm(
            1.0 / denom, weighted.T, weighted, beta=1.0, c=state.covariance, overwrite_c=1
        )
        state.updates_since_refactor += 1
        state._covariance_version += 1
    state.soft_counts = counts_new
    state.priors = counts_new / counts_new.sum()
    state.weighted_total = pre_total + sample_weight

    trace = UpdateTrace(
        sample_weight=sample_weight,
        gamma=Posterior(gamma=g),
        pre_total=pre_total,
        post_total=state.weighted_total,
    )
    return state, gamma, trace

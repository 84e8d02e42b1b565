"""Prediction: zero-shot probabilities, the generative linear discriminant,
and the fused decision rule.

All functions here are pure with respect to the logical state; prediction
may refresh the cached covariance factor but never changes means, counts,
priors or the covariance itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dtrsv

from .errors import InvalidInput
from .online_em import Posterior, entropy_weight, self_entropy
from .state import (
    AdaptConfig,
    ClassTextEmbeddings,
    MixtureState,
    _fresh_factor,
    _half_solve,
    _maintained_factor,
)

__all__ = [
    "PredictionOutcome",
    "zero_shot_probs",
    "self_entropy",
    "generative_logits",
    "fused_predict",
]


@dataclass
class PredictionOutcome:
    """Everything computed for one sample's prediction."""

    zero_shot_probs: np.ndarray
    self_entropy: float
    posterior: Posterior
    fused_logits: np.ndarray
    predicted_class: int
    sample_weight: float


def _softmax(scores):
    z = scores - scores.max()
    e = np.exp(z)
    return e / e.sum()


def _check_feature(feature, dim):
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (dim,):
        raise InvalidInput(f"feature shape {x.shape} does not match dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("feature contains non-finite entries")
    return x


def zero_shot_probs(
    feature: np.ndarray, text_embeddings: ClassTextEmbeddings, temperature: float
) -> np.ndarray:
    """Softmax over temperature-scaled cosine similarities to the class texts.

    Features and text rows are expected unit-normalized upstream, so the
    cosine reduces to a dot product.
    """
    if temperature <= 0:
        raise InvalidInput("temperature must be > 0")
    x = _check_feature(feature, text_embeddings.dim)
    return _softmax(temperature * (text_embeddings.embeddings @ x))


def _generative_core(state, x, factor=None):
    if factor is None:
        factor = _fresh_factor(state)
    # w_y.x = (L^-1 mu_y).(L^-1 x), so one half-solve per side suffices
    half_means = _half_solve(factor, state.means.T)
    half_x = dtrsv(factor, x, lower=1)
    bias = np.log(state.priors) - 0.5 * np.einsum("ij,ij->j", half_means, half_means)
    return half_x @ half_means + bias


def generative_logits(state: MixtureState, feature: np.ndarray) -> np.ndarray:
    """Linear discriminant scores w_y.x + b_y from the current mixture.

    w_y = Sigma_reg^-1 mu_y and b_y = log prior_y - 0.5 * mu_y.w_y, so the
    softmax of these logits equals the E-step posterior (the shared
    -0.5 * x^T Sigma^-1 x term cancels).
    """
    return _generative_core(state, _check_feature(feature, state.dim))


def fused_predict(
    state: MixtureState,
    feature: np.ndarray,
    text_embeddings: ClassTextEmbeddings,
    config: AdaptConfig,
) -> PredictionOutcome:
    """Fuse raw cosine similarity with the weighted generative discriminant.

    fused_y = F.T_y + alpha * (w_y.F + b_y). The temperature applies only
    to the probability path used for entropy and the sample weight; the
    fusion term keeps the raw cosine. Ties break to the lowest class index.
    """
    x = _check_feature(feature, state.dim)
    if text_embeddings.dim != state.dim or text_embeddings.num_classes != state.num_classes:
        raise InvalidInput("text embeddings do not match state dimensions")

    cosines = text_embeddings.embeddings @ x
    probs = _softmax(config.zero_shot_temperature * cosines)
    entropy = self_entropy(probs)
    weight = entropy_weight(entropy, config.beta)

    factor = _maintained_factor(state) if config.stale_prediction_factor else None
    gen = _generative_core(state, x, factor)
    fused = cosines + config.alpha * gen
    return PredictionOutcome(
        zero_shot_probs=probs,
        self_entropy=entropy,
        posterior=Posterior(gamma=_softmax(gen)),
        fused_logits=fused,
        predicted_class=int(np.argmax(fused)),
        sample_weight=weight,
    )

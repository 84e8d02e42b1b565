"""Gaussian discriminant state: means, priors, counts, shared covariance.

The shared covariance is accumulated densely in double precision. Solves
go through a lower-triangular Cholesky factor of the regularized matrix
``cov + eps * (trace(cov)/d) * I``; the factor is refreshed from scratch
on demand rather than updated incrementally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.blas import dtrsm, dtrsv
from scipy.linalg.lapack import dpotrf

from .errors import InvalidInput, NumericalBreakdown

DEFAULT_RIDGE_EPSILON = 1e-4


def unit_normalize(x, axis=-1):
    """Scale vectors to unit Euclidean norm. Zero vectors are left unchanged."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=axis, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return x / safe


@dataclass
class EmbeddingRecord:
    """One streamed feature vector, optionally carrying a ground-truth label.

    Labels are for evaluation only; adaptation never reads them.
    """

    feature: np.ndarray
    label: int | None = None


@dataclass
class ClassTextEmbeddings:
    """Per-class text embeddings, one row per class; names are metadata only."""

    embeddings: np.ndarray
    class_names: list[str] = field(default_factory=list)

    @property
    def num_classes(self):
        return self.embeddings.shape[0]

    @property
    def dim(self):
        return self.embeddings.shape[1]


@dataclass
class AdaptConfig:
    """Tuning knobs for the adaptation engine.

    alpha              fusion weight on the generative branch
    beta               sharpness of the entropy-based sample weight exp(-beta*H)
    zero_shot_temperature  multiplier on cosine similarities before softmax
    regularization_epsilon ridge coefficient, scaled by trace(cov)/d at solve time
    refactor_interval  forced factorization refresh cadence, in covariance updates
    normalize_features unit-normalize features and text embeddings at ingestion
    adaptation_enabled when false, adapt steps leave the state untouched
    """

    alpha: float = 0.2
    beta: float = 4.5
    zero_shot_temperature: float = 100.0
    regularization_epsilon: float = DEFAULT_RIDGE_EPSILON
    refactor_interval: int = 64
    normalize_features: bool = True
    adaptation_enabled: bool = True
    # opt-in: let prediction reuse the adaptation loop's cadence factor
    # instead of refactoring on every predict after an update
    stale_prediction_factor: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidInput(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise InvalidInput(f"beta must be >= 0, got {self.beta}")
        if self.zero_shot_temperature <= 0:
            raise InvalidInput("zero_shot_temperature must be > 0")
        if self.regularization_epsilon <= 0:
            raise InvalidInput("regularization_epsilon must be > 0")
        if self.refactor_interval < 1:
            raise InvalidInput("refactor_interval must be >= 1")


@dataclass
class MixtureState:
    """Mutable single-writer state of the shared-covariance Gaussian mixture.

    ``covariance_inverse_factor`` is the factor the adaptation loop solves
    against; it is rebuilt by :func:`refactor` every ``refactor_interval``
    covariance updates. Prediction-path solves always reflect the current
    covariance through a separate memoized factor (``_prediction_factor``),
    so predicting never influences the adaptation trajectory. One logical
    owner applies updates in stream order; readers that need a stable view
    should take ``copy()``.
    """

    means: np.ndarray
    soft_counts: np.ndarray
    priors: np.ndarray
    covariance: np.ndarray
    weighted_total: float
    covariance_inverse_factor: np.ndarray | None = None
    updates_since_refactor: int = 0
    ridge_epsilon: float = DEFAULT_RIDGE_EPSILON
    refactor_interval: int = 64
    _covariance_version: int = field(default=0, repr=False)
    _prediction_factor: np.ndarray | None = field(default=None, repr=False)
    _prediction_version: int = field(default=-1, repr=False)

    @property
    def num_classes(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def copy(self):
        return MixtureState(
            means=self.means.copy(),
            soft_counts=self.soft_counts.copy(),
            priors=self.priors.copy(),
            covariance=self.covariance.copy(order="F"),
            weighted_total=self.weighted_total,
            covariance_inverse_factor=(
                None
                if self.covariance_inverse_factor is None
                else self.covariance_inverse_factor.copy()
            ),
            updates_since_refactor=self.updates_since_refactor,
            ridge_epsilon=self.ridge_epsilon,
            refactor_interval=self.refactor_interval,
            _covariance_version=self._covariance_version,
            _prediction_factor=(
                None if self._prediction_factor is None else self._prediction_factor.copy()
            ),
            _prediction_version=self._prediction_version,
        )


def init_state(text_embeddings: ClassTextEmbeddings, config: AdaptConfig) -> MixtureState:
    """Build the starting state: means from text embeddings, identity covariance.

    Soft counts and priors start uniform at 1/K; the weighted total starts
    at 1 (the summed initial count mass).
    """
    rows = np.asarray(text_embeddings.embeddings, dtype=np.float64)
    if rows.ndim != 2:
        raise InvalidInput(f"text embeddings must be a K x d matrix, got shape {rows.shape}")
    k, d = rows.shape
    if k < 2:
        raise InvalidInput(f"need at least 2 classes, got {k}")
    if d < 1:
        raise InvalidInput("embedding dimension must be >= 1")
    if not np.all(np.isfinite(rows)):
        raise InvalidInput("text embeddings contain non-finite entries")

    means = unit_normalize(rows) if config.normalize_features else rows.copy()
    state = MixtureState(
        means=means,
        soft_counts=np.full(k, 1.0 / k),
        priors=np.full(k, 1.0 / k),
        covariance=np.asfortranarray(np.eye(d)),
        weighted_total=1.0,
        ridge_epsilon=config.regularization_epsilon,
        refactor_interval=config.refactor_interval,
    )
    refactor(state)
    return state


def _compute_factor(state: MixtureState, symmetrize: bool = True) -> np.ndarray:
    """Cholesky factor of the ridge-regularized covariance.

    ``symmetrize`` averages the triangles first (the refactor contract);
    the hot prediction path skips it since only the lower triangle is read
    and updates keep the asymmetry at rounding level.
    """
    cov = state.covariance
    d = cov.shape[0]
    if symmetrize:
        reg = np.asfortranarray(cov + cov.T)
        reg *= 0.5
    else:
        reg = cov.copy(order="F")
    ridge = state.ridge_epsilon * (np.trace(cov) / d)
    reg.flat[:: d + 1] += ridge
    factor, info = dpotrf(reg, lower=1, clean=1, overwrite_a=1)
    if info != 0:
        raise NumericalBreakdown(
            f"regularized covariance is not positive definite (ridge={ridge:g})"
        )
    if not np.all(np.isfinite(factor)):
        raise NumericalBreakdown("covariance factorization produced non-finite entries")
    return factor


def refactor(state: MixtureState) -> MixtureState:
    """Rebuild the maintained Cholesky factor from scratch.

    Raises NumericalBreakdown when the regularized covariance is not
    positive definite.
    """
    factor = _compute_factor(state)
    state.covariance_inverse_factor = factor
    state.updates_since_refactor = 0
    state._prediction_factor = factor
    state._prediction_version = state._covariance_version
    return state


def _fresh_factor(state: MixtureState) -> np.ndarray:
    """Factor for prediction-path solves: always reflects the current
    covariance, without touching the adaptation loop's refresh cadence."""
    if state._prediction_version != state._covariance_version or state._prediction_factor is None:
        if state.covariance_inverse_factor is not None and state.updates_since_refactor == 0:
            state._prediction_factor = state.covariance_inverse_factor
        else:
            state._prediction_factor = _compute_factor(state, symmetrize=False)
        state._prediction_version = state._covariance_version
    return state._prediction_factor


def _maintained_factor(state: MixtureState) -> np.ndarray:
    """Factor for the adaptation loop: refresh only at the state's cadence."""
    if (
        state.covariance_inverse_factor is None
        or state.updates_since_refactor >= state.refactor_interval
    ):
        refactor(state)
    return state.covariance_inverse_factor


def regularized_inverse_apply(state: MixtureState, v: np.ndarray) -> np.ndarray:
    """Solve (cov + eps*(trace/d)*I) u = v via the Cholesky factor.

    Refreshes the factor first if covariance updates have landed since the
    last factorization, so the solve always reflects the current state.
    """
    v = np.asarray(v, dtype=np.float64)
    factor = _fresh_factor(state)
    half = dtrsv(factor, v, lower=1)
    return dtrsv(factor, half, lower=1, trans=1)


def _half_solve(factor, b):
    """L^-1 b for a 2-d right-hand side, via one BLAS triangular solve."""
    return dtrsm(1.0, factor, b, lower=1)

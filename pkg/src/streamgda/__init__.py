"""Streaming test-time adaptation of embedding classifiers.

Classifies feature vectors arriving one at a time by maintaining a
shared-covariance Gaussian mixture with an online, confidence-weighted EM
procedure seeded from class text embeddings, and fusing the generative
scores with the frozen zero-shot cosine scores.
"""

from .errors import FormatError, InvalidInput, NumericalBreakdown, TruncatedError
from .harness import RunReport, run_ablation, run_oracle, run_stream
from .online_em import (
    Posterior,
    UpdateTrace,
    adapt_step,
    e_step,
    entropy_weight,
    weighted_m_step,
)
from .oracle import BatchEMResult, batch_em
from .predictor import (
    PredictionOutcome,
    fused_predict,
    generative_logits,
    self_entropy,
    zero_shot_probs,
)
from .state import (
    AdaptConfig,
    ClassTextEmbeddings,
    EmbeddingRecord,
    MixtureState,
    init_state,
    refactor,
    regularized_inverse_apply,
    unit_normalize,
)
from .stream_io import (
    EmbeddingFileHeader,
    SyntheticSpec,
    checkpoint_state,
    generate_synthetic,
    read_embedding_stream,
    restore_state,
    write_embedding_file,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "BatchEMResult",
    "ClassTextEmbeddings",
    "EmbeddingFileHeader",
    "EmbeddingRecord",
    "FormatError",
    "InvalidInput",
    "MixtureState",
    "NumericalBreakdown",
    "Posterior",
    "PredictionOutcome",
    "RunReport",
    "SyntheticSpec",
    "TruncatedError",
    "UpdateTrace",
    "adapt_step",
    "batch_em",
    "checkpoint_state",
    "e_step",
    "entropy_weight",
    "fused_predict",
    "generate_synthetic",
    "generative_logits",
    "init_state",
    "read_embedding_stream",
    "refactor",
    "regularized_inverse_apply",
    "restore_state",
    "run_ablation",
    "run_oracle",
    "run_stream",
    "self_entropy",
    "unit_normalize",
    "weighted_m_step",
    "write_embedding_file",
    "zero_shot_probs",
]

"""Binary embedding container, state checkpoints, synthetic stream generation.

Embedding file layout (all integers little-endian):

    offset  size  field
    0       8     magic "EMBSTRM1"
    8       4     version (u32, currently 1)
    12      4     d, feature dimension (u32)
    16      4     K, number of classes (u32, >= 2)
    20      8     record count (u64, 0 = unknown / streaming)
    28      4     flags (u32; bit 0 labels present, bit 1 features pre-normalized)
    32      ...   K*d float32 text-embedding values, row-major
    ...     ...   per record: d float32 feature values,
                  then one int32 label if the labels flag is set (-1 = unlabeled)

Values are stored in single precision; the engine works in doubles.
Checkpoints ("GDACKPT1") keep full double precision so a restored state is
bit-identical to the saved one.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidInput, TruncatedError
from .state import ClassTextEmbeddings, EmbeddingRecord, MixtureState, unit_normalize

EMBED_MAGIC = b"EMBSTRM1"
EMBED_VERSION = 1
CKPT_MAGIC = b"GDACKPT1"
CKPT_VERSION = 1

FLAG_LABELS = 1
FLAG_NORMALIZED = 2

_HEADER = struct.Struct("<8sIIIQI")


@dataclass
class EmbeddingFileHeader:
    dim: int
    num_classes: int
    record_count: int = 0
    flags: int = 0
    version: int = EMBED_VERSION

    @property
    def has_labels(self):
        return bool(self.flags & FLAG_LABELS)

    @property
    def pre_normalized(self):
        return bool(self.flags & FLAG_NORMALIZED)


def write_embedding_file(header, text_embeddings, records) -> bytes:
    """Serialize header, text embeddings and records; round-trips bit-exactly."""
    rows = np.asarray(text_embeddings.embeddings, dtype="<f4")
    if rows.shape != (header.num_classes, header.dim):
        raise InvalidInput(
            f"text embeddings shape {rows.shape} does not match header "
            f"({header.num_classes} x {header.dim})"
        )
    if header.num_classes < 2 or header.dim < 1:
        raise InvalidInput("header requires K >= 2 and d >= 1")

    out = io.BytesIO()
    out.write(
        _HEADER.pack(
            EMBED_MAGIC,
            header.version,
            header.dim,
            header.num_classes,
            header.record_count,
            header.flags,
        )
    )
    out.write(rows.tobytes())
    count = 0
    for rec in records:
        feat = np.asarray(rec.feature, dtype="<f4")
        if feat.shape != (header.dim,):
            raise InvalidInput(f"record {count} has shape {feat.shape}, expected ({header.dim},)")
        out.write(feat.tobytes())
        if header.has_labels:
            label = -1 if rec.label is None else int(rec.label)
            out.write(struct.pack("<i", label))
        count += 1
    if header.record_count and count != header.record_count:
        raise InvalidInput(
            f"header promised {header.record_count} records, got {count}"
        )
    return out.getvalue()


def read_embedding_stream(source):
    """Parse a container, returning (header, text embeddings, record iterator).

    The iterator is single-pass and yields records strictly in file order.
    Raises FormatError for a bad magic/version/header and TruncatedError
    (with the failing record index) when the stream ends mid-record.
    """
    stream = io.BytesIO(source) if isinstance(source, (bytes, bytearray)) else source

    raw = stream.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"header requires {_HEADER.size} bytes, got {len(raw)}")
    magic, version, dim, num_classes, record_count, flags = _HEADER.unpack(raw)
    if magic != EMBED_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != EMBED_VERSION:
        raise FormatError(f"unsupported version {version}")
    if dim < 1 or num_classes < 2:
        raise FormatError(f"invalid header dimensions d={dim} K={num_classes}")
    header = EmbeddingFileHeader(
        dim=dim, num_classes=num_classes, record_count=record_count,
        flags=flags, version=version,
    )

    text_bytes = stream.read(4 * num_classes * dim)
    if len(text_bytes) < 4 * num_classes * dim:
        raise FormatError("file ends inside the text-embedding block")
    rows = np.frombuffer(text_bytes, dtype="<f4").astype(np.float64)
    text = ClassTextEmbeddings(
        embeddings=rows.reshape(num_classes, dim),
        class_names=[f"class_{i}" for i in range(num_classes)],
    )

    record_size = 4 * dim + (4 if header.has_labels else 0)

    def records():
        base = _HEADER.size + 4 * num_classes * dim
        index = 0
        while True:
            if record_count and index >= record_count:
                return
            chunk = stream.read(record_size)
            if not chunk and not record_count:
                return
            if len(chunk) < record_size:
                raise TruncatedError(index, base + index * record_size + len(chunk))
            feature = np.frombuffer(chunk[: 4 * dim], dtype="<f4").astype(np.float64)
            label = None
            if header.has_labels:
                (raw_label,) = struct.unpack("<i", chunk[4 * dim:])
                label = None if raw_label < 0 else raw_label
            yield EmbeddingRecord(feature=feature, label=label)
            index += 1

    return header, text, records()


@dataclass
class SyntheticSpec:
    """Parameters of a shifted-mixture stream with known ground truth.

    The generation algorithm is fixed so identical specs produce identical
    bytes on every platform: a PCG64 generator seeded with ``seed`` draws,
    in order, (1) the K x d standard-normal perturbation turned into text
    embeddings, (2) one uniform per record mapped to a class through the
    cumulative proportions, (3) the n x d standard normals mapped through
    the covariance Cholesky factor onto the class means.
    """

    num_classes: int
    dim: int
    class_means: np.ndarray
    shared_covariance: np.ndarray
    class_proportions: np.ndarray
    text_embedding_noise: float = 0.0
    seed: int = 0
    count: int = 0
    class_names: list[str] = field(default_factory=list)


def generate_synthetic(spec: SyntheticSpec):
    """Draw a labeled stream and its perturbed, unit-normalized text embeddings."""
    means = np.asarray(spec.class_means, dtype=np.float64)
    cov = np.asarray(spec.shared_covariance, dtype=np.float64)
    props = np.asarray(spec.class_proportions, dtype=np.float64)

    if means.shape != (spec.num_classes, spec.dim):
        raise InvalidInput("class_means shape does not match num_classes x dim")
    if spec.num_classes < 2:
        raise InvalidInput("need at least 2 classes")
    if props.shape != (spec.num_classes,) or props.min() < 0 or abs(props.sum() - 1.0) > 1e-9:
        raise InvalidInput("class_proportions is not a valid distribution")
    if spec.text_embedding_noise < 0:
        raise InvalidInput("text_embedding_noise must be >= 0")
    if cov.shape != (spec.dim, spec.dim):
        raise InvalidInput("shared_covariance must be d x d")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise InvalidInput("shared_covariance is not positive definite") from exc

    rng = np.random.default_rng(spec.seed)
    perturb = rng.standard_normal((spec.num_classes, spec.dim))
    text_rows = unit_normalize(means + spec.text_embedding_noise * perturb)
    names = spec.class_names or [f"class_{i}" for i in range(spec.num_classes)]
    text = ClassTextEmbeddings(embeddings=text_rows, class_names=list(names))

    edges = np.cumsum(props)
    labels = np.searchsorted(edges, rng.random(spec.count), side="right")
    labels = np.minimum(labels, spec.num_classes - 1)
    noise = rng.standard_normal((spec.count, spec.dim))
    features = means[labels] + noise @ chol.T

    records = [
        EmbeddingRecord(feature=features[i], label=int(labels[i]))
        for i in range(spec.count)
    ]
    return text, records


def checkpoint_state(state: MixtureState) -> bytes:
    """Serialize the full double-precision state, maintained factor included.

    The factor is path-dependent (it reflects the covariance as of the
    last cadence refresh), so it must ride along for a restored state to
    continue bit-identically.
    """
    k, d = state.means.shape
    out = io.BytesIO()
    out.write(CKPT_MAGIC)
    out.write(struct.pack("<III", CKPT_VERSION, d, k))
    out.write(np.ascontiguousarray(state.means, dtype="<f8").tobytes())
    out.write(np.ascontiguousarray(state.soft_counts, dtype="<f8").tobytes())
    out.write(np.ascontiguousarray(state.priors, dtype="<f8").tobytes())
    out.write(np.ascontiguousarray(state.covariance, dtype="<f8").tobytes())
    out.write(struct.pack("<ddII", state.weighted_total, state.ridge_epsilon,
                          state.updates_since_refactor, state.refactor_interval))
    factor = state.covariance_inverse_factor
    out.write(struct.pack("<B", 0 if factor is None else 1))
    if factor is not None:
        out.write(np.ascontiguousarray(factor, dtype="<f8").tobytes())
    return out.getvalue()


def restore_state(blob: bytes) -> MixtureState:
    """Rebuild a state from checkpoint bytes."""
    head = struct.Struct("<8sIII")
    if len(blob) < head.size:
        raise FormatError("checkpoint shorter than its header")
    magic, version, d, k = head.unpack_from(blob, 0)
    if magic != CKPT_MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}")
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")

    tail = struct.Struct("<ddII")
    base = head.size + 8 * (k * d + k + k + d * d) + tail.size
    if len(blob) < base + 1:
        raise FormatError(f"checkpoint has {len(blob)} bytes, expected at least {base + 1}")

    offset = head.size

    def take(count):
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).copy()
        offset += 8 * count
        return arr

    means = take(k * d).reshape(k, d)
    soft_counts = take(k)
    priors = take(k)
    covariance = take(d * d).reshape(d, d)
    weighted_total, ridge_epsilon, updates_since_refactor, refactor_interval = (
        tail.unpack_from(blob, offset)
    )
    offset += tail.size
    (has_factor,) = struct.unpack_from("<B", blob, offset)
    offset += 1
    factor = None
    if has_factor:
        if len(blob) != base + 1 + 8 * d * d:
            raise FormatError(f"checkpoint has {len(blob)} bytes, expected {base + 1 + 8 * d * d}")
        factor = np.asfortranarray(take(d * d).reshape(d, d))
    elif len(blob) != base + 1:
        raise FormatError(f"checkpoint has {len(blob)} bytes, expected {base + 1}")

    return MixtureState(
        means=means,
        soft_counts=soft_counts,
        priors=priors,
        covariance=np.asfortranarray(covariance),
        weighted_total=weighted_total,
        covariance_inverse_factor=factor,
        updates_since_refactor=updates_since_refactor,
        ridge_epsilon=ridge_epsilon,
        refactor_interval=refactor_interval,
    )

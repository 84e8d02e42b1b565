import io

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from streamgda import (
    AdaptConfig,
    ClassTextEmbeddings,
    EmbeddingFileHeader,
    EmbeddingRecord,
    FormatError,
    InvalidInput,
    Posterior,
    SyntheticSpec,
    TruncatedError,
    adapt_step,
    checkpoint_state,
    fused_predict,
    generate_synthetic,
    init_state,
    read_embedding_stream,
    restore_state,
    write_embedding_file,
)
from streamgda.stream_io import FLAG_LABELS, FLAG_NORMALIZED

from conftest import make_state


def small_file(rng, n_records=5, dim=3, classes=2, labels=True):
    flags = FLAG_LABELS if labels else 0
    header = EmbeddingFileHeader(dim=dim, num_classes=classes,
                                 record_count=n_records, flags=flags)
    text = ClassTextEmbeddings(
        embeddings=rng.standard_normal((classes, dim)).astype(np.float32)
    )
    records = [
        EmbeddingRecord(
            feature=rng.standard_normal(dim).astype(np.float32),
            label=int(rng.integers(0, classes)) if labels else None,
        )
        for _ in range(n_records)
    ]
    return header, text, records


def test_empty_file_size():
    header = EmbeddingFileHeader(dim=2, num_classes=2, record_count=0)
    text = ClassTextEmbeddings(embeddings=np.zeros((2, 2)))
    blob = write_embedding_file(header, text, [])
    assert len(blob) == 32 + 16


def test_labeled_record_payload_size(rng):
    header, text, records = small_file(rng, n_records=3, dim=4)
    blob = write_embedding_file(header, text, records)
    assert len(blob) == 32 + 2 * 4 * 4 + 3 * (4 * 4 + 4)


def test_round_trip_bit_exact(rng):
    header, text, records = small_file(rng, n_records=17, dim=6, classes=3)
    blob = write_embedding_file(header, text, records)
    got_header, got_text, got_records = read_embedding_stream(blob)
    assert got_header.dim == 6 and got_header.num_classes == 3
    assert got_header.record_count == 17 and got_header.has_labels
    assert_array_equal(
        got_text.embeddings.astype(np.float32), text.embeddings.astype(np.float32)
    )
    got = list(got_records)
    assert len(got) == 17
    for orig, back in zip(records, got):
        assert_array_equal(back.feature.astype(np.float32), orig.feature)
        assert back.label == orig.label
    # writing what was read reproduces the original bytes
    blob2 = write_embedding_file(got_header, got_text, got)
    assert blob2 == blob


def test_records_arrive_in_order(rng):
    dim = 2
    header = EmbeddingFileHeader(dim=dim, num_classes=2, record_count=4, flags=FLAG_LABELS)
    text = ClassTextEmbeddings(embeddings=np.eye(2))
    records = [EmbeddingRecord(feature=np.array([i, i]), label=i % 2) for i in range(4)]
    blob = write_embedding_file(header, text, records)
    _, _, got = read_embedding_stream(blob)
    assert [int(r.feature[0]) for r in got] == [0, 1, 2, 3]


def test_unlabeled_sentinel_round_trip():
    header = EmbeddingFileHeader(dim=2, num_classes=2, record_count=2, flags=FLAG_LABELS)
    text = ClassTextEmbeddings(embeddings=np.eye(2))
    records = [
        EmbeddingRecord(feature=np.zeros(2), label=1),
        EmbeddingRecord(feature=np.ones(2), label=None),
    ]
    blob = write_embedding_file(header, text, records)
    _, _, got = read_embedding_stream(blob)
    labels = [r.label for r in got]
    assert labels == [1, None]


def test_bad_magic_rejected(rng):
    header, text, records = small_file(rng)
    blob = bytearray(write_embedding_file(header, text, records))
    blob[:8] = b"NOTMAGIC"
    with pytest.raises(FormatError):
        read_embedding_stream(bytes(blob))


def test_bad_header_fields_rejected(rng):
    header, text, records = small_file(rng)
    blob = write_embedding_file(header, text, records)
    with pytest.raises(FormatError):
        read_embedding_stream(blob[:20])
    # K=1 violates the container contract
    k1 = bytearray(blob)
    k1[16:20] = (1).to_bytes(4, "little")
    with pytest.raises(FormatError):
        read_embedding_stream(bytes(k1))


def test_truncation_reports_record_index(rng):
    header, text, records = small_file(rng, n_records=5, dim=3)
    blob = write_embedding_file(header, text, records)
    record_size = 3 * 4 + 4
    body = 32 + 2 * 3 * 4
    cut = blob[: body + 2 * record_size + 7]  # inside record 2
    _, _, reader = read_embedding_stream(cut)
    with pytest.raises(TruncatedError) as err:
        list(reader)
    assert err.value.record_index == 2

    # count=0 means read to EOF; a clean end is not an error
    streaming = bytearray(blob)
    streaming[20:28] = (0).to_bytes(8, "little")
    _, _, reader = read_embedding_stream(bytes(streaming))
    assert len(list(reader)) == 5


def test_writer_validates_dimensions(rng):
    header, text, records = small_file(rng, dim=3)
    records[2] = EmbeddingRecord(feature=np.zeros(4), label=0)
    with pytest.raises(InvalidInput):
        write_embedding_file(header, text, records)
    header2 = EmbeddingFileHeader(dim=5, num_classes=2, record_count=0)
    with pytest.raises(InvalidInput):
        write_embedding_file(header2, text, [])


def base_spec(**overrides):
    base = dict(
        num_classes=2,
        dim=2,
        class_means=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        shared_covariance=np.eye(2),
        class_proportions=np.array([0.5, 0.5]),
        text_embedding_noise=0.0,
        seed=5,
        count=100,
    )
    base.update(overrides)
    return SyntheticSpec(**base)


def test_synthetic_is_deterministic():
    text_a, rec_a = generate_synthetic(base_spec())
    text_b, rec_b = generate_synthetic(base_spec())
    assert_array_equal(text_a.embeddings, text_b.embeddings)
    for a, b in zip(rec_a, rec_b):
        assert_array_equal(a.feature, b.feature)
        assert a.label == b.label
    header = EmbeddingFileHeader(dim=2, num_classes=2, record_count=100, flags=FLAG_LABELS)
    assert write_embedding_file(header, text_a, rec_a) == write_embedding_file(
        header, text_b, rec_b
    )


def test_synthetic_validation():
    with pytest.raises(InvalidInput):
        generate_synthetic(base_spec(class_proportions=np.array([0.8, 0.8])))
    with pytest.raises(InvalidInput):
        generate_synthetic(base_spec(shared_covariance=-np.eye(2)))
    with pytest.raises(InvalidInput):
        generate_synthetic(base_spec(text_embedding_noise=-1.0))


def test_synthetic_near_degenerate_covariance_separates_perfectly():
    spec = base_spec(shared_covariance=1e-6 * np.eye(2), count=500)
    text, records = generate_synthetic(spec)
    correct = sum(
        1
        for r in records
        if int(np.argmax(text.embeddings @ r.feature)) == r.label
    )
    assert correct == len(records)


def test_synthetic_proportions_within_binomial_ci():
    p = np.array([0.7, 0.3])
    spec = base_spec(class_proportions=p, count=10000, seed=3)
    _, records = generate_synthetic(spec)
    counts = np.bincount([r.label for r in records], minlength=2)
    for y in range(2):
        sigma = np.sqrt(p[y] * (1 - p[y]) * 10000)
        assert abs(counts[y] - p[y] * 10000) <= 3 * sigma


def test_checkpoint_round_trip_fresh_state(simple_text):
    state = init_state(simple_text, AdaptConfig())
    blob = checkpoint_state(state)
    back = restore_state(blob)
    assert_array_equal(back.means, state.means)
    assert_array_equal(back.covariance, state.covariance)
    assert_array_equal(back.soft_counts, state.soft_counts)
    assert_array_equal(back.priors, state.priors)
    assert back.weighted_total == state.weighted_total
    assert back.ridge_epsilon == state.ridge_epsilon
    assert checkpoint_state(back) == blob


def test_checkpoint_preserves_predictions_after_adaptation(rng, simple_text):
    config = AdaptConfig()
    state = init_state(simple_text, config)
    for _ in range(500):
        x = rng.standard_normal(2)
        x /= np.linalg.norm(x)
        probs = rng.random(2)
        probs /= probs.sum()
        adapt_step(state, x, probs, config)
    blob = checkpoint_state(state)
    back = restore_state(blob)
    for _ in range(20):
        x = rng.standard_normal(2)
        x /= np.linalg.norm(x)
        a = fused_predict(state, x, simple_text, config)
        b = fused_predict(back, x, simple_text, config)
        assert_array_equal(a.fused_logits, b.fused_logits)
        assert a.predicted_class == b.predicted_class


def test_checkpoint_rejects_damage(simple_text):
    state = init_state(simple_text, AdaptConfig())
    blob = checkpoint_state(state)
    with pytest.raises(FormatError):
        restore_state(blob[:-4])
    with pytest.raises(FormatError):
        restore_state(b"WRONGMAG" + blob[8:])
    wrong_version = bytearray(blob)
    wrong_version[8:12] = (9).to_bytes(4, "little")
    with pytest.raises(FormatError):
        restore_state(bytes(wrong_version))

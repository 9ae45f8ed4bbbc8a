import numpy as np
import pytest

from langneutral.errors import EmptyInputError, ZeroVectorError
from langneutral.geometry import fit_projection, project_reprs
from langneutral.retrieval import (
    Transform,
    mean_accuracy,
    retrieval_matrix,
    retrieve,
)

from conftest import make_reprs


def brute_force_predictions(src_mat, tgt_mat):
    """Independent double-loop argmin over the raw cosine formula."""
    predictions = []
    for u in src_mat:
        best_j, best_d = 0, np.inf
        for j, v in enumerate(tgt_mat):
            d = 1.0 - np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
            if d < best_d:
                best_j, best_d = j, d
        predictions.append(best_j)
    return predictions


def test_identity_corpus(rng):
    mat = rng.normal(size=(8, 5))
    result = retrieve(make_reprs(mat), make_reprs(mat))
    assert result.predictions == list(range(8))
    assert result.accuracy == 1.0


def test_reversed_target_n4(rng):
    mat = rng.normal(size=(4, 5))
    result = retrieve(make_reprs(mat), make_reprs(mat[::-1]))
    assert result.predictions == [3, 2, 1, 0]
    assert result.accuracy == 0.0


def test_reversed_target_odd_n(rng):
    mat = rng.normal(size=(5, 4))
    result = retrieve(make_reprs(mat), make_reprs(mat[::-1]))
    assert result.accuracy == pytest.approx(1 / 5)


def test_rotation_recovered_by_projection(rng):
    src = rng.normal(size=(20, 8))
    rotation = np.linalg.qr(rng.normal(size=(8, 8)))[0]
    tgt = src @ rotation
    linear_map = fit_projection(src, tgt)
    projected = project_reprs(linear_map, make_reprs(src))
    result = retrieve(projected, make_reprs(tgt))
    assert result.accuracy == 1.0


def test_length_mismatch(rng):
    with pytest.raises(ValueError, match="3 source vs 4 target"):
        retrieve(make_reprs(rng.normal(size=(3, 4))), make_reprs(rng.normal(size=(4, 4))))


def test_empty_corpus():
    with pytest.raises(EmptyInputError):
        retrieve([], [])


def test_zero_vector_names_index(rng):
    src = rng.normal(size=(3, 4))
    src[1] = 0.0
    with pytest.raises(ZeroVectorError, match="source sentence row 1"):
        retrieve(make_reprs(src), make_reprs(rng.normal(size=(3, 4))))


def test_positive_rescaling_invariance(rng):
    src = rng.normal(size=(6, 4))
    tgt = rng.normal(size=(6, 4))
    baseline = retrieve(make_reprs(src), make_reprs(tgt)).predictions
    scaled = src.copy()
    scaled[2] *= 37.5
    assert retrieve(make_reprs(scaled), make_reprs(tgt)).predictions == baseline


def test_target_permutation_metamorphic(rng):
    src = rng.normal(size=(7, 5))
    tgt = rng.normal(size=(7, 5))
    base = retrieve(make_reprs(src), make_reprs(tgt)).predictions
    perm = rng.permutation(7)
    permuted = retrieve(make_reprs(src), make_reprs(tgt[perm])).predictions
    # position of target j in the permuted corpus
    where = {int(perm[k]): k for k in range(7)}
    assert permuted == [where[p] for p in base]


def test_matrix_identical_representations(rng):
    mat = rng.normal(size=(5, 4))
    corpus = {"aa": make_reprs(mat), "bb": make_reprs(mat)}
    results = retrieval_matrix(corpus)
    assert set(results) == {("aa", "bb"), ("bb", "aa")}
    assert all(r.accuracy == 1.0 for r in results.values())


def test_matrix_six_languages_thirty_pairs(rng):
    corpus = {
        lang: make_reprs(rng.normal(size=(4, 3)))
        for lang in ("cs", "de", "en", "fr", "hi", "ru")
    }
    results = retrieval_matrix(corpus)
    assert len(results) == 30
    assert all(src != tgt for src, tgt in results)


def test_matrix_size_mismatch_names_sizes(rng):
    corpus = {
        "aa": make_reprs(rng.normal(size=(4, 3))),
        "bb": make_reprs(rng.normal(size=(5, 3))),
    }
    with pytest.raises(ValueError, match="4") as err:
        retrieval_matrix(corpus)
    assert "5" in str(err.value)


def test_constant_shift_centered_beats_plain(rng):
    # language bb is language aa displaced by a constant vector; the shift
    # breaks cosine rankings until centering removes it
    base = rng.normal(size=(12, 6))
    shift = 9.0 * rng.normal(size=6)
    corpus = {"aa": make_reprs(base), "bb": make_reprs(base + shift)}

    plain = retrieval_matrix(corpus, Transform.PLAIN)
    centered = retrieval_matrix(corpus, Transform.CENTERED)
    assert mean_accuracy(centered) == 1.0
    assert mean_accuracy(plain) < mean_accuracy(centered)

    # brute-force distance-table oracle agrees with the PLAIN predictions
    oracle = brute_force_predictions(base, base + shift)
    assert plain[("aa", "bb")].predictions == oracle


def test_projected_matches_plain_on_training_pairs(rng):
    # noiseless synthetic data, maps fitted on the evaluation pairs
    # themselves: projection can only help
    base = rng.normal(size=(10, 5))
    rotation = np.linalg.qr(rng.normal(size=(5, 5)))[0]
    corpus = {"aa": make_reprs(base), "en": make_reprs(base @ rotation)}
    projected = retrieval_matrix(
        corpus, Transform.PROJECTED, pivot="en", fit_corpus=corpus
    )
    assert mean_accuracy(projected) == 1.0


def test_projected_requires_fit_corpus(rng):
    corpus = {
        "aa": make_reprs(rng.normal(size=(4, 3))),
        "en": make_reprs(rng.normal(size=(4, 3))),
    }
    with pytest.raises(ValueError, match="fit"):
        retrieval_matrix(corpus, Transform.PROJECTED, pivot="en")
    with pytest.raises(ValueError, match="pivot"):
        retrieval_matrix(corpus, Transform.PROJECTED, fit_corpus=corpus)

"""Parallel sentence retrieval over index-aligned corpora.

For every sentence on the source side, pick the target sentence at the
smallest cosine distance; accuracy is the fraction of exact index matches.
Corpora small enough for this task (a few thousand sentences) are brute
forced; no approximate index is ever used.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .embstore import ReprSource, SentenceRepr
from .errors import EmptyInputError
from .geometry import (
    LinearMap,
    center,
    compute_centroid,
    cosine_distance_matrix,
    fit_projection,
    project_reprs,
    stack_reprs,
)


class Transform(enum.Enum):
    """Representation treatment applied before distances are computed."""

    PLAIN = "plain"
    CENTERED = "centered"
    PROJECTED = "projected"


@dataclass
class RetrievalResult:
    source_lang: str
    target_lang: str
    layer: int
    repr_source: ReprSource
    transform: Transform
    predictions: list[int]
    accuracy: float


def retrieve(
    source: list[SentenceRepr],
    target: list[SentenceRepr],
    source_lang: str = "",
    target_lang: str = "",
    transform: Transform = Transform.PLAIN,
) -> RetrievalResult:
    """Nearest-target-by-cosine for each source sentence.

    The corpora must be sentence-aligned: index i on both sides is the same
    sentence, so predictions[i] == i counts as a hit. Ties in the argmin go
    to the smallest target index.
    """
    if len(source) != len(target):
        raise ValueError(
            f"corpus size mismatch: {len(source)} source vs {len(target)} target"
        )
    if not source:
        raise EmptyInputError("retrieval needs a nonempty corpus")
    src_mat, layer, repr_source = stack_reprs(source)
    tgt_mat, _, _ = stack_reprs(target)
    dists = cosine_distance_matrix(
        src_mat, tgt_mat, side_a="source sentence", side_b="target sentence"
    )
    predictions = np.argmin(dists, axis=1)
    accuracy = float(np.mean(predictions == np.arange(len(source))))
    return RetrievalResult(
        source_lang=source_lang,
        target_lang=target_lang,
        layer=layer,
        repr_source=repr_source,
        transform=transform,
        predictions=[int(p) for p in predictions],
        accuracy=accuracy,
    )


def retrieval_matrix(
    corpus: dict[str, list[SentenceRepr]],
    transform: Transform = Transform.PLAIN,
    pivot: str | None = None,
    fit_corpus: dict[str, list[SentenceRepr]] | None = None,
    ridge_lambda: float = 0.0,
) -> dict[tuple[str, str], RetrievalResult]:
    """Run retrieval for every ordered language pair of a multi-parallel corpus.

    CENTERED subtracts each language's own centroid (estimated from that
    language's side of this corpus). PROJECTED maps every non-pivot language
    into the pivot space via a regression fitted on ``fit_corpus``, a held-out
    index-aligned parallel set covering the same languages; the pivot itself
    is mapped by the identity. Evaluation and fitting data stay disjoint by
    construction because they arrive as separate inputs.
    """
    langs = sorted(corpus)
    if len(langs) < 2:
        raise EmptyInputError("need at least two languages")
    sizes = {lang: len(corpus[lang]) for lang in langs}
    if len(set(sizes.values())) != 1:
        raise ValueError(f"corpus sizes differ across languages: {sizes}")

    if transform is Transform.PLAIN:
        prepared = {lang: corpus[lang] for lang in langs}
    elif transform is Transform.CENTERED:
        prepared = {}
        for lang in langs:
            centroid = compute_centroid(corpus[lang], lang=lang)
            prepared[lang] = center(corpus[lang], centroid)
    else:
        if pivot is None:
            raise ValueError("PROJECTED retrieval needs a pivot language")
        if pivot not in corpus:
            raise ValueError(f"pivot language {pivot!r} missing from corpus")
        if fit_corpus is None:
            raise ValueError(
                "PROJECTED retrieval needs a held-out parallel fit corpus"
            )
        missing = [lang for lang in langs if lang not in fit_corpus]
        if missing:
            raise ValueError(f"fit corpus missing languages: {missing}")
        maps = fit_pivot_maps(fit_corpus, pivot, ridge_lambda)
        prepared = {lang: project_reprs(maps[lang], corpus[lang]) for lang in langs}

    results: dict[tuple[str, str], RetrievalResult] = {}
    for src in langs:
        for tgt in langs:
            if src == tgt:
                continue
            results[(src, tgt)] = retrieve(
                prepared[src],
                prepared[tgt],
                source_lang=src,
                target_lang=tgt,
                transform=transform,
            )
    return results


def fit_pivot_maps(
    fit_corpus: dict[str, list[SentenceRepr]],
    pivot: str,
    ridge_lambda: float = 0.0,
) -> dict[str, LinearMap]:
    """Fit one map per language into the pivot space; pivot gets identity."""
    pivot_mat, _, _ = stack_reprs(fit_corpus[pivot])
    maps: dict[str, LinearMap] = {}
    for lang in sorted(fit_corpus):
        if lang == pivot:
            maps[lang] = LinearMap.identity(
                pivot_mat.shape[1], source_lang=pivot, target_lang=pivot
            )
            continue
        lang_mat, _, _ = stack_reprs(fit_corpus[lang])
        if lang_mat.shape[0] != pivot_mat.shape[0]:
            raise ValueError(
                f"fit corpus for {lang!r} has {lang_mat.shape[0]} sentences, "
                f"pivot has {pivot_mat.shape[0]}"
            )
        maps[lang] = fit_projection(
            lang_mat,
            pivot_mat,
            ridge_lambda=ridge_lambda,
            source_lang=lang,
            target_lang=pivot,
        )
    return maps


def mean_accuracy(results: dict[tuple[str, str], RetrievalResult]) -> float:
    """Average accuracy over all directed pairs, as reported for the task."""
    if not results:
        raise EmptyInputError("no retrieval results to average")
    return float(np.mean([r.accuracy for r in results.values()]))

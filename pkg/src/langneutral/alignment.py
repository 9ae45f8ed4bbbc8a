"""Word alignment as a minimum-weight edge cover of a bipartite graph.

Vertices are the source and target words of one sentence pair; edges carry
the cosine distance between word vectors (subword states averaged per
word). Every word on both sides must end up linked, so there is no null
alignment. Evaluation scores precision against possible gold links and
recall against sure gold links.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embstore import EmbeddingSet, word_vectors
from .errors import EmptyInputError
from .geometry import (
    LinearMap,
    apply_projection,
    cosine_distance_matrix,
    fit_projection,
)

Link = tuple[int, int]


@dataclass(frozen=True)
class BipartiteWeights:
    """Complete bipartite weight matrix [source words x target words]."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError(f"weights must be a nonempty 2-D matrix, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must all be finite")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class AlignmentLinkSet:
    """Predicted or gold alignment links for one sentence pair.

    Predicted sets carry only ``links``. Gold sets additionally carry the
    sure/possible annotation split, with sure a subset of possible.
    """

    links: frozenset[Link]
    sure: frozenset[Link] | None = None
    possible: frozenset[Link] | None = None

    @classmethod
    def predicted(cls, links) -> "AlignmentLinkSet":
        return cls(links=frozenset((int(s), int(t)) for s, t in links))

    @classmethod
    def gold(cls, sure, possible) -> "AlignmentLinkSet":
        sure_set = frozenset((int(s), int(t)) for s, t in sure)
        possible_set = frozenset((int(s), int(t)) for s, t in possible)
        if not sure_set <= possible_set:
            raise ValueError(
                f"sure links must be a subset of possible links; "
                f"extra: {sorted(sure_set - possible_set)}"
            )
        return cls(links=possible_set, sure=sure_set, possible=possible_set)

    @property
    def is_gold(self) -> bool:
        return self.sure is not None and self.possible is not None

    def sorted_links(self) -> list[Link]:
        return sorted(self.links)


def _as_weight_matrix(w) -> np.ndarray:
    if isinstance(w, BipartiteWeights):
        return w.weights
    return BipartiteWeights(np.asarray(w)).weights


def min_weight_edge_cover(weights) -> AlignmentLinkSet:
    """Minimum-total-weight edge set touching every vertex on both sides.

    Classical reduction: subtract each vertex's cheapest incident weight
    from its edges, solve an assignment problem on the reduced matrix padded
    to square with zero-cost dummy rows/columns (a dummy pairing means "leave
    that vertex unmatched"), then cover anything still uncovered with its
    cheapest incident edge. Deterministic for a fixed input; argmin scans
    break ties toward smaller indices.
    """
    w = _as_weight_matrix(weights)
    n_src, n_tgt = w.shape
    row_min = w.min(axis=1)
    col_min = w.min(axis=0)
    reduced = w - row_min[:, None] - col_min[None, :]

    padded = np.zeros((n_src + n_tgt, n_src + n_tgt), dtype=np.float64)
    padded[:n_src, :n_tgt] = reduced
    rows, cols = linear_sum_assignment(padded)

    links: set[Link] = set()
    for r, c in zip(rows, cols):
        if r < n_src and c < n_tgt:
            links.add((int(r), int(c)))
    covered_src = {s for s, _ in links}
    covered_tgt = {t for _, t in links}
    for s in range(n_src):
        if s not in covered_src:
            t = int(np.argmin(w[s]))
            links.add((s, t))
            covered_tgt.add(t)
    for t in range(n_tgt):
        if t not in covered_tgt:
            s = int(np.argmin(w[:, t]))
            links.add((s, t))
    return AlignmentLinkSet.predicted(links)


def cover_cost(link_set: AlignmentLinkSet, weights) -> float:
    """Total weight of a link set; summed in sorted link order."""
    w = _as_weight_matrix(weights)
    return float(sum(w[s, t] for s, t in link_set.sorted_links()))


def align_sentence_pair(
    src: EmbeddingSet,
    tgt: EmbeddingSet,
    sentence: int,
    layer: int,
    linear_map: LinearMap | None = None,
) -> AlignmentLinkSet:
    """Align one sentence pair from two parallel embedding sets.

    Word vectors are subword averages; an optional fitted map projects the
    source words into the target space before distances are taken.
    """
    if len(src.sentences) != len(tgt.sentences):
        raise ValueError(
            f"sentence count mismatch: {len(src.sentences)} vs {len(tgt.sentences)}"
        )
    src_words = word_vectors(src, sentence, layer)
    tgt_words = word_vectors(tgt, sentence, layer)
    if linear_map is not None:
        src_words = apply_projection(linear_map, src_words)
    dists = cosine_distance_matrix(
        src_words, tgt_words, side_a="source word", side_b="target word"
    )
    return min_weight_edge_cover(dists)


def align_corpus(
    src: EmbeddingSet,
    tgt: EmbeddingSet,
    layer: int,
    linear_map: LinearMap | None = None,
) -> list[AlignmentLinkSet]:
    """Align every sentence pair of two parallel sets at one layer."""
    if len(src.sentences) != len(tgt.sentences):
        raise ValueError(
            f"sentence count mismatch: {len(src.sentences)} vs {len(tgt.sentences)}"
        )
    return [
        align_sentence_pair(src, tgt, i, layer, linear_map=linear_map)
        for i in range(len(src.sentences))
    ]


def _f1_from_counts(match_possible: int, predicted: int, match_sure: int, sure: int):
    precision = match_possible / predicted if predicted else 0.0
    recall = match_sure / sure if sure else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def alignment_f1(
    predicted: AlignmentLinkSet, gold: AlignmentLinkSet
) -> tuple[float, float, float]:
    """Precision against possible links, recall against sure links.

    An empty prediction scores precision 0 by convention. A gold pair with
    no sure links yields recall 0 here; corpus scoring excludes such pairs
    from the recall counts instead.
    """
    if not gold.is_gold:
        raise ValueError("gold link set must carry sure/possible annotations")
    a = predicted.links
    return _f1_from_counts(
        len(a & gold.possible), len(a), len(a & gold.sure), len(gold.sure)
    )


def corpus_alignment_f1(
    predicted: list[AlignmentLinkSet], gold: list[AlignmentLinkSet]
) -> tuple[float, float, float]:
    """Micro-averaged corpus score: counts summed over all sentence pairs."""
    if len(predicted) != len(gold):
        raise ValueError(
            f"sentence pair count mismatch: {len(predicted)} predicted vs "
            f"{len(gold)} gold"
        )
    if not predicted:
        raise EmptyInputError("no sentence pairs to score")
    match_possible = predicted_total = match_sure = sure_total = 0
    for pred, g in zip(predicted, gold):
        if not g.is_gold:
            raise ValueError("gold link sets must carry sure/possible annotations")
        a = pred.links
        match_possible += len(a & g.possible)
        predicted_total += len(a)
        match_sure += len(a & g.sure)
        sure_total += len(g.sure)
    return _f1_from_counts(match_possible, predicted_total, match_sure, sure_total)


@dataclass
class EMAlignResult:
    """Outcome of the alternating align-and-project refinement."""

    linear_map: LinearMap
    alignments: list[AlignmentLinkSet]
    cover_costs: list[float]


def em_align_project(
    src_sets: list[np.ndarray],
    tgt_sets: list[np.ndarray],
    iterations: int,
    ridge_lambda: float = 0.0,
    source_lang: str = "src",
    target_lang: str = "tgt",
) -> EMAlignResult:
    """Alternately align words and refit a projection between the spaces.

    Inputs are per-sentence word-vector matrices for a paired corpus.
    Iteration 0 aligns the raw vectors; each following iteration fits a
    regression on the currently linked word pairs and re-aligns with the
    projected source vectors. The total edge-cover cost after each
    alignment phase is recorded in ``cover_costs``.
    """
    if len(src_sets) != len(tgt_sets):
        raise ValueError(
            f"corpus pair mismatch: {len(src_sets)} source sentences vs "
            f"{len(tgt_sets)} target sentences"
        )
    if not src_sets:
        raise EmptyInputError("empty corpus")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    dim = np.asarray(src_sets[0]).shape[1]
    linear_map = LinearMap.identity(dim, source_lang, target_lang)
    linear_map.ridge_lambda = float(ridge_lambda)

    def align_all(current_map: LinearMap):
        aligned = []
        total = 0.0
        for src_words, tgt_words in zip(src_sets, tgt_sets):
            projected = apply_projection(current_map, np.asarray(src_words))
            dists = cosine_distance_matrix(
                projected, np.asarray(tgt_words),
                side_a="source word", side_b="target word",
            )
            cover = min_weight_edge_cover(dists)
            aligned.append(cover)
            total += cover_cost(cover, dists)
        return aligned, total

    alignments, total = align_all(linear_map)
    costs = [total]
    for _ in range(iterations):
        xs, ys = [], []
        for pair_idx, cover in enumerate(alignments):
            src_words = np.asarray(src_sets[pair_idx], dtype=np.float64)
            tgt_words = np.asarray(tgt_sets[pair_idx], dtype=np.float64)
            for s, t in cover.sorted_links():
                xs.append(src_words[s])
                ys.append(tgt_words[t])
        linear_map = fit_projection(
            np.stack(xs),
            np.stack(ys),
            ridge_lambda=ridge_lambda,
            source_lang=source_lang,
            target_lang=target_lang,
        )
        alignments, total = align_all(linear_map)
        costs.append(total)
    return EMAlignResult(linear_map=linear_map, alignments=alignments, cover_costs=costs)


def centering_link_change_fraction(
    src_sets: list[np.ndarray], tgt_sets: list[np.ndarray]
) -> float:
    """Diagnostic: how much alignments move when word vectors are centered.

    Cosine distance is not invariant to a constant shift, so centering each
    side by its corpus-wide word mean can change the minimum cover. Returns
    the Jaccard distance between the raw and centered link sets, pooled
    over all sentence pairs (0 = identical alignments).
    """
    if len(src_sets) != len(tgt_sets) or not src_sets:
        raise ValueError("need equally many nonempty source and target sentences")
    src_mean = np.vstack([np.asarray(m, dtype=np.float64) for m in src_sets]).mean(axis=0)
    tgt_mean = np.vstack([np.asarray(m, dtype=np.float64) for m in tgt_sets]).mean(axis=0)
    union = 0
    intersection = 0
    for pair_idx, (src_words, tgt_words) in enumerate(zip(src_sets, tgt_sets)):
        raw = min_weight_edge_cover(
            cosine_distance_matrix(src_words, tgt_words)
        ).links
        centered = min_weight_edge_cover(
            cosine_distance_matrix(src_words - src_mean, tgt_words - tgt_mean)
        ).links
        union += len(raw | centered)
        intersection += len(raw & centered)
    return 1.0 - intersection / union if union else 0.0


def read_alignment_file(path: str, gold: bool = False) -> list[AlignmentLinkSet]:
    """Parse the one-line-per-sentence-pair link format.

    Tokens are whitespace separated: "i-j" is a (sure) link, "i?j" a
    possible-only link, indices 0-based source-target. A blank line is a
    sentence pair with no links.
    """
    link_sets = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            sure: list[Link] = []
            possible_only: list[Link] = []
            for token in line.split():
                if "?" in token:
                    parts = token.split("?")
                    bucket = possible_only
                else:
                    parts = token.split("-")
                    bucket = sure
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: malformed link token {token!r}"
                    )
                try:
                    link = (int(parts[0]), int(parts[1]))
                except ValueError as exc:
                    raise ValueError(
                        f"{path}:{lineno}: malformed link token {token!r}"
                    ) from exc
                if link[0] < 0 or link[1] < 0:
                    raise ValueError(
                        f"{path}:{lineno}: negative word index in {token!r}"
                    )
                bucket.append(link)
            if gold:
                link_sets.append(
                    AlignmentLinkSet.gold(sure, set(sure) | set(possible_only))
                )
            else:
                link_sets.append(AlignmentLinkSet.predicted(sure + possible_only))
    return link_sets


def write_alignment_file(link_sets: list[AlignmentLinkSet], path: str) -> None:
    """Inverse of read_alignment_file; links written in sorted order."""
    with open(path, "w", encoding="utf-8") as fh:
        for link_set in link_sets:
            tokens = []
            for s, t in link_set.sorted_links():
                if link_set.is_gold and (s, t) not in link_set.sure:
                    tokens.append(f"{s}?{t}")
                else:
                    tokens.append(f"{s}-{t}")
            fh.write(" ".join(tokens) + "\n")

"""Machine-translation quality estimation against HTER-style labels.

Two probes: an unsupervised one (cosine distance between the source and the
MT output representations, optionally centered or projected) and a
supervised ridge regression on the representations. Both are judged by
Pearson correlation with the quality labels. The label is treated as an
opaque nonnegative score; nothing downstream depends on how it was derived.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .embstore import EmbeddingSet, ReprSource, SentenceRepr, corpus_reprs
from .errors import (
    ConstantInputError,
    EmptyInputError,
    TruncatedPayloadError,
    ZeroVectorError,
)
from .geometry import LinearMap, apply_projection, ridge_least_squares


class FeatureMode(enum.Enum):
    SRC = "src"
    MT = "mt"
    BOTH = "both"


class QETransform(enum.Enum):
    PLAIN = "plain"
    CENTERED = "centered"
    PROJECTED = "projected"


@dataclass
class QERecord:
    """Source sentence and MT output representations with a quality label."""

    source_repr: SentenceRepr
    mt_repr: SentenceRepr
    hter: float

    def __post_init__(self):
        if self.hter < 0:
            raise ValueError(f"quality label must be nonnegative, got {self.hter}")
        if self.source_repr.vector.shape != self.mt_repr.vector.shape:
            raise ValueError(
                f"representation dimensions differ: "
                f"{self.source_repr.vector.shape} vs {self.mt_repr.vector.shape}"
            )


@dataclass
class QEModel:
    weights: np.ndarray
    bias: float
    feature_mode: FeatureMode
    ridge_lambda: float


def _sides(records: list[QERecord]) -> tuple[np.ndarray, np.ndarray]:
    src = np.stack([np.asarray(r.source_repr.vector, dtype=np.float64) for r in records])
    mt = np.stack([np.asarray(r.mt_repr.vector, dtype=np.float64) for r in records])
    return src, mt


def distance_score(
    records: list[QERecord],
    transform: QETransform = QETransform.PLAIN,
    linear_map: LinearMap | None = None,
) -> list[float]:
    """Per-record cosine distance between source and MT representations.

    CENTERED subtracts each side's own centroid (estimated from these
    records). PROJECTED maps the source side into the MT-output space
    through the supplied fitted map.
    """
    if not records:
        raise EmptyInputError("no records to score")
    src, mt = _sides(records)
    if transform is QETransform.CENTERED:
        src = src - src.mean(axis=0)
        mt = mt - mt.mean(axis=0)
    elif transform is QETransform.PROJECTED:
        if linear_map is None:
            raise ValueError("PROJECTED scoring needs a fitted map")
        src = apply_projection(linear_map, src)

    norms_src = np.linalg.norm(src, axis=1)
    norms_mt = np.linalg.norm(mt, axis=1)
    scores = []
    for i in range(len(records)):
        if norms_src[i] == 0.0 or norms_mt[i] == 0.0:
            raise ZeroVectorError(f"record {i} has a zero vector after {transform.value}")
        cos = float(np.dot(src[i], mt[i])) / (float(norms_src[i]) * float(norms_mt[i]))
        scores.append(float(min(max(1.0 - cos, 0.0), 2.0)))
    return scores


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValueError(f"length mismatch: {xa.shape} vs {ya.shape}")
    if xa.ndim != 1 or xa.size < 2:
        raise ValueError("need two equal-length series of at least 2 values")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.dot(dx, dx))
    sy = float(np.dot(dy, dy))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInputError("correlation undefined for a constant series")
    r = float(np.dot(dx, dy)) / np.sqrt(sx * sy)
    return float(min(max(r, -1.0), 1.0))


def features(records: list[QERecord], mode: FeatureMode) -> np.ndarray:
    """Feature matrix for supervised regression: src, MT, or both sides."""
    src, mt = _sides(records)
    if mode is FeatureMode.SRC:
        return src
    if mode is FeatureMode.MT:
        return mt
    return np.hstack([src, mt])


def train_qe(
    records: list[QERecord],
    feature_mode: FeatureMode = FeatureMode.BOTH,
    ridge_lambda: float = 0.0,
) -> QEModel:
    """Closed-form ridge regression of the quality label on the features."""
    if not records:
        raise EmptyInputError("no training records")
    X = features(records, feature_mode)
    y = np.array([r.hter for r in records], dtype=np.float64)
    weights, bias, _ = ridge_least_squares(X, y, ridge_lambda)
    return QEModel(
        weights=weights,
        bias=float(bias),
        feature_mode=feature_mode,
        ridge_lambda=float(ridge_lambda),
    )


def predict_qe(model: QEModel, records: list[QERecord]) -> list[float]:
    if not records:
        raise EmptyInputError("no records to score")
    X = features(records, model.feature_mode)
    if X.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match model "
            f"dimension {model.weights.shape[0]}"
        )
    return [float(v) for v in X @ model.weights + model.bias]


DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)


def grid_search_lambda(
    train_records: list[QERecord],
    val_records: list[QERecord],
    feature_mode: FeatureMode = FeatureMode.BOTH,
    grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID,
) -> tuple[float, dict[float, float]]:
    """Pick the ridge strength with the best validation correlation.

    Grid values whose predictions come out constant (so correlation is
    undefined) are skipped. Ties keep the earliest grid value.
    """
    if not val_records:
        raise EmptyInputError("no validation records")
    y_val = [r.hter for r in val_records]
    scores: dict[float, float] = {}
    best_lambda = None
    best_score = -np.inf
    for lam in grid:
        model = train_qe(train_records, feature_mode, lam)
        try:
            score = pearson(predict_qe(model, val_records), y_val)
        except ConstantInputError:
            continue
        scores[lam] = score
        if score > best_score:
            best_score = score
            best_lambda = lam
    if best_lambda is None:
        raise ConstantInputError(
            "no grid value produced a nonconstant validation prediction"
        )
    return best_lambda, scores


def split_records(
    records: list[QERecord], val_fraction: float, seed: int
) -> tuple[list[QERecord], list[QERecord]]:
    """Deterministic shuffled train/validation split."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(records))
    n_val = max(1, int(round(len(records) * val_fraction)))
    val_idx = set(int(i) for i in order[:n_val])
    train = [r for i, r in enumerate(records) if i not in val_idx]
    val = [r for i, r in enumerate(records) if i in val_idx]
    if not train:
        raise EmptyInputError("validation split swallowed every record")
    return train, val


def save_qe_model(model: QEModel, basename: str) -> None:
    """Two-file serialization: JSON manifest + little-endian f64 blob."""
    manifest = {
        "kind": "qe_model",
        "feature_mode": model.feature_mode.value,
        "ridge_lambda": model.ridge_lambda,
        "feature_dim": int(model.weights.shape[0]),
        "bias": model.bias,
    }
    with open(basename + ".json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(basename + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_qe_model(basename: str) -> QEModel:
    with open(basename + ".json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    dim = int(manifest["feature_dim"])
    with open(basename + ".bin", "rb") as fh:
        blob = fh.read()
    if len(blob) != dim * 8:
        raise TruncatedPayloadError(
            f"{basename}.bin holds {len(blob)} bytes, expected {dim * 8}"
        )
    return QEModel(
        weights=np.frombuffer(blob, dtype="<f8").copy(),
        bias=float(manifest["bias"]),
        feature_mode=FeatureMode(manifest["feature_mode"]),
        ridge_lambda=float(manifest["ridge_lambda"]),
    )


def load_labels(path: str) -> list[float]:
    """One float per line; blank lines are errors, not records."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            try:
                labels.append(float(text))
            except ValueError as exc:
                raise ValueError(
                    f"{path}:{lineno}: expected one float, got {text!r}"
                ) from exc
    return labels


def build_records(
    src_set: EmbeddingSet,
    mt_set: EmbeddingSet,
    labels: list[float],
    layer: int,
    source: ReprSource,
) -> list[QERecord]:
    """Join two parallel embedding sets with labels by line index."""
    n_src, n_mt = len(src_set.sentences), len(mt_set.sentences)
    if not (n_src == n_mt == len(labels)):
        raise ValueError(
            f"dataset sizes differ: {n_src} source sentences, "
            f"{n_mt} MT sentences, {len(labels)} labels"
        )
    src_reprs = corpus_reprs(src_set, layer, source)
    mt_reprs = corpus_reprs(mt_set, layer, source)
    return [
        QERecord(source_repr=s, mt_repr=m, hter=label)
        for s, m, label in zip(src_reprs, mt_reprs, labels)
    ]

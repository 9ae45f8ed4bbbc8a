"""Vector-space operations shared by every probing task.

Cosine distance, language centroids, centering, and the least-squares
projection that maps one language's representation space into another's.
All arithmetic accumulates in float64 regardless of storage precision.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embstore import ReprSource, SentenceRepr
from .errors import (
    DegenerateSystemError,
    EmptyInputError,
    MixedProvenanceError,
    TruncatedPayloadError,
    ZeroVectorError,
)


@dataclass
class Centroid:
    """Mean representation of a set of sentences in one language."""

    lang: str
    layer: int
    source: ReprSource
    vector: np.ndarray
    sample_count: int


@dataclass
class LinearMap:
    """Fitted affine projection x -> x @ weights + bias between spaces."""

    weights: np.ndarray
    bias: np.ndarray
    source_lang: str
    target_lang: str
    ridge_lambda: float

    @classmethod
    def identity(
        cls, dim: int, source_lang: str = "", target_lang: str = ""
    ) -> "LinearMap":
        return cls(
            weights=np.eye(dim, dtype=np.float64),
            bias=np.zeros(dim, dtype=np.float64),
            source_lang=source_lang,
            target_lang=target_lang,
            ridge_lambda=0.0,
        )


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v); raises ZeroVectorError if either norm is zero.

    A zero vector has no direction, so a silent fallback would corrupt any
    ranking built on these distances; callers must filter instead.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine distance undefined for a zero vector")
    dist = 1.0 - float(np.dot(u, v)) / (float(nu) * float(nv))
    return float(min(max(dist, 0.0), 2.0))


def cosine_distance_matrix(
    rows_a: np.ndarray, rows_b: np.ndarray, side_a: str = "left", side_b: str = "right"
) -> np.ndarray:
    """Pairwise cosine distances between the rows of two matrices.

    Zero rows raise ZeroVectorError naming the side and row index so the
    caller can report which sentence or word is degenerate.
    """
    a = np.asarray(rows_a, dtype=np.float64)
    b = np.asarray(rows_b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    for name, norms in ((side_a, norms_a), (side_b, norms_b)):
        zeros = np.flatnonzero(norms == 0.0)
        if zeros.size:
            raise ZeroVectorError(f"{name} row {int(zeros[0])} is a zero vector")
    sims = (a / norms_a[:, None]) @ (b / norms_b[:, None]).T
    return np.clip(1.0 - sims, 0.0, 2.0)


def stack_reprs(reprs: list[SentenceRepr]) -> tuple[np.ndarray, int, ReprSource]:
    """Stack representations into [N, D], enforcing uniform provenance."""
    if not reprs:
        raise EmptyInputError("no sentence representations given")
    layer = reprs[0].layer
    source = reprs[0].source
    dim = reprs[0].vector.shape[0]
    for i, r in enumerate(reprs):
        if r.layer != layer or r.source != source:
            raise MixedProvenanceError(
                f"representation {i} has (layer={r.layer}, source={r.source.value}), "
                f"expected (layer={layer}, source={source.value})"
            )
        if r.vector.shape[0] != dim:
            raise ValueError(
                f"representation {i} has dimension {r.vector.shape[0]}, expected {dim}"
            )
    mat = np.stack([np.asarray(r.vector, dtype=np.float64) for r in reprs])
    return mat, layer, source


def compute_centroid(reprs: list[SentenceRepr], lang: str = "") -> Centroid:
    """Arithmetic mean of the given representations."""
    mat, layer, source = stack_reprs(reprs)
    return Centroid(
        lang=lang,
        layer=layer,
        source=source,
        vector=mat.mean(axis=0),
        sample_count=len(reprs),
    )


def center(reprs: list[SentenceRepr], centroid: Centroid) -> list[SentenceRepr]:
    """Subtract the language centroid from every representation."""
    out = []
    for i, r in enumerate(reprs):
        if r.vector.shape != centroid.vector.shape:
            raise ValueError(
                f"representation {i} dimension {r.vector.shape[0]} does not "
                f"match centroid dimension {centroid.vector.shape[0]}"
            )
        out.append(
            SentenceRepr(
                vector=np.asarray(r.vector, dtype=np.float64) - centroid.vector,
                source=r.source,
                layer=r.layer,
            )
        )
    return out


def ridge_least_squares(
    features: np.ndarray, targets: np.ndarray, ridge_lambda: float
) -> tuple[np.ndarray, np.ndarray, int]:
    """Solve min over (W, b) of ||X W + b - Y||^2 + lambda ||W||_F^2.

    Solved on the bias-augmented system via an orthogonal factorization
    (SVD-backed lstsq), never by inverting normal equations; the penalty
    excludes the bias row. Returns (W, b, rank of the augmented system).
    """
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"row mismatch: {X.shape[0]} feature rows vs {Y.shape[0]} target rows"
        )
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit on zero rows")
    n, d = X.shape
    aug = np.hstack([X, np.ones((n, 1))])
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    if ridge_lambda > 0:
        penalty = np.hstack(
            [np.sqrt(ridge_lambda) * np.eye(d), np.zeros((d, 1))]
        )
        aug = np.vstack([aug, penalty])
        Y = np.vstack([Y, np.zeros((d, Y.shape[1]))])
    coef, _, rank, _ = np.linalg.lstsq(aug, Y, rcond=None)
    if ridge_lambda == 0.0 and rank < d + 1:
        raise DegenerateSystemError(
            "normal system is singular at ridge strength 0", rank=int(rank)
        )
    W = coef[:d]
    b = coef[d]
    if squeeze:
        return W[:, 0], b[0], int(rank)
    return W, b, int(rank)


def fit_projection(
    source_reprs: np.ndarray,
    target_reprs: np.ndarray,
    ridge_lambda: float = 0.0,
    source_lang: str = "",
    target_lang: str = "",
) -> LinearMap:
    """Fit the affine map sending source-space rows onto aligned target rows.

    Rows must be sentence-aligned pairs (row i of both matrices describes the
    same sentence). Deterministic for fixed inputs.
    """
    X = np.asarray(source_reprs, dtype=np.float64)
    Y = np.asarray(target_reprs, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"paired matrices must share shape: {X.shape} vs {Y.shape}")
    W, b, _ = ridge_least_squares(X, Y, ridge_lambda)
    return LinearMap(
        weights=W,
        bias=b,
        source_lang=source_lang,
        target_lang=target_lang,
        ridge_lambda=float(ridge_lambda),
    )


def apply_projection(linear_map: LinearMap, repr_vectors: np.ndarray) -> np.ndarray:
    """Project a vector (or matrix of row vectors) into the target space."""
    x = np.asarray(repr_vectors, dtype=np.float64)
    d = linear_map.weights.shape[0]
    if x.shape[-1] != d:
        raise ValueError(
            f"input dimension {x.shape[-1]} does not match map dimension {d}"
        )
    return x @ linear_map.weights + linear_map.bias


def project_reprs(linear_map: LinearMap, reprs: list[SentenceRepr]) -> list[SentenceRepr]:
    """Apply a fitted map to a list of sentence representations."""
    return [
        SentenceRepr(
            vector=apply_projection(linear_map, r.vector),
            source=r.source,
            layer=r.layer,
        )
        for r in reprs
    ]


def save_linear_map(linear_map: LinearMap, basename: str) -> None:
    """Write the two-file map serialization: <basename>.json + <basename>.bin.

    The JSON half carries provenance and shapes; the .bin half is the raw
    little-endian float64 weights followed by the bias.
    """
    d = int(linear_map.weights.shape[0])
    manifest = {
        "kind": "linear_map",
        "source_lang": linear_map.source_lang,
        "target_lang": linear_map.target_lang,
        "ridge_lambda": linear_map.ridge_lambda,
        "hidden_dim": d,
    }
    with open(basename + ".json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(basename + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(linear_map.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(linear_map.bias, dtype="<f8").tobytes())


def load_linear_map(basename: str) -> LinearMap:
    with open(basename + ".json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    d = int(manifest["hidden_dim"])
    with open(basename + ".bin", "rb") as fh:
        blob = fh.read()
    expected = (d * d + d) * 8
    if len(blob) != expected:
        raise TruncatedPayloadError(
            f"{basename}.bin holds {len(blob)} bytes, expected {expected}"
        )
    weights = np.frombuffer(blob[: d * d * 8], dtype="<f8").reshape(d, d).copy()
    bias = np.frombuffer(blob[d * d * 8 :], dtype="<f8").copy()
    return LinearMap(
        weights=weights,
        bias=bias,
        source_lang=manifest["source_lang"],
        target_lang=manifest["target_lang"],
        ridge_lambda=float(manifest["ridge_lambda"]),
    )

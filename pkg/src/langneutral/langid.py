"""Linear language-identification classifier over sentence representations.

Multinomial logistic regression trained with plain mini-batch gradient
descent: fixed learning rate, fixed epoch count, seeded shuffling. The
point is not classifier quality but a reproducible probe of how much
language identity the representations carry.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .embstore import SentenceRepr
from .errors import EmptyInputError, TruncatedPayloadError


@dataclass
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 0.01
    batch_size: int = 256
    seed: int = 42
    l2: float = 1e-4


@dataclass
class TrainingMeta:
    epochs: int
    learning_rate: float
    batch_size: int
    seed: int
    l2: float
    final_loss: float
    loss_history: tuple[float, ...] = field(default_factory=tuple)


@dataclass
class LinearClassifier:
    """weights [hidden_dim x num_classes]; column order matches class_labels."""

    weights: np.ndarray
    bias: np.ndarray
    class_labels: tuple[str, ...]
    training_meta: TrainingMeta | None = None


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _stack_data(
    data: list[tuple[SentenceRepr, str]]
) -> tuple[np.ndarray, list[str]]:
    if not data:
        raise EmptyInputError("no training examples")
    dim = data[0][0].vector.shape[0]
    for i, (r, _) in enumerate(data):
        if r.vector.shape[0] != dim:
            raise ValueError(
                f"example {i} has dimension {r.vector.shape[0]}, expected {dim}"
            )
    X = np.stack([np.asarray(r.vector, dtype=np.float64) for r, _ in data])
    labels = [lang for _, lang in data]
    return X, labels


def _objective(X, Y, W, b, l2) -> float:
    probs = _softmax(X @ W + b)
    ce = -np.mean(np.log(np.clip(probs[np.arange(len(X)), Y], 1e-300, None)))
    return float(ce + 0.5 * l2 * np.sum(W * W))


def train_classifier(
    data: list[tuple[SentenceRepr, str]], config: TrainConfig | None = None
) -> LinearClassifier:
    """Fit the classifier; deterministic for a fixed config seed.

    Weights start at zero; each epoch visits all examples once in a seeded
    shuffled order, in batches of config.batch_size. The recorded loss is
    the full-dataset cross-entropy plus the l2 penalty after each epoch.
    """
    config = config or TrainConfig()
    X, labels = _stack_data(data)
    class_labels = tuple(sorted(set(labels)))
    if len(class_labels) < 2:
        raise ValueError(f"need at least 2 classes, got {class_labels}")
    label_index = {lang: k for k, lang in enumerate(class_labels)}
    Y = np.array([label_index[lang] for lang in labels], dtype=np.intp)

    n, dim = X.shape
    k = len(class_labels)
    W = np.zeros((dim, k), dtype=np.float64)
    b = np.zeros(k, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    eye = np.eye(k)

    loss_history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            Xb, Yb = X[batch], Y[batch]
            probs = _softmax(Xb @ W + b)
            delta = probs - eye[Yb]
            grad_w = Xb.T @ delta / len(batch) + config.l2 * W
            grad_b = delta.mean(axis=0)
            W -= config.learning_rate * grad_w
            b -= config.learning_rate * grad_b
        loss_history.append(_objective(X, Y, W, b, config.l2))

    meta = TrainingMeta(
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        seed=config.seed,
        l2=config.l2,
        final_loss=loss_history[-1] if loss_history else _objective(X, Y, W, b, config.l2),
        loss_history=tuple(loss_history),
    )
    return LinearClassifier(
        weights=W, bias=b, class_labels=class_labels, training_meta=meta
    )


def predict_labels(clf: LinearClassifier, X: np.ndarray) -> list[str]:
    """Argmax decision; score ties go to the earliest class label."""
    if X.shape[1] != clf.weights.shape[0]:
        raise ValueError(
            f"input dimension {X.shape[1]} does not match classifier "
            f"dimension {clf.weights.shape[0]}"
        )
    scores = X @ clf.weights + clf.bias
    return [clf.class_labels[int(i)] for i in np.argmax(scores, axis=1)]


@dataclass
class EvalResult:
    accuracy: float
    per_language: dict[str, float]
    confusion: dict[tuple[str, str], int]


def evaluate_classifier(
    clf: LinearClassifier, data: list[tuple[SentenceRepr, str]]
) -> EvalResult:
    """Accuracy, per-language accuracy, and confusion counts."""
    X, labels = _stack_data(data)
    known = set(clf.class_labels)
    for i, lang in enumerate(labels):
        if lang not in known:
            raise ValueError(f"example {i} has unknown label {lang!r}")
    predictions = predict_labels(clf, X)

    confusion: dict[tuple[str, str], int] = {}
    per_lang_total: dict[str, int] = {}
    per_lang_correct: dict[str, int] = {}
    correct = 0
    for truth, pred in zip(labels, predictions):
        confusion[(truth, pred)] = confusion.get((truth, pred), 0) + 1
        per_lang_total[truth] = per_lang_total.get(truth, 0) + 1
        if truth == pred:
            correct += 1
            per_lang_correct[truth] = per_lang_correct.get(truth, 0) + 1
    per_language = {
        lang: per_lang_correct.get(lang, 0) / total
        for lang, total in sorted(per_lang_total.items())
    }
    return EvalResult(
        accuracy=correct / len(labels),
        per_language=per_language,
        confusion=confusion,
    )


def save_classifier(clf: LinearClassifier, basename: str) -> None:
    """Two-file serialization: JSON manifest + little-endian f64 blob."""
    meta = clf.training_meta
    manifest = {
        "kind": "linear_classifier",
        "class_labels": list(clf.class_labels),
        "hidden_dim": int(clf.weights.shape[0]),
        "training_meta": None
        if meta is None
        else {
            "epochs": meta.epochs,
            "learning_rate": meta.learning_rate,
            "batch_size": meta.batch_size,
            "seed": meta.seed,
            "l2": meta.l2,
            "final_loss": meta.final_loss,
        },
    }
    with open(basename + ".json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(basename + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(clf.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(clf.bias, dtype="<f8").tobytes())


def load_classifier(basename: str) -> LinearClassifier:
    with open(basename + ".json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    labels = tuple(manifest["class_labels"])
    dim = int(manifest["hidden_dim"])
    k = len(labels)
    with open(basename + ".bin", "rb") as fh:
        blob = fh.read()
    expected = (dim * k + k) * 8
    if len(blob) != expected:
        raise TruncatedPayloadError(
            f"{basename}.bin holds {len(blob)} bytes, expected {expected}"
        )
    weights = np.frombuffer(blob[: dim * k * 8], dtype="<f8").reshape(dim, k).copy()
    bias = np.frombuffer(blob[dim * k * 8 :], dtype="<f8").copy()
    meta_raw = manifest.get("training_meta")
    meta = None
    if meta_raw is not None:
        meta = TrainingMeta(
            epochs=meta_raw["epochs"],
            learning_rate=meta_raw["learning_rate"],
            batch_size=meta_raw["batch_size"],
            seed=meta_raw["seed"],
            l2=meta_raw["l2"],
            final_loss=meta_raw["final_loss"],
        )
    return LinearClassifier(
        weights=weights, bias=bias, class_labels=labels, training_meta=meta
    )


def load_corpus_listing(path: str) -> list[tuple[str, str]]:
    """TSV "lang<TAB>embedding-file-path" rows, in file order."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(
                    f"{path}:{lineno}: expected 'lang<TAB>path', got {line!r}"
                )
            rows.append((parts[0], parts[1]))
    if not rows:
        raise EmptyInputError(f"{path}: empty corpus listing")
    return rows

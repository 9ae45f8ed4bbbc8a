"""Binary storage for per-layer contextual embeddings, plus pooling.

One file holds every layer of every sentence of one corpus in one language,
so layer/pooling sweeps at analysis time never touch the encoder again.

File layout (all integers u32, all floats f32, little-endian):

    magic "EMB1" | version=1 | num_layers L | hidden_dim D | num_sentences N
    | manifest byte length | UTF-8 JSON manifest (carries "lang" at minimum)
    | per sentence:
        num_tokens T | num_words W
        | W groups, each: group length, then that many token indices
        | per layer: D floats ([cls] state), then T*D floats (token states,
          row-major)

Layer 0 is the embedding-layer output; indices increase toward the model
output. Token states exclude special positions such as [cls]/[sep]; the
[cls] state is stored separately.
"""
from __future__ import annotations

import enum
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    InvariantViolationError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

MAGIC = b"EMB1"
VERSION = 1


class ReprSource(enum.Enum):
    """How a single sentence vector is derived from stored states."""

    CLS = "cls"
    MEAN_POOL = "mean"


@dataclass
class SentenceEmbeddings:
    """All stored states for one sentence.

    token_vectors: float32 [num_layers, num_tokens, hidden_dim]
    cls_vectors:   float32 [num_layers, hidden_dim]
    word_groups:   token-index lists, one per surface word, which must
                   partition 0..num_tokens-1 into contiguous ordered runs
    """

    token_vectors: np.ndarray
    cls_vectors: np.ndarray
    word_groups: list[list[int]]

    @property
    def num_tokens(self) -> int:
        return int(self.token_vectors.shape[1])

    @property
    def num_words(self) -> int:
        return len(self.word_groups)


@dataclass
class EmbeddingSet:
    """A corpus worth of per-layer embeddings for one language."""

    lang: str
    num_layers: int
    hidden_dim: int
    sentences: list[SentenceEmbeddings]
    manifest: dict = field(default_factory=dict)

    @classmethod
    def create(
        cls,
        lang: str,
        sentences: list[SentenceEmbeddings],
        num_layers: int,
        hidden_dim: int,
        manifest: dict | None = None,
    ) -> "EmbeddingSet":
        """Build a set with a manifest whose "lang" key matches ``lang``."""
        manifest = dict(manifest or {})
        manifest["lang"] = lang
        out = cls(lang, num_layers, hidden_dim, sentences, manifest)
        validate_embedding_set(out)
        return out


@dataclass
class SentenceRepr:
    """One fixed-width vector standing in for a whole sentence."""

    vector: np.ndarray
    source: ReprSource
    layer: int


def validate_embedding_set(emb_set: EmbeddingSet) -> None:
    """Raise InvariantViolationError on any structural defect."""
    if emb_set.num_layers < 1:
        raise InvariantViolationError(
            f"num_layers must be >= 1, got {emb_set.num_layers}"
        )
    if emb_set.hidden_dim < 1:
        raise InvariantViolationError(
            f"hidden_dim must be >= 1, got {emb_set.hidden_dim}"
        )
    if not isinstance(emb_set.manifest, dict):
        raise InvariantViolationError("manifest must be a JSON object")
    if emb_set.manifest.get("lang") != emb_set.lang:
        raise InvariantViolationError(
            f"manifest['lang'] {emb_set.manifest.get('lang')!r} does not "
            f"match set lang {emb_set.lang!r}"
        )
    L, D = emb_set.num_layers, emb_set.hidden_dim
    for idx, sent in enumerate(emb_set.sentences):
        tv, cv = sent.token_vectors, sent.cls_vectors
        if tv.ndim != 3 or tv.shape[0] != L or tv.shape[2] != D:
            raise InvariantViolationError(
                f"sentence {idx}: token_vectors shape {tv.shape} does not "
                f"match (num_layers={L}, *, hidden_dim={D})"
            )
        if cv.shape != (L, D):
            raise InvariantViolationError(
                f"sentence {idx}: cls_vectors shape {cv.shape} != ({L}, {D})"
            )
        num_tokens = tv.shape[1]
        flat: list[int] = []
        for g, group in enumerate(sent.word_groups):
            if len(group) == 0:
                raise InvariantViolationError(
                    f"sentence {idx}: word group {g} is empty"
                )
            flat.extend(int(i) for i in group)
        if flat != list(range(num_tokens)):
            raise InvariantViolationError(
                f"sentence {idx}: word_groups do not partition token indices "
                f"0..{num_tokens - 1} into contiguous ordered groups"
            )


def write_embedding_set(emb_set: EmbeddingSet, destination: io.BufferedIOBase) -> int:
    """Serialize to a binary sink; returns the number of bytes written.

    The set is validated before the first byte goes out, so a failed
    precondition never leaves a partial file behind.
    """
    validate_embedding_set(emb_set)
    manifest_bytes = json.dumps(
        emb_set.manifest, sort_keys=True, ensure_ascii=False
    ).encode("utf-8")

    written = 0
    written += destination.write(MAGIC)
    written += destination.write(
        struct.pack(
            "<IIII",
            VERSION,
            emb_set.num_layers,
            emb_set.hidden_dim,
            len(emb_set.sentences),
        )
    )
    written += destination.write(struct.pack("<I", len(manifest_bytes)))
    written += destination.write(manifest_bytes)

    for sent in emb_set.sentences:
        written += destination.write(
            struct.pack("<II", sent.num_tokens, sent.num_words)
        )
        for group in sent.word_groups:
            written += destination.write(struct.pack("<I", len(group)))
            written += destination.write(
                struct.pack(f"<{len(group)}I", *[int(i) for i in group])
            )
        for layer in range(emb_set.num_layers):
            cls_row = np.ascontiguousarray(sent.cls_vectors[layer], dtype="<f4")
            written += destination.write(cls_row.tobytes())
            tokens = np.ascontiguousarray(sent.token_vectors[layer], dtype="<f4")
            written += destination.write(tokens.tobytes())
    return written


def save_embedding_set(emb_set: EmbeddingSet, path: str) -> int:
    with open(path, "wb") as fh:
        return write_embedding_set(emb_set, fh)


class _Cursor:
    """Tracks the read offset so parse errors can name where they happened."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedPayloadError(
                f"expected {n} bytes for {what} at offset {self.offset}, "
                f"only {len(self.data) - self.offset} remain"
            )
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4", count=count).copy()


def read_embedding_set(source: io.BufferedIOBase | bytes) -> EmbeddingSet:
    """Parse a binary embedding file, validating every invariant."""
    data = source if isinstance(source, bytes) else source.read()
    cur = _Cursor(data)

    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    version = cur.u32("version")
    if version != VERSION:
        raise UnsupportedVersionError(
            f"unsupported format version {version} at offset 4"
        )
    num_layers = cur.u32("num_layers")
    hidden_dim = cur.u32("hidden_dim")
    num_sentences = cur.u32("num_sentences")

    manifest_len = cur.u32("manifest length")
    manifest_at = cur.offset
    manifest_raw = cur.take(manifest_len, "manifest")
    try:
        manifest = json.loads(manifest_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvariantViolationError(
            f"manifest at offset {manifest_at} is not valid UTF-8 JSON: {exc}"
        ) from exc
    if not isinstance(manifest, dict):
        raise InvariantViolationError(
            f"manifest at offset {manifest_at} must be a JSON object"
        )

    sentences = []
    for s in range(num_sentences):
        num_tokens = cur.u32(f"sentence {s} num_tokens")
        num_words = cur.u32(f"sentence {s} num_words")
        word_groups = []
        for w in range(num_words):
            glen = cur.u32(f"sentence {s} group {w} length")
            raw = cur.take(4 * glen, f"sentence {s} group {w} indices")
            word_groups.append(list(struct.unpack(f"<{glen}I", raw)))
        cls_vectors = np.empty((num_layers, hidden_dim), dtype=np.float32)
        token_vectors = np.empty((num_layers, num_tokens, hidden_dim), dtype=np.float32)
        for layer in range(num_layers):
            cls_vectors[layer] = cur.f32_array(
                hidden_dim, f"sentence {s} layer {layer} cls vector"
            )
            token_vectors[layer] = cur.f32_array(
                num_tokens * hidden_dim, f"sentence {s} layer {layer} token states"
            ).reshape(num_tokens, hidden_dim)
        sentences.append(SentenceEmbeddings(token_vectors, cls_vectors, word_groups))

    if "lang" not in manifest:
        raise InvariantViolationError("manifest is missing the 'lang' key")
    emb_set = EmbeddingSet(
        lang=manifest["lang"],
        num_layers=num_layers,
        hidden_dim=hidden_dim,
        sentences=sentences,
        manifest=manifest,
    )
    validate_embedding_set(emb_set)
    return emb_set


def load_embedding_set(path: str) -> EmbeddingSet:
    with open(path, "rb") as fh:
        return read_embedding_set(fh)


def _check_indices(emb_set: EmbeddingSet, sentence: int, layer: int) -> None:
    if not 0 <= sentence < len(emb_set.sentences):
        raise IndexError(
            f"sentence index {sentence} out of range for corpus of "
            f"{len(emb_set.sentences)} sentences"
        )
    if not 0 <= layer < emb_set.num_layers:
        raise IndexError(
            f"layer index {layer} out of range for {emb_set.num_layers} layers"
        )


def sentence_repr(
    emb_set: EmbeddingSet, sentence: int, layer: int, source: ReprSource
) -> SentenceRepr:
    """Single-vector sentence representation: stored [cls] state or the
    arithmetic mean over the sentence's token states at that layer."""
    _check_indices(emb_set, sentence, layer)
    sent = emb_set.sentences[sentence]
    if source is ReprSource.CLS:
        vec = sent.cls_vectors[layer].astype(np.float64)
    else:
        if sent.num_tokens == 0:
            raise InvariantViolationError(
                f"sentence {sentence} has no tokens to mean-pool"
            )
        vec = sent.token_vectors[layer].astype(np.float64).mean(axis=0)
    return SentenceRepr(vector=vec, source=source, layer=layer)


def corpus_reprs(
    emb_set: EmbeddingSet, layer: int, source: ReprSource
) -> list[SentenceRepr]:
    """Sentence representations for the whole corpus, in file order."""
    return [
        sentence_repr(emb_set, i, layer, source)
        for i in range(len(emb_set.sentences))
    ]


def word_vectors(emb_set: EmbeddingSet, sentence: int, layer: int) -> np.ndarray:
    """One row per surface word: the mean of its subword token states."""
    _check_indices(emb_set, sentence, layer)
    sent = emb_set.sentences[sentence]
    tokens = sent.token_vectors[layer].astype(np.float64)
    out = np.empty((sent.num_words, emb_set.hidden_dim), dtype=np.float64)
    for w, group in enumerate(sent.word_groups):
        out[w] = tokens[group].mean(axis=0)
    return out

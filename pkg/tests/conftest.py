import numpy as np
import pytest

from langneutral.embstore import (
    EmbeddingSet,
    ReprSource,
    SentenceEmbeddings,
    SentenceRepr,
)


def make_repr(vector, source=ReprSource.MEAN_POOL, layer=0):
    return SentenceRepr(
        vector=np.asarray(vector, dtype=np.float64), source=source, layer=layer
    )


def make_reprs(matrix, source=ReprSource.MEAN_POOL, layer=0):
    return [make_repr(row, source, layer) for row in np.asarray(matrix)]


def random_word_groups(rng, num_tokens):
    """Random contiguous partition of 0..num_tokens-1."""
    groups = []
    start = 0
    while start < num_tokens:
        size = int(rng.integers(1, num_tokens - start + 1))
        groups.append(list(range(start, start + size)))
        start += size
    return groups


def random_embedding_set(
    rng,
    lang="xx",
    num_sentences=3,
    num_layers=2,
    hidden_dim=4,
    max_tokens=5,
    manifest=None,
):
    sentences = []
    for _ in range(num_sentences):
        num_tokens = int(rng.integers(1, max_tokens + 1))
        sentences.append(
            SentenceEmbeddings(
                token_vectors=rng.normal(
                    size=(num_layers, num_tokens, hidden_dim)
                ).astype(np.float32),
                cls_vectors=rng.normal(size=(num_layers, hidden_dim)).astype(
                    np.float32
                ),
                word_groups=random_word_groups(rng, num_tokens),
            )
        )
    return EmbeddingSet.create(
        lang, sentences, num_layers=num_layers, hidden_dim=hidden_dim,
        manifest=manifest or {"model": "synthetic"},
    )


def parallel_embedding_sets(rng, langs, num_sentences=6, num_layers=2, hidden_dim=6):
    """Index-aligned sets: same token counts and word groups per sentence."""
    shapes = [int(rng.integers(2, 5)) for _ in range(num_sentences)]
    groups = [random_word_groups(rng, t) for t in shapes]
    sets = {}
    for lang in langs:
        sentences = []
        for t, g in zip(shapes, groups):
            sentences.append(
                SentenceEmbeddings(
                    token_vectors=rng.normal(size=(num_layers, t, hidden_dim)).astype(
                        np.float32
                    ),
                    cls_vectors=rng.normal(size=(num_layers, hidden_dim)).astype(
                        np.float32
                    ),
                    word_groups=[list(x) for x in g],
                )
            )
        sets[lang] = EmbeddingSet.create(
            lang, sentences, num_layers=num_layers, hidden_dim=hidden_dim
        )
    return sets


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for outcome in ("passed", "failed", "skipped"):
        reports.extend(terminalreporter.stats.get(outcome, []))
    acceptance = sorted(
        (
            r
            for r in reports
            if "acceptance" in r.nodeid and r.when in ("call", "setup")
        ),
        key=lambda r: r.nodeid,
    )
    if not acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for r in acceptance:
        name = r.nodeid.split("::")[-1]
        status = "PASS" if r.passed else ("SKIP" if r.skipped else "FAIL")
        terminalreporter.write_line(f"[{status}] {name}")

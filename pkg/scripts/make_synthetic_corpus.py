#!/usr/bin/env python3
"""Generate a synthetic multi-parallel corpus of embedding files.

Each "language" shares a latent sentence code, displaced by a per-language
constant shift plus Gaussian noise, which is enough structure to exercise
every subcommand: plain retrieval degrades under the shift, centering
repairs it, and a fitted projection repairs it completely. Also writes a
held-out parallel set per language (for projection fitting), a gold
alignment file (identity alignment, correct by construction since word i
of every language carries the same latent word code), a langid corpus
listing, and quality labels correlated with injected MT corruption.
"""
import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from langneutral.alignment import AlignmentLinkSet, write_alignment_file
from langneutral.embstore import (
    EmbeddingSet,
    SentenceEmbeddings,
    save_embedding_set,
)


def build_set(lang, latent, word_counts, shift, sigma, num_layers, rng):
    """One sentence per latent row; word i shares latent code across langs."""
    dim = latent.shape[1]
    sentences = []
    for row, num_words in zip(latent, word_counts):
        word_codes = np.stack(
            [np.roll(row, i) for i in range(num_words)]
        )  # distinct but deterministic per-word codes
        tokens = (
            word_codes[None, :, :]
            + shift
            + sigma * rng.normal(size=(num_layers, num_words, dim))
        ).astype(np.float32)
        cls = (row + shift + sigma * rng.normal(size=(num_layers, dim))).astype(
            np.float32
        )
        sentences.append(
            SentenceEmbeddings(
                token_vectors=tokens,
                cls_vectors=cls,
                word_groups=[[i] for i in range(num_words)],
            )
        )
    return EmbeddingSet.create(
        lang,
        sentences,
        num_layers=num_layers,
        hidden_dim=dim,
        manifest={"model": "synthetic-shift", "tokenizer": "none"},
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="synthetic_corpus")
    parser.add_argument("--langs", nargs="+", default=["cs", "de", "en"])
    parser.add_argument("--sentences", type=int, default=60)
    parser.add_argument("--fit-sentences", type=int, default=40)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--layers", type=int, default=3)
    parser.add_argument("--shift-scale", type=float, default=6.0)
    parser.add_argument("--noise", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    shifts = {lang: args.shift_scale * rng.normal(size=args.dim) for lang in args.langs}
    latent_eval = rng.normal(size=(args.sentences, args.dim))
    latent_fit = rng.normal(size=(args.fit_sentences, args.dim))
    eval_words = [int(rng.integers(2, 5)) for _ in range(args.sentences)]
    fit_words = [int(rng.integers(2, 5)) for _ in range(args.fit_sentences)]

    listing_rows = []
    for lang in args.langs:
        emb_set = build_set(
            lang, latent_eval, eval_words, shifts[lang], args.noise, args.layers, rng
        )
        path = os.path.join(args.out_dir, f"{lang}.emb1")
        save_embedding_set(emb_set, path)
        listing_rows.append(f"{lang}\t{path}")
        fit_set = build_set(
            lang, latent_fit, fit_words, shifts[lang], args.noise, args.layers, rng
        )
        save_embedding_set(fit_set, os.path.join(args.out_dir, f"{lang}.dev.emb1"))
        print(f"wrote {path} (+ dev set)")

    # gold word alignment for the first language pair: word i aligns to
    # word i (same latent word code on both sides)
    first, second = args.langs[0], args.langs[1]
    gold = [
        AlignmentLinkSet.gold({(i, i) for i in range(n)}, {(i, i) for i in range(n)})
        for n in eval_words
    ]
    gold_path = os.path.join(args.out_dir, f"{first}-{second}.gold.align")
    write_alignment_file(gold, gold_path)
    print(f"wrote {gold_path}")

    listing_path = os.path.join(args.out_dir, "corpus.tsv")
    with open(listing_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(listing_rows) + "\n")
    print(f"wrote {listing_path}")

    # QE pair: MT side is language 0 corrupted by a per-sentence amount,
    # and that amount is the quality label
    qe_noise = rng.uniform(0.0, 1.0, size=args.sentences)
    mt_latent = latent_eval + qe_noise[:, None] * rng.normal(
        size=(args.sentences, args.dim)
    )
    mt_set = build_set(
        "mt", mt_latent, eval_words, shifts[first], args.noise, args.layers, rng
    )
    save_embedding_set(mt_set, os.path.join(args.out_dir, "mt.emb1"))
    labels_path = os.path.join(args.out_dir, "hter.txt")
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("".join(f"{float(v)!r}\n" for v in qe_noise))
    print(f"wrote {os.path.join(args.out_dir, 'mt.emb1')} and {labels_path}")


if __name__ == "__main__":
    main()

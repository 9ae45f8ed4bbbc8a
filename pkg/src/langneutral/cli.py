"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data/validation error. Every run
prints a report whose first element is a JSON provenance header (inputs,
config, toolkit version); nothing in the output depends on wall-clock time,
so identical inputs and seed give byte-identical output. Input paths are
checked before any computation starts, and no subcommand ever mutates its
inputs.

Heavy imports happen inside the handlers so the --threads cap (or the
LANGNEUTRAL_THREADS environment variable) can pin BLAS thread pools before
numpy loads.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .report import FORMATS, best_row, provenance, render


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    data errors, so usage problems exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _require_files(*paths: str) -> None:
    for path in paths:
        if path is not None and not os.path.exists(path):
            from .errors import ToolkitError

            raise ToolkitError(f"input file not found: {path}")


def _repr_source(name: str):
    from .embstore import ReprSource

    return ReprSource.CLS if name == "cls" else ReprSource.MEAN_POOL


def _emit(args, rows: list[dict], prov: dict) -> None:
    text = render(rows, args.format, prov)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        sys.stdout.write(text)
    else:
        sys.stdout.write(text)


def _config_dict(args, skip=("func", "out", "format", "threads")) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or key == "command":
            continue
        if callable(value):
            continue
        cfg[key] = value
    cfg.setdefault("seed", None)
    return cfg


# ---------------------------------------------------------------- reprs CSV

def _write_reprs_csv(path: str, lang: str, reprs) -> None:
    """Pooled-representation CSV: metadata comment, header, one row each."""
    if not reprs:
        from .errors import EmptyInputError

        raise EmptyInputError("no representations to write")
    with open(path, "w", encoding="utf-8") as fh:
        first = reprs[0]
        fh.write(
            f"# lang={lang} layer={first.layer} source={first.source.value}\n"
        )
        fh.write("lang," + ",".join(f"dim{i}" for i in range(len(first.vector))) + "\n")
        for r in reprs:
            fh.write(lang + "," + ",".join(repr(float(x)) for x in r.vector) + "\n")


def _read_reprs_csv(path: str):
    import numpy as np

    from .embstore import ReprSource, SentenceRepr

    with open(path, "r", encoding="utf-8") as fh:
        meta_line = fh.readline().rstrip("\n")
        if not meta_line.startswith("# "):
            raise ValueError(f"{path}: missing metadata comment line")
        meta = dict(kv.split("=", 1) for kv in meta_line[2:].split())
        fh.readline()  # header
        reprs = []
        layer = int(meta["layer"])
        source = ReprSource(meta["source"])
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            reprs.append(SentenceRepr(vector=vec, source=source, layer=layer))
    return meta["lang"], reprs


def _load_reprs(args):
    """Common input resolution: an embedding file plus axis, or a reprs CSV."""
    from .embstore import corpus_reprs, load_embedding_set

    if getattr(args, "reprs", None):
        _require_files(args.reprs)
        return _read_reprs_csv(args.reprs)
    if not getattr(args, "emb", None):
        raise ValueError("either --emb or --reprs is required")
    _require_files(args.emb)
    emb_set = load_embedding_set(args.emb)
    reprs = corpus_reprs(emb_set, args.layer, _repr_source(args.source))
    return emb_set.lang, reprs


def _load_corpus(paths, layer, source):
    """Load several embedding files into a lang -> reprs map."""
    from .embstore import corpus_reprs, load_embedding_set

    corpus = {}
    for path in paths:
        emb_set = load_embedding_set(path)
        if emb_set.lang in corpus:
            raise ValueError(f"duplicate language {emb_set.lang!r} in inputs")
        corpus[emb_set.lang] = corpus_reprs(emb_set, layer, source)
    return corpus


# ---------------------------------------------------------------- handlers

def _cmd_info(args) -> int:
    from .embstore import load_embedding_set

    _require_files(args.emb)
    emb_set = load_embedding_set(args.emb)
    doc = {
        "provenance": provenance("info", _config_dict(args), {"emb": args.emb}),
        "lang": emb_set.lang,
        "num_layers": emb_set.num_layers,
        "hidden_dim": emb_set.hidden_dim,
        "num_sentences": len(emb_set.sentences),
        "manifest": emb_set.manifest,
    }
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_centroid(args) -> int:
    from .geometry import compute_centroid

    lang, reprs = _load_reprs(args)
    centroid = compute_centroid(reprs, lang=lang)
    doc = {
        "kind": "centroid",
        "lang": centroid.lang,
        "layer": centroid.layer,
        "source": centroid.source.value,
        "sample_count": centroid.sample_count,
        "vector": [float(x) for x in centroid.vector],
    }
    with open(args.centroid_out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    prov = provenance(
        "centroid", _config_dict(args), {"emb": args.emb, "reprs": args.reprs}
    )
    rows = [
        {
            "lang": centroid.lang,
            "layer": centroid.layer,
            "source": centroid.source.value,
            "sample_count": centroid.sample_count,
            "centroid_out": args.centroid_out,
        }
    ]
    _emit(args, rows, prov)
    return 0


def _load_centroid(path):
    import numpy as np

    from .embstore import ReprSource
    from .geometry import Centroid

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return Centroid(
        lang=doc["lang"],
        layer=int(doc["layer"]),
        source=ReprSource(doc["source"]),
        vector=np.array(doc["vector"], dtype=np.float64),
        sample_count=int(doc["sample_count"]),
    )


def _cmd_center(args) -> int:
    from .geometry import center

    _require_files(args.centroid)
    lang, reprs = _load_reprs(args)
    centroid = _load_centroid(args.centroid)
    centered = center(reprs, centroid)
    _write_reprs_csv(args.centered_out, lang, centered)
    prov = provenance(
        "center",
        _config_dict(args),
        {"emb": args.emb, "reprs": args.reprs, "centroid": args.centroid},
    )
    _emit(args, [{"lang": lang, "n": len(centered), "centered_out": args.centered_out}], prov)
    return 0


def _cmd_fit_proj(args) -> int:
    from .geometry import apply_projection, fit_projection, save_linear_map, stack_reprs
    import numpy as np

    _require_files(args.src_emb, args.tgt_emb)
    src_lang, src_reprs = _load_reprs_from(args.src_emb, args)
    tgt_lang, tgt_reprs = _load_reprs_from(args.tgt_emb, args)
    src_mat, _, _ = stack_reprs(src_reprs)
    tgt_mat, _, _ = stack_reprs(tgt_reprs)
    linear_map = fit_projection(
        src_mat,
        tgt_mat,
        ridge_lambda=args.ridge_lambda,
        source_lang=src_lang,
        target_lang=tgt_lang,
    )
    save_linear_map(linear_map, args.map_out)
    residual = float(
        np.sqrt(np.mean((apply_projection(linear_map, src_mat) - tgt_mat) ** 2))
    )
    prov = provenance(
        "fit-proj",
        _config_dict(args),
        {"src_emb": args.src_emb, "tgt_emb": args.tgt_emb},
    )
    rows = [
        {
            "source_lang": src_lang,
            "target_lang": tgt_lang,
            "layer": args.layer,
            "source": args.source,
            "ridge_lambda": args.ridge_lambda,
            "n": src_mat.shape[0],
            "train_rmse": residual,
            "map_out": args.map_out,
        }
    ]
    _emit(args, rows, prov)
    return 0


def _load_reprs_from(path, args):
    from .embstore import corpus_reprs, load_embedding_set

    emb_set = load_embedding_set(path)
    return emb_set.lang, corpus_reprs(emb_set, args.layer, _repr_source(args.source))


def _retrieval_rows(corpus, fit_corpus, transform, args, layer):
    from .retrieval import mean_accuracy, retrieval_matrix

    results = retrieval_matrix(
        corpus,
        transform=transform,
        pivot=args.pivot,
        fit_corpus=fit_corpus,
        ridge_lambda=args.ridge_lambda,
    )
    rows = []
    for (src, tgt) in sorted(results):
        r = results[(src, tgt)]
        rows.append(
            {
                "source_lang": src,
                "target_lang": tgt,
                "layer": layer,
                "source": args.source,
                "transform": transform.value,
                "accuracy": r.accuracy,
                "n": len(r.predictions),
            }
        )
    avg = {
        "source_lang": "average",
        "target_lang": "average",
        "layer": layer,
        "source": args.source,
        "transform": transform.value,
        "accuracy": mean_accuracy(results),
        "n": len(next(iter(results.values())).predictions),
    }
    rows.append(avg)
    return rows, avg


def _cmd_retrieve(args) -> int:
    from .embstore import load_embedding_set
    from .retrieval import Transform

    _require_files(*args.emb)
    _require_files(*(args.fit_emb or []))
    transform = Transform(args.transform)
    if transform is Transform.PROJECTED:
        if not args.fit_emb:
            raise ValueError(
                "projected retrieval needs --fit-emb, one held-out parallel "
                "file per language"
            )
        if not args.pivot:
            raise ValueError("projected retrieval needs --pivot")

    num_layers = min(load_embedding_set(p).num_layers for p in args.emb)
    layers = range(num_layers) if args.all_layers else [args.layer]
    source = _repr_source(args.source)

    all_rows: list[dict] = []
    avg_rows: list[dict] = []
    for layer in layers:
        corpus = _load_corpus(args.emb, layer, source)
        fit_corpus = (
            _load_corpus(args.fit_emb, layer, source) if args.fit_emb else None
        )
        rows, avg = _retrieval_rows(corpus, fit_corpus, transform, args, layer)
        all_rows.extend(rows)
        avg_rows.append(avg)
    if args.all_layers:
        all_rows.append(best_row(avg_rows, "accuracy"))
    prov = provenance(
        "retrieve",
        _config_dict(args),
        {"emb": list(args.emb), "fit_emb": list(args.fit_emb or [])},
    )
    _emit(args, all_rows, prov)
    return 0


def _cmd_align(args) -> int:
    from .alignment import (
        align_corpus,
        corpus_alignment_f1,
        read_alignment_file,
        write_alignment_file,
    )
    from .embstore import load_embedding_set
    from .geometry import load_linear_map

    _require_files(args.src_emb, args.tgt_emb, args.gold)
    if args.map:
        _require_files(args.map + ".json", args.map + ".bin")
    src_set = load_embedding_set(args.src_emb)
    tgt_set = load_embedding_set(args.tgt_emb)
    linear_map = load_linear_map(args.map) if args.map else None
    gold = read_alignment_file(args.gold, gold=True) if args.gold else None

    num_layers = min(src_set.num_layers, tgt_set.num_layers)
    layers = range(num_layers) if args.all_layers else [args.layer]
    rows = []
    for layer in layers:
        predicted = align_corpus(src_set, tgt_set, layer, linear_map=linear_map)
        if layer == args.layer and args.out_links:
            write_alignment_file(predicted, args.out_links)
        row = {
            "source_lang": src_set.lang,
            "target_lang": tgt_set.lang,
            "layer": layer,
            "n_pairs": len(predicted),
            "links": sum(len(p.links) for p in predicted),
        }
        if gold is not None:
            precision, recall, f1 = corpus_alignment_f1(predicted, gold)
            row.update(precision=precision, recall=recall, f1=f1)
        if args.centering_diagnostic:
            from .alignment import centering_link_change_fraction
            from .embstore import word_vectors

            src_words = [
                word_vectors(src_set, i, layer)
                for i in range(len(src_set.sentences))
            ]
            tgt_words = [
                word_vectors(tgt_set, i, layer)
                for i in range(len(tgt_set.sentences))
            ]
            row["centering_link_change"] = centering_link_change_fraction(
                src_words, tgt_words
            )
        rows.append(row)
    if args.all_layers and gold is not None:
        rows.append(best_row(rows, "f1"))
    prov = provenance(
        "align",
        _config_dict(args),
        {
            "src_emb": args.src_emb,
            "tgt_emb": args.tgt_emb,
            "gold": args.gold,
            "map": args.map,
        },
    )
    _emit(args, rows, prov)
    return 0


def _cmd_align_eval(args) -> int:
    from .alignment import corpus_alignment_f1, read_alignment_file

    _require_files(args.pred, args.gold)
    predicted = read_alignment_file(args.pred, gold=False)
    gold = read_alignment_file(args.gold, gold=True)
    precision, recall, f1 = corpus_alignment_f1(predicted, gold)
    prov = provenance(
        "align-eval", _config_dict(args), {"pred": args.pred, "gold": args.gold}
    )
    rows = [
        {
            "n_pairs": len(predicted),
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }
    ]
    _emit(args, rows, prov)
    return 0


def _cmd_em_align(args) -> int:
    from .alignment import em_align_project, write_alignment_file
    from .embstore import load_embedding_set, word_vectors
    from .geometry import save_linear_map

    _require_files(args.src_emb, args.tgt_emb)
    src_set = load_embedding_set(args.src_emb)
    tgt_set = load_embedding_set(args.tgt_emb)
    if len(src_set.sentences) != len(tgt_set.sentences):
        raise ValueError(
            f"sentence count mismatch: {len(src_set.sentences)} vs "
            f"{len(tgt_set.sentences)}"
        )
    src_words = [
        word_vectors(src_set, i, args.layer) for i in range(len(src_set.sentences))
    ]
    tgt_words = [
        word_vectors(tgt_set, i, args.layer) for i in range(len(tgt_set.sentences))
    ]
    result = em_align_project(
        src_words,
        tgt_words,
        iterations=args.iterations,
        ridge_lambda=args.ridge_lambda,
        source_lang=src_set.lang,
        target_lang=tgt_set.lang,
    )
    if args.out_links:
        write_alignment_file(result.alignments, args.out_links)
    if args.out_map:
        save_linear_map(result.linear_map, args.out_map)
    rows = [
        {"iteration": i, "cover_cost": cost}
        for i, cost in enumerate(result.cover_costs)
    ]
    rows.append(
        {
            "iteration": "final",
            "cover_cost": result.cover_costs[-1],
            "n_pairs": len(result.alignments),
            "links": sum(len(a.links) for a in result.alignments),
        }
    )
    prov = provenance(
        "em-align",
        _config_dict(args),
        {"src_emb": args.src_emb, "tgt_emb": args.tgt_emb},
    )
    _emit(args, rows, prov)
    return 0


def _collect_centroids(args):
    from .geometry import compute_centroid
    from .langsim import read_centroid_csv
    import numpy as np

    if args.centroids:
        _require_files(args.centroids)
        from .embstore import ReprSource
        from .geometry import Centroid

        with open(args.centroids, "r", encoding="utf-8") as fh:
            rows = read_centroid_csv(fh)
        return [
            Centroid(
                lang=lang,
                layer=args.layer,
                source=_repr_source(args.source),
                vector=np.asarray(vec),
                sample_count=1,
            )
            for lang, vec in rows
        ]
    if not args.emb:
        raise ValueError("either --emb or --centroids is required")
    _require_files(*args.emb)
    source = _repr_source(args.source)
    corpus = _load_corpus(args.emb, args.layer, source)
    return [
        compute_centroid(reprs, lang=lang) for lang, reprs in sorted(corpus.items())
    ]


def _cmd_cluster(args) -> int:
    from .langsim import agglomerative_cluster, tree_to_dict

    centroids = _collect_centroids(args)
    tree = agglomerative_cluster(centroids)
    with open(args.tree_out, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, sort_keys=True, indent=2)
        fh.write("\n")
    rows = [
        {
            "step": i,
            "left": "+".join(m.left),
            "right": "+".join(m.right),
            "distance": m.distance,
        }
        for i, m in enumerate(tree.merges)
    ]
    prov = provenance(
        "cluster",
        _config_dict(args),
        {"emb": list(args.emb or []), "centroids": args.centroids},
    )
    _emit(args, rows, prov)
    return 0


def _cmd_vmeasure(args) -> int:
    from .langsim import (
        cut_tree,
        default_cut_k,
        load_family_labeling,
        tree_from_dict,
        v_measure,
    )

    _require_files(args.tree, args.families)
    with open(args.tree, "r", encoding="utf-8") as fh:
        tree = tree_from_dict(json.load(fh))
    families = load_family_labeling(args.families)
    k = args.k if args.k is not None else default_cut_k(families)
    clusters = cut_tree(tree, k)
    homogeneity, completeness, v = v_measure(clusters, families)
    prov = provenance(
        "vmeasure", _config_dict(args), {"tree": args.tree, "families": args.families}
    )
    rows = [
        {
            "k": k,
            "languages": len(tree.leaves),
            "homogeneity": homogeneity,
            "completeness": completeness,
            "v_measure": v,
        }
    ]
    _emit(args, rows, prov)
    return 0


def _cmd_export_centroids(args) -> int:
    from .langsim import export_centroids

    centroids = _collect_centroids(args)
    with open(args.csv_out, "w", encoding="utf-8") as fh:
        count = export_centroids(centroids, fh)
    prov = provenance(
        "export-centroids", _config_dict(args), {"emb": list(args.emb or [])}
    )
    _emit(args, [{"languages": count, "csv_out": args.csv_out}], prov)
    return 0


def _load_labelled_reprs(listing_path, layer, source, centered):
    """Pooled representations for a lang<TAB>path listing, optionally
    centered per language (each language by its own corpus centroid)."""
    from .embstore import corpus_reprs, load_embedding_set
    from .geometry import center, compute_centroid
    from .langid import load_corpus_listing

    data = []
    for lang, path in load_corpus_listing(listing_path):
        _require_files(path)
        emb_set = load_embedding_set(path)
        reprs = corpus_reprs(emb_set, layer, source)
        if centered:
            reprs = center(reprs, compute_centroid(reprs, lang=lang))
        data.extend((r, lang) for r in reprs)
    return data


def _cmd_langid_train(args) -> int:
    from .langid import TrainConfig, save_classifier, train_classifier

    _require_files(args.corpus)
    data = _load_labelled_reprs(
        args.corpus, args.layer, _repr_source(args.source), args.centered
    )
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        l2=args.l2,
    )
    clf = train_classifier(data, config)
    save_classifier(clf, args.clf_out)
    prov = provenance("langid-train", _config_dict(args), {"corpus": args.corpus})
    rows = [
        {
            "n_train": len(data),
            "classes": len(clf.class_labels),
            "final_loss": clf.training_meta.final_loss,
            "clf_out": args.clf_out,
        }
    ]
    _emit(args, rows, prov)
    return 0


def _cmd_langid_eval(args) -> int:
    from .langid import evaluate_classifier, load_classifier

    _require_files(args.clf + ".json", args.clf + ".bin", args.corpus)
    clf = load_classifier(args.clf)
    data = _load_labelled_reprs(
        args.corpus, args.layer, _repr_source(args.source), args.centered
    )
    result = evaluate_classifier(clf, data)
    rows = [{"lang": "overall", "accuracy": result.accuracy, "n": len(data)}]
    for lang, acc in result.per_language.items():
        n_lang = sum(1 for _, l in data if l == lang)
        rows.append({"lang": lang, "accuracy": acc, "n": n_lang})
    prov = provenance(
        "langid-eval", _config_dict(args), {"clf": args.clf, "corpus": args.corpus}
    )
    _emit(args, rows, prov)
    return 0


def _qe_records(args, layer):
    from .embstore import load_embedding_set
    from .qe import build_records, load_labels

    src_set = load_embedding_set(args.src_emb)
    mt_set = load_embedding_set(args.mt_emb)
    labels = load_labels(args.labels)
    for text_path, emb_count, name in (
        (args.src_text, len(src_set.sentences), "source"),
        (args.mt_text, len(mt_set.sentences), "MT"),
    ):
        if text_path:
            with open(text_path, "r", encoding="utf-8") as fh:
                n_lines = sum(1 for _ in fh)
            if n_lines != emb_count:
                raise ValueError(
                    f"{name} text file has {n_lines} lines but the embedding "
                    f"file has {emb_count} sentences"
                )
    return build_records(src_set, mt_set, labels, layer, _repr_source(args.source))


def _cmd_qe_score(args) -> int:
    from .embstore import load_embedding_set
    from .geometry import load_linear_map
    from .qe import QETransform, distance_score, pearson

    _require_files(args.src_emb, args.mt_emb, args.labels, args.src_text, args.mt_text)
    transform = QETransform(args.transform)
    linear_map = None
    if transform is QETransform.PROJECTED:
        if not args.map:
            raise ValueError("projected scoring needs --map")
        _require_files(args.map + ".json", args.map + ".bin")
        linear_map = load_linear_map(args.map)
        if args.all_layers:
            raise ValueError(
                "--all-layers cannot be combined with a single fitted --map; "
                "fit one map per layer instead"
            )
    num_layers = min(
        load_embedding_set(args.src_emb).num_layers,
        load_embedding_set(args.mt_emb).num_layers,
    )
    layers = range(num_layers) if args.all_layers else [args.layer]
    rows = []
    for layer in layers:
        records = _qe_records(args, layer)
        scores = distance_score(records, transform, linear_map)
        corr = pearson(scores, [r.hter for r in records])
        rows.append(
            {
                "layer": layer,
                "source": args.source,
                "transform": transform.value,
                "pearson": corr,
                "n": len(records),
            }
        )
    if args.all_layers:
        rows.append(best_row(rows, "pearson"))
    prov = provenance(
        "qe-score",
        _config_dict(args),
        {"src_emb": args.src_emb, "mt_emb": args.mt_emb, "labels": args.labels},
    )
    _emit(args, rows, prov)
    return 0


def _cmd_qe_train(args) -> int:
    from .qe import (
        FeatureMode,
        grid_search_lambda,
        pearson,
        predict_qe,
        save_qe_model,
        split_records,
        train_qe,
    )

    _require_files(args.src_emb, args.mt_emb, args.labels, args.src_text, args.mt_text)
    records = _qe_records(args, args.layer)
    mode = FeatureMode(args.feature_mode)
    rows = []
    if args.grid:
        train, val = split_records(records, args.val_fraction, args.seed)
        ridge_lambda, grid_scores = grid_search_lambda(train, val, mode)
        for lam in sorted(grid_scores):
            rows.append({"ridge_lambda": lam, "val_pearson": grid_scores[lam]})
    else:
        ridge_lambda = args.ridge_lambda
    model = train_qe(records, mode, ridge_lambda)
    save_qe_model(model, args.model_out)
    train_corr = pearson(predict_qe(model, records), [r.hter for r in records])
    rows.append(
        {
            "feature_mode": mode.value,
            "ridge_lambda": ridge_lambda,
            "layer": args.layer,
            "source": args.source,
            "n_train": len(records),
            "train_pearson": train_corr,
            "model_out": args.model_out,
        }
    )
    prov = provenance(
        "qe-train",
        _config_dict(args),
        {"src_emb": args.src_emb, "mt_emb": args.mt_emb, "labels": args.labels},
    )
    _emit(args, rows, prov)
    return 0


def _cmd_qe_eval(args) -> int:
    from .qe import load_qe_model, pearson, predict_qe

    _require_files(
        args.model + ".json",
        args.model + ".bin",
        args.src_emb,
        args.mt_emb,
        args.labels,
        args.src_text,
        args.mt_text,
    )
    model = load_qe_model(args.model)
    records = _qe_records(args, args.layer)
    predictions = predict_qe(model, records)
    corr = pearson(predictions, [r.hter for r in records])
    if args.out_scores:
        with open(args.out_scores, "w", encoding="utf-8") as fh:
            for value in predictions:
                fh.write(repr(value) + "\n")
    prov = provenance(
        "qe-eval",
        _config_dict(args),
        {
            "model": args.model,
            "src_emb": args.src_emb,
            "mt_emb": args.mt_emb,
            "labels": args.labels,
        },
    )
    rows = [
        {
            "feature_mode": model.feature_mode.value,
            "ridge_lambda": model.ridge_lambda,
            "layer": args.layer,
            "source": args.source,
            "pearson": corr,
            "n": len(records),
        }
    ]
    _emit(args, rows, prov)
    return 0


# ---------------------------------------------------------------- parser

def _add_axis(p, layer_default=0):
    p.add_argument("--layer", type=int, default=layer_default,
                   help="layer index (0 = embedding-layer output)")
    p.add_argument("--source", choices=("cls", "mean"), default="mean",
                   help="sentence vector: stored [cls] state or mean-pooled tokens")


def _add_report(p):
    p.add_argument("--format", choices=FORMATS, default="text")
    p.add_argument("--out", default=None, help="also write the report here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="langneutral",
                     description="Probing toolkit for language neutrality of "
                                 "multilingual embeddings")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS thread pools (default: "
                             "LANGNEUTRAL_THREADS or library default)")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = sub.add_parser("info", help="dump an embedding file's manifest and shape")
    p.add_argument("emb")
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("centroid", help="compute a language centroid")
    p.add_argument("--emb", help="embedding file input")
    p.add_argument("--reprs", help="pooled-representation CSV input")
    _add_axis(p)
    p.add_argument("--centroid-out", required=True, help="centroid JSON output")
    _add_report(p)
    p.set_defaults(func=_cmd_centroid)

    p = sub.add_parser("center", help="subtract a centroid from every sentence")
    p.add_argument("--emb")
    p.add_argument("--reprs")
    _add_axis(p)
    p.add_argument("--centroid", required=True, help="centroid JSON from 'centroid'")
    p.add_argument("--centered-out", required=True,
                   help="pooled-representation CSV output")
    _add_report(p)
    p.set_defaults(func=_cmd_center)

    p = sub.add_parser("fit-proj", help="fit a projection between two spaces")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    _add_axis(p)
    p.add_argument("--ridge-lambda", type=float, default=0.0)
    p.add_argument("--map-out", required=True, help="basename for .json/.bin pair")
    _add_report(p)
    p.set_defaults(func=_cmd_fit_proj)

    p = sub.add_parser("retrieve", help="parallel sentence retrieval accuracy")
    p.add_argument("--emb", nargs="+", required=True,
                   help="two or more index-aligned embedding files")
    _add_axis(p)
    p.add_argument("--transform", choices=("plain", "centered", "projected"),
                   default="plain")
    p.add_argument("--pivot", default=None,
                   help="pivot language for projected retrieval")
    p.add_argument("--fit-emb", nargs="+", default=None,
                   help="held-out parallel embedding files for fitting maps")
    p.add_argument("--ridge-lambda", type=float, default=0.0)
    p.add_argument("--all-layers", action="store_true")
    _add_report(p)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("align", help="word-align parallel corpora, optionally scored")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--all-layers", action="store_true")
    p.add_argument("--gold", default=None, help="gold link file for F1 scoring")
    p.add_argument("--map", default=None,
                   help="basename of a fitted map to project source words")
    p.add_argument("--out-links", default=None,
                   help="write predicted links for --layer here")
    p.add_argument("--centering-diagnostic", action="store_true",
                   help="report the fraction of links changed by centering "
                        "the word vectors")
    _add_report(p)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("align-eval", help="score a predicted link file against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    _add_report(p)
    p.set_defaults(func=_cmd_align_eval)

    p = sub.add_parser("em-align", help="alternating align-and-project refinement")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--ridge-lambda", type=float, default=0.0)
    p.add_argument("--out-links", default=None)
    p.add_argument("--out-map", default=None)
    _add_report(p)
    p.set_defaults(func=_cmd_em_align)

    p = sub.add_parser("cluster", help="agglomerative clustering of centroids")
    p.add_argument("--emb", nargs="+", default=None)
    p.add_argument("--centroids", default=None, help="centroid CSV input")
    _add_axis(p)
    p.add_argument("--tree-out", required=True, help="merge-tree JSON output")
    _add_report(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("vmeasure", help="V-measure of a tree cut against families")
    p.add_argument("--tree", required=True, help="merge-tree JSON from 'cluster'")
    p.add_argument("--families", required=True, help="lang<TAB>family TSV")
    p.add_argument("--k", type=int, default=None,
                   help="clusters to cut (default: number of families)")
    _add_report(p)
    p.set_defaults(func=_cmd_vmeasure)

    p = sub.add_parser("export-centroids", help="write language centroids as CSV")
    p.add_argument("--emb", nargs="+", default=None)
    p.add_argument("--centroids", default=None,
                   help=argparse.SUPPRESS)
    _add_axis(p)
    p.add_argument("--csv-out", required=True)
    _add_report(p)
    p.set_defaults(func=_cmd_export_centroids)

    p = sub.add_parser("langid-train", help="train the language-ID classifier")
    p.add_argument("--corpus", required=True, help="lang<TAB>emb-path TSV listing")
    _add_axis(p)
    p.add_argument("--centered", action="store_true",
                   help="center each language by its own centroid first")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--clf-out", required=True, help="basename for .json/.bin pair")
    _add_report(p)
    p.set_defaults(func=_cmd_langid_train)

    p = sub.add_parser("langid-eval", help="evaluate a language-ID classifier")
    p.add_argument("--clf", required=True, help="classifier basename")
    p.add_argument("--corpus", required=True)
    _add_axis(p)
    p.add_argument("--centered", action="store_true")
    _add_report(p)
    p.set_defaults(func=_cmd_langid_eval)

    def add_qe_common(p):
        p.add_argument("--src-emb", required=True)
        p.add_argument("--mt-emb", required=True)
        p.add_argument("--labels", required=True, help="one quality score per line")
        p.add_argument("--src-text", default=None,
                       help="optional source text file, length-checked")
        p.add_argument("--mt-text", default=None,
                       help="optional MT text file, length-checked")
        _add_axis(p)

    p = sub.add_parser("qe-score", help="distance-based quality estimation")
    add_qe_common(p)
    p.add_argument("--transform", choices=("plain", "centered", "projected"),
                   default="plain")
    p.add_argument("--map", default=None, help="fitted map basename for projected")
    p.add_argument("--all-layers", action="store_true")
    _add_report(p)
    p.set_defaults(func=_cmd_qe_score)

    p = sub.add_parser("qe-train", help="train supervised quality regression")
    add_qe_common(p)
    p.add_argument("--feature-mode", choices=("src", "mt", "both"), default="both")
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--grid", action="store_true",
                   help="pick ridge strength on a validation split")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--model-out", required=True, help="basename for .json/.bin pair")
    _add_report(p)
    p.set_defaults(func=_cmd_qe_train)

    p = sub.add_parser("qe-eval", help="evaluate a trained quality regression")
    add_qe_common(p)
    p.add_argument("--model", required=True, help="model basename")
    p.add_argument("--out-scores", default=None,
                   help="write per-sentence predictions here")
    _add_report(p)
    p.set_defaults(func=_cmd_qe_eval)

    return parser


def _apply_thread_cap(threads: int | None) -> None:
    cap = threads
    if cap is None:
        env = os.environ.get("LANGNEUTRAL_THREADS")
        cap = int(env) if env else None
    if cap is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(cap)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help/--version/usage errors
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    _apply_thread_cap(args.threads)
    from .errors import ToolkitError

    try:
        return args.func(args)
    except (ToolkitError, ValueError, IndexError, KeyError, OSError) as exc:
        sys.stderr.write(f"langneutral {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

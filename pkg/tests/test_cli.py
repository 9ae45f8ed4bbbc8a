import json

import numpy as np
import pytest

from langneutral import cli
from langneutral.alignment import AlignmentLinkSet, write_alignment_file
from langneutral.embstore import save_embedding_set

from conftest import parallel_embedding_sets, random_embedding_set


@pytest.fixture
def workspace(tmp_path, rng):
    """Small parallel corpus on disk: three languages plus fit sets."""
    paths = {}
    sets = parallel_embedding_sets(rng, ["cs", "de", "en"], num_sentences=6)
    for lang, emb_set in sets.items():
        path = str(tmp_path / f"{lang}.emb1")
        save_embedding_set(emb_set, path)
        paths[lang] = path
    fit_sets = parallel_embedding_sets(rng, ["cs", "de", "en"], num_sentences=8)
    for lang, emb_set in fit_sets.items():
        path = str(tmp_path / f"{lang}.fit.emb1")
        save_embedding_set(emb_set, path)
        paths[f"{lang}.fit"] = path
    return tmp_path, paths


def run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_info_prints_manifest(workspace, capsys):
    _, paths = workspace
    code, out, err = run(capsys, ["info", paths["cs"]])
    assert code == 0
    doc = json.loads(out)
    assert doc["lang"] == "cs"
    assert doc["manifest"]["lang"] == "cs"
    assert doc["num_layers"] == 2
    assert "provenance" in doc


def test_info_bad_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.emb1"
    bad.write_bytes(b"XXXX" + b"\0" * 32)
    code, out, err = run(capsys, ["info", str(bad)])
    assert code == 2
    assert "magic" in err


def test_missing_input_exits_2(tmp_path, capsys):
    code, out, err = run(capsys, ["info", str(tmp_path / "absent.emb1")])
    assert code == 2
    assert "not found" in err


def test_unknown_subcommand_exits_1(capsys):
    code = cli.main(["frobnicate"])
    captured = capsys.readouterr()
    assert code == 1
    assert "usage" in captured.err


def test_missing_subcommand_exits_1(capsys):
    code = cli.main([])
    captured = capsys.readouterr()
    assert code == 1
    assert "usage" in captured.err


def test_centroid_center_centroid_composition(workspace, capsys):
    tmp_path, paths = workspace
    centroid_1 = str(tmp_path / "c1.json")
    centered = str(tmp_path / "centered.csv")
    centroid_2 = str(tmp_path / "c2.json")

    code, _, _ = run(
        capsys,
        ["centroid", "--emb", paths["cs"], "--layer", "1",
         "--centroid-out", centroid_1],
    )
    assert code == 0
    code, _, _ = run(
        capsys,
        ["center", "--emb", paths["cs"], "--layer", "1",
         "--centroid", centroid_1, "--centered-out", centered],
    )
    assert code == 0
    code, _, _ = run(
        capsys,
        ["centroid", "--reprs", centered, "--centroid-out", centroid_2],
    )
    assert code == 0

    with open(centroid_1) as fh:
        first = json.load(fh)
    with open(centroid_2) as fh:
        second = json.load(fh)
    scale = max(abs(v) for v in first["vector"]) or 1.0
    assert max(abs(v) for v in second["vector"]) <= 1e-6 * scale


def test_retrieve_mismatched_sizes_names_both(tmp_path, rng, capsys):
    a = random_embedding_set(rng, lang="aa", num_sentences=4, hidden_dim=5)
    b = random_embedding_set(rng, lang="bb", num_sentences=6, hidden_dim=5)
    pa, pb = str(tmp_path / "a.emb1"), str(tmp_path / "b.emb1")
    save_embedding_set(a, pa)
    save_embedding_set(b, pb)
    code, out, err = run(capsys, ["retrieve", "--emb", pa, pb])
    assert code == 2
    assert "4" in err and "6" in err


def test_retrieve_json_and_text_share_values(workspace, capsys):
    _, paths = workspace
    argv = ["retrieve", "--emb", paths["cs"], paths["de"], "--layer", "1"]
    code, json_out, _ = run(capsys, argv + ["--format", "json"])
    assert code == 0
    code, text_out, _ = run(capsys, argv + ["--format", "text"])
    assert code == 0
    doc = json.loads(json_out)
    for row in doc["rows"]:
        assert json.dumps(row["accuracy"]) in text_out


def test_retrieve_all_layers_has_best_row(workspace, capsys):
    _, paths = workspace
    code, out, _ = run(
        capsys,
        ["retrieve", "--emb", paths["cs"], paths["de"], "--all-layers",
         "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    layers = {row["layer"] for row in rows}
    assert layers == {0, 1, "best"}
    best = [r for r in rows if r["layer"] == "best"]
    assert len(best) == 1 and best[0]["from_layer"] in (0, 1)


def test_retrieve_projected_via_fit_sets(workspace, capsys):
    _, paths = workspace
    code, out, _ = run(
        capsys,
        ["retrieve", "--emb", paths["cs"], paths["de"], paths["en"],
         "--transform", "projected", "--pivot", "en",
         "--fit-emb", paths["cs.fit"], paths["de.fit"], paths["en.fit"],
         "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 7  # 6 directed pairs + average


def test_align_eval_round_trip(workspace, tmp_path, capsys):
    _, paths = workspace
    links_path = str(tmp_path / "pred.align")
    code, out, _ = run(
        capsys,
        ["align", "--src-emb", paths["cs"], "--tgt-emb", paths["de"],
         "--layer", "0", "--out-links", links_path, "--format", "json"],
    )
    assert code == 0

    # score the predictions against themselves as gold: perfect F1
    code, out, _ = run(
        capsys,
        ["align-eval", "--pred", links_path, "--gold", links_path,
         "--format", "json"],
    )
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["precision"] == 1.0 and row["recall"] == 1.0 and row["f1"] == 1.0


def test_align_gold_f1_all_layers(workspace, tmp_path, capsys):
    _, paths = workspace
    gold_path = str(tmp_path / "gold.align")
    links_path = str(tmp_path / "pred.align")
    code, _, _ = run(
        capsys,
        ["align", "--src-emb", paths["cs"], "--tgt-emb", paths["de"],
         "--out-links", links_path],
    )
    assert code == 0
    from langneutral.alignment import read_alignment_file

    predicted = read_alignment_file(links_path)
    gold = [AlignmentLinkSet.gold(p.links, p.links) for p in predicted]
    write_alignment_file(gold, gold_path)

    code, out, _ = run(
        capsys,
        ["align", "--src-emb", paths["cs"], "--tgt-emb", paths["de"],
         "--gold", gold_path, "--all-layers", "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    assert any(r["layer"] == "best" for r in rows)
    layer0 = [r for r in rows if r["layer"] == 0][0]
    assert layer0["f1"] == 1.0


def test_em_align_writes_costs_and_map(workspace, tmp_path, capsys):
    _, paths = workspace
    map_base = str(tmp_path / "emmap")
    code, out, _ = run(
        capsys,
        ["em-align", "--src-emb", paths["cs"], "--tgt-emb", paths["de"],
         "--iterations", "2", "--out-map", map_base, "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    persisted = [r for r in rows if r.get("iteration") in (0, 1, 2)]
    assert len(persisted) == 3
    from langneutral.geometry import load_linear_map

    linear_map = load_linear_map(map_base)
    assert linear_map.weights.shape == (6, 6)


def test_cluster_vmeasure_flow(workspace, tmp_path, capsys):
    _, paths = workspace
    tree_path = str(tmp_path / "tree.json")
    families_path = tmp_path / "families.tsv"
    families_path.write_text("cs\tSlavic\nde\tGermanic\nen\tGermanic\n")

    code, _, _ = run(
        capsys,
        ["cluster", "--emb", paths["cs"], paths["de"], paths["en"],
         "--tree-out", tree_path],
    )
    assert code == 0
    code, out, _ = run(
        capsys,
        ["vmeasure", "--tree", tree_path, "--families", str(families_path),
         "--format", "json"],
    )
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["k"] == 2
    assert 0.0 <= row["v_measure"] <= 1.0


def test_export_centroids_csv(workspace, tmp_path, capsys):
    _, paths = workspace
    csv_path = str(tmp_path / "centroids.csv")
    code, out, _ = run(
        capsys,
        ["export-centroids", "--emb", paths["cs"], paths["de"], paths["en"],
         "--csv-out", csv_path, "--format", "json"],
    )
    assert code == 0
    with open(csv_path) as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("lang,dim0")

    # the exported CSV feeds back into cluster
    tree_path = str(tmp_path / "tree2.json")
    code, _, _ = run(
        capsys, ["cluster", "--centroids", csv_path, "--tree-out", tree_path]
    )
    assert code == 0


def test_langid_train_eval_flow(tmp_path, rng, capsys):
    # two well-separated languages, 30 sentences each
    from langneutral.embstore import EmbeddingSet, SentenceEmbeddings

    listing = tmp_path / "corpus.tsv"
    rows = []
    for lang, direction in (("aa", 0), ("bb", 1)):
        sentences = []
        for _ in range(30):
            vec = 0.05 * rng.normal(size=(1, 1, 4)).astype(np.float32)
            vec[0, 0, direction] += 1.0
            sentences.append(
                SentenceEmbeddings(
                    token_vectors=vec,
                    cls_vectors=vec[:, 0, :],
                    word_groups=[[0]],
                )
            )
        emb_set = EmbeddingSet.create(lang, sentences, num_layers=1, hidden_dim=4)
        path = str(tmp_path / f"{lang}.emb1")
        save_embedding_set(emb_set, path)
        rows.append(f"{lang}\t{path}")
    listing.write_text("\n".join(rows) + "\n")

    clf_base = str(tmp_path / "clf")
    code, out, _ = run(
        capsys,
        ["langid-train", "--corpus", str(listing), "--layer", "0",
         "--epochs", "20", "--clf-out", clf_base, "--format", "json"],
    )
    assert code == 0
    code, out, _ = run(
        capsys,
        ["langid-eval", "--clf", clf_base, "--corpus", str(listing),
         "--layer", "0", "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    overall = [r for r in rows if r["lang"] == "overall"][0]
    assert overall["accuracy"] == 1.0

    # centering the separated clusters erases the signal
    code, out, _ = run(
        capsys,
        ["langid-eval", "--clf", clf_base, "--corpus", str(listing),
         "--layer", "0", "--centered", "--format", "json"],
    )
    assert code == 0
    centered = [r for r in json.loads(out)["rows"] if r["lang"] == "overall"][0]
    assert centered["accuracy"] < overall["accuracy"]


@pytest.fixture
def qe_workspace(tmp_path, rng):
    sets = parallel_embedding_sets(rng, ["src", "mt"], num_sentences=20)
    paths = {}
    for lang, emb_set in sets.items():
        path = str(tmp_path / f"{lang}.emb1")
        save_embedding_set(emb_set, path)
        paths[lang] = path
    labels = rng.uniform(0.0, 1.0, size=20)
    labels_path = tmp_path / "hter.txt"
    labels_path.write_text("".join(f"{float(v)!r}\n" for v in labels))
    paths["labels"] = str(labels_path)
    return tmp_path, paths


def test_qe_score_all_layers(qe_workspace, capsys):
    _, paths = qe_workspace
    code, out, _ = run(
        capsys,
        ["qe-score", "--src-emb", paths["src"], "--mt-emb", paths["mt"],
         "--labels", paths["labels"], "--all-layers", "--format", "json"],
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    assert {r["layer"] for r in rows} == {0, 1, "best"}
    for row in rows:
        assert -1.0 <= row["pearson"] <= 1.0


def test_qe_train_eval_flow(qe_workspace, tmp_path, capsys):
    _, paths = qe_workspace
    model_base = str(tmp_path / "qe_model")
    code, out, _ = run(
        capsys,
        ["qe-train", "--src-emb", paths["src"], "--mt-emb", paths["mt"],
         "--labels", paths["labels"], "--feature-mode", "both",
         "--ridge-lambda", "1.0", "--model-out", model_base, "--format", "json"],
    )
    assert code == 0
    scores_path = str(tmp_path / "scores.txt")
    code, out, _ = run(
        capsys,
        ["qe-eval", "--model", model_base, "--src-emb", paths["src"],
         "--mt-emb", paths["mt"], "--labels", paths["labels"],
         "--out-scores", scores_path, "--format", "json"],
    )
    assert code == 0
    with open(scores_path) as fh:
        scores = [float(line) for line in fh]
    assert len(scores) == 20


def test_qe_text_line_count_mismatch(qe_workspace, tmp_path, capsys):
    _, paths = qe_workspace
    text = tmp_path / "src.txt"
    text.write_text("one line\n")
    code, out, err = run(
        capsys,
        ["qe-score", "--src-emb", paths["src"], "--mt-emb", paths["mt"],
         "--labels", paths["labels"], "--src-text", str(text)],
    )
    assert code == 2
    assert "1 lines" in err and "20" in err


def test_report_written_to_out_file(workspace, tmp_path, capsys):
    _, paths = workspace
    out_path = str(tmp_path / "report.json")
    code, stdout, _ = run(
        capsys,
        ["retrieve", "--emb", paths["cs"], paths["de"], "--format", "json",
         "--out", out_path],
    )
    assert code == 0
    with open(out_path) as fh:
        assert fh.read() == stdout

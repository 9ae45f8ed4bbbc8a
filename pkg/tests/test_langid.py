import numpy as np
import pytest

from langneutral.errors import EmptyInputError
from langneutral.langid import (
    LinearClassifier,
    TrainConfig,
    evaluate_classifier,
    load_classifier,
    load_corpus_listing,
    save_classifier,
    train_classifier,
)

from conftest import make_repr


def labelled(rng, per_class, class_means, sigma=0.0):
    data = []
    for lang, mean in class_means.items():
        mean = np.asarray(mean, dtype=np.float64)
        for _ in range(per_class):
            noise = sigma * rng.normal(size=mean.shape) if sigma else 0.0
            data.append((make_repr(mean + noise), lang))
    order = rng.permutation(len(data))
    return [data[i] for i in order]


def split(data, holdout_fraction=0.2):
    n_hold = int(len(data) * holdout_fraction)
    return data[n_hold:], data[:n_hold]


class TestTrainClassifier:
    def test_separable_two_classes(self, rng):
        data = labelled(
            rng, 100, {"aa": [1.0, 0.0, 0.0], "bb": [-1.0, 0.0, 0.0]}, sigma=0.0
        )
        train, hold = split(data)
        clf = train_classifier(train)
        assert evaluate_classifier(clf, hold).accuracy == 1.0
        assert evaluate_classifier(clf, train).accuracy == 1.0

    def test_identical_representations_chance_accuracy(self, rng):
        langs = ["aa", "bb", "cc", "dd"]
        same = np.ones(8)
        data = [(make_repr(same), langs[i % 4]) for i in range(1000)]
        order = rng.permutation(len(data))
        data = [data[i] for i in order]
        train, hold = split(data)
        clf = train_classifier(train)
        accuracy = evaluate_classifier(clf, hold).accuracy
        assert abs(accuracy - 0.25) <= 0.1

    def test_orthogonal_gaussian_clusters(self, rng):
        means = {f"l{k}": np.eye(8)[k] for k in range(4)}
        data = labelled(rng, 250, means, sigma=0.05)
        train, hold = split(data)
        clf = train_classifier(train)
        assert evaluate_classifier(clf, hold).accuracy >= 0.99

    def test_single_class_rejected(self, rng):
        data = labelled(rng, 5, {"aa": [1.0, 0.0]})
        with pytest.raises(ValueError, match="2 classes"):
            train_classifier(data)

    def test_empty_data(self):
        with pytest.raises(EmptyInputError):
            train_classifier([])

    def test_deterministic_given_seed(self, rng):
        data = labelled(rng, 40, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]}, sigma=0.3)
        cfg = TrainConfig(epochs=5, seed=7)
        c1 = train_classifier(data, cfg)
        c2 = train_classifier(data, cfg)
        assert np.array_equal(c1.weights, c2.weights)
        assert np.array_equal(c1.bias, c2.bias)

    def test_loss_non_increasing_full_batch_small_lr(self, rng):
        data = labelled(
            rng, 60, {"aa": [1.0, 0.0, 0.5], "bb": [-0.5, 1.0, 0.0]}, sigma=0.4
        )
        cfg = TrainConfig(epochs=30, learning_rate=1e-3, batch_size=10_000)
        clf = train_classifier(data, cfg)
        history = clf.training_meta.loss_history
        assert len(history) == 30
        for earlier, later in zip(history, history[1:]):
            assert later <= earlier

    def test_l2_objective_seed_independent_at_convergence(self):
        # fixed dataset: only the training seed (shuffling order) varies
        data_rng = np.random.default_rng(5)
        X = data_rng.normal(size=(200, 4))
        labels = ["aa" if x[0] + 0.5 * x[1] > 0 else "bb" for x in X]
        data = [(make_repr(x), lab) for x, lab in zip(X, labels)]

        def run(seed):
            cfg = TrainConfig(
                epochs=400, learning_rate=0.1, batch_size=50, seed=seed, l2=1e-2
            )
            return train_classifier(data, cfg)

        c1, c2 = run(1), run(2)
        assert np.abs(c1.weights - c2.weights).max() <= 1e-3

    def test_training_meta_recorded(self, rng):
        data = labelled(rng, 10, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]})
        cfg = TrainConfig(epochs=3, seed=11, l2=1e-3)
        clf = train_classifier(data, cfg)
        meta = clf.training_meta
        assert meta.epochs == 3 and meta.seed == 11 and meta.l2 == 1e-3
        assert meta.final_loss == meta.loss_history[-1]


class TestEvaluateClassifier:
    def test_zero_classifier_predicts_first_class(self, rng):
        clf = LinearClassifier(
            weights=np.zeros((3, 3)),
            bias=np.zeros(3),
            class_labels=("aa", "bb", "cc"),
        )
        data = labelled(rng, 4, {"aa": [1.0, 0, 0], "bb": [0, 1.0, 0], "cc": [0, 0, 1.0]})
        result = evaluate_classifier(clf, data)
        frequency = sum(1 for _, lang in data if lang == "aa") / len(data)
        assert result.accuracy == pytest.approx(frequency)
        assert all(pred == "aa" for (_, pred) in result.confusion)

    def test_confusion_counts_conserved(self, rng):
        data = labelled(
            rng, 30, {"aa": [1.0, 0.2], "bb": [0.2, 1.0]}, sigma=1.0
        )
        clf = train_classifier(data, TrainConfig(epochs=3))
        result = evaluate_classifier(clf, data)
        assert sum(result.confusion.values()) == len(data)

    def test_score_shift_invariance(self, rng):
        data = labelled(rng, 20, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]}, sigma=0.5)
        clf = train_classifier(data, TrainConfig(epochs=4))
        shifted = LinearClassifier(
            weights=clf.weights,
            bias=clf.bias + 123.456,
            class_labels=clf.class_labels,
        )
        base = evaluate_classifier(clf, data)
        moved = evaluate_classifier(shifted, data)
        assert base.confusion == moved.confusion

    def test_unknown_label_rejected(self, rng):
        data = labelled(rng, 10, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]})
        clf = train_classifier(data)
        with pytest.raises(ValueError, match="unknown label"):
            evaluate_classifier(clf, [(make_repr([1.0, 0.0]), "zz")])

    def test_empty_eval_data(self, rng):
        data = labelled(rng, 10, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]})
        clf = train_classifier(data)
        with pytest.raises(EmptyInputError):
            evaluate_classifier(clf, [])

    def test_per_language_accuracy(self, rng):
        data = labelled(
            rng, 50, {"aa": [2.0, 0.0], "bb": [0.0, 2.0]}, sigma=0.05
        )
        clf = train_classifier(data)
        result = evaluate_classifier(clf, data)
        assert set(result.per_language) == {"aa", "bb"}
        assert all(v == 1.0 for v in result.per_language.values())


def test_save_load_round_trip(tmp_path, rng):
    data = labelled(rng, 20, {"aa": [1.0, 0.0], "bb": [0.0, 1.0]}, sigma=0.2)
    clf = train_classifier(data, TrainConfig(epochs=3, seed=5))
    basename = str(tmp_path / "clf")
    save_classifier(clf, basename)
    back = load_classifier(basename)
    assert np.array_equal(back.weights, clf.weights)
    assert np.array_equal(back.bias, clf.bias)
    assert back.class_labels == clf.class_labels
    assert back.training_meta.final_loss == clf.training_meta.final_loss


def test_corpus_listing(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text("# listing\ncs\t/data/cs.emb1\nen\t/data/en.emb1\n")
    assert load_corpus_listing(str(path)) == [
        ("cs", "/data/cs.emb1"),
        ("en", "/data/en.emb1"),
    ]
    bad = tmp_path / "bad.tsv"
    bad.write_text("cs /data/cs.emb1\n")
    with pytest.raises(ValueError):
        load_corpus_listing(str(bad))

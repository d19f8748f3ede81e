import json
import math

import numpy as np
import pytest

from tagdistill import student
from tagdistill.corpus import SynthSpec, generate_synthetic_corpus
from tagdistill.errors import (
    DegenerateDataError,
    EmptyTextError,
    NotAProbabilityError,
    ShapeMismatchError,
    UnknownIdError,
)
from tagdistill.student import HasherConfig, StudentModel, TrainingConfig


SMALL = HasherConfig(dimensions=2**12)


class TestFeaturize:
    def test_two_char_text_single_unigram(self):
        vec = student.featurize("ab", SMALL)
        assert len(vec) == 1
        assert abs(list(vec.values())[0]) == pytest.approx(1.0)

    def test_deterministic(self):
        text = "przewody mleczne poszerzone obustronnie"
        assert student.featurize(text, SMALL) == student.featurize(text, SMALL)

    def test_unit_norm(self):
        for text in ["ab", "jeden dwa trzy", "x" * 50, "zażółć gęślą jaźń"]:
            vec = student.featurize(text, SMALL)
            norm = math.sqrt(sum(v * v for v in vec.values()))
            assert norm == pytest.approx(1.0, abs=1e-9)

    def test_empty_text_raises(self):
        with pytest.raises(EmptyTextError):
            student.featurize("", SMALL)
        with pytest.raises(EmptyTextError):
            student.featurize("   ", SMALL)

    def test_char_ngrams_present(self):
        # "abcd" yields unigram + 3-grams (abc, bcd) + 4-gram (abcd)
        unsigned = HasherConfig(dimensions=2**12, signed_hashing=False)
        vec = student.featurize("abcd", unsigned)
        assert 2 <= len(vec) <= 4  # collisions may merge some

    def test_collision_count_small(self):
        # ~1000 distinct features into 2^18 buckets: expect very few collisions
        config = HasherConfig()
        from tagdistill.hashing import fnv1a64
        feats = {f"u=token{i}" for i in range(1000)}
        indices = [fnv1a64(f.encode()) % config.dimensions for f in feats]
        collisions = len(indices) - len(set(indices))
        assert collisions < 5

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            HasherConfig(dimensions=512)
        with pytest.raises(ValueError):
            HasherConfig(char_ngram_min=1)
        with pytest.raises(ValueError):
            HasherConfig(char_ngram_min=4, char_ngram_max=3)


def separable_fixture(n_per_class=50, seed=0):
    spec = SynthSpec(labels=("ALPHA", "BETA"),
                     keywords={"ALPHA": ["akw"], "BETA": ["bkw"]},
                     n_docs=n_per_class * 2, segments_per_doc=(1, 1))
    docs, gold = generate_synthetic_corpus(spec, seed=seed)
    by_doc = {d.doc_id: d.text for d in docs}
    texts = [by_doc[g.doc_id][g.start:g.end] for g in gold]
    labels = [g.label for g in gold]
    return texts, labels


class TestTrainStudent:
    def test_separable_reaches_perfect_training_accuracy(self):
        texts, labels = separable_fixture(50)
        # run to convergence: full-batch descent needs many passes on 100 docs
        config = TrainingConfig(epochs=2000, learning_rate=1.0, seed=1)
        model = student.train_student(texts, labels, ["ALPHA", "BETA"], config, SMALL)
        _, predicted = student.predict_batch(model, texts)
        assert predicted == labels

    def test_bit_identical_given_seed(self):
        texts, labels = separable_fixture(30)
        config = TrainingConfig(epochs=5, seed=7)
        m1 = student.train_student(texts, labels, ["ALPHA", "BETA"], config, SMALL)
        m2 = student.train_student(texts, labels, ["ALPHA", "BETA"], config, SMALL)
        assert np.array_equal(m1.W, m2.W)
        assert np.array_equal(m1.b, m2.b)
        assert m1.final_loss == m2.final_loss

    def test_single_label_degenerate(self):
        with pytest.raises(DegenerateDataError):
            student.train_student(["a b c", "d e f"], ["A", "A"], ["A", "B"],
                                  TrainingConfig())

    def test_final_loss_recorded(self):
        texts, labels = separable_fixture(20)
        model = student.train_student(texts, labels, ["ALPHA", "BETA"],
                                      TrainingConfig(epochs=3, seed=2), SMALL)
        assert math.isfinite(model.final_loss)
        assert model.final_loss > 0


def imbalanced_fixture(n_majority=900, n_minority=100, seed=0):
    """9:1 data where shared filler tokens dominate and pull toward the majority."""
    rng = np.random.default_rng(seed)
    shared = [f"shared{i}" for i in range(6)]
    texts, labels = [], []
    for i in range(n_majority + n_minority):
        minority = i >= n_majority
        words = list(rng.choice(shared, size=5))
        words.append("minkw" if minority else "majkw")
        rng.shuffle(words)
        texts.append(" ".join(words))
        labels.append("MIN" if minority else "MAJ")
    return texts, labels


class TestClassWeighting:
    def test_weighted_beats_unweighted_on_minority_recall(self):
        texts, labels = imbalanced_fixture()
        test_texts, test_labels = imbalanced_fixture(n_majority=100, n_minority=100,
                                                     seed=99)
        label_order = ["MAJ", "MIN"]
        base = dict(learning_rate=0.5, epochs=10, batch_size=256, seed=5)
        unweighted = student.train_student(
            texts, labels, label_order, TrainingConfig(**base), SMALL)
        from tagdistill.corpus import compute_class_weights
        weights = compute_class_weights({"MAJ": 900, "MIN": 100})
        weighted = student.train_student(
            texts, labels, label_order,
            TrainingConfig(**base, class_weights=weights), SMALL)

        def minority_recall(model):
            _, preds = student.predict_batch(model, test_texts)
            hits = sum(1 for p, t in zip(preds, test_labels) if t == "MIN" and p == "MIN")
            return hits / test_labels.count("MIN")

        r_unweighted = minority_recall(unweighted)
        r_weighted = minority_recall(weighted)
        assert r_weighted >= r_unweighted + 0.05

    def test_constant_weight_scaling_preserves_argmax(self):
        texts, labels = separable_fixture(25)
        label_order = ["ALPHA", "BETA"]
        m1 = student.train_student(
            texts, labels, label_order,
            TrainingConfig(learning_rate=0.2, epochs=5, batch_size=10_000, l2=0.0,
                           seed=3, class_weights={"ALPHA": 1.0, "BETA": 1.0}), SMALL)
        m2 = student.train_student(
            texts, labels, label_order,
            TrainingConfig(learning_rate=0.1, epochs=5, batch_size=10_000, l2=0.0,
                           seed=3, class_weights={"ALPHA": 2.0, "BETA": 2.0}), SMALL)
        _, p1 = student.predict_batch(m1, texts)
        _, p2 = student.predict_batch(m2, texts)
        assert p1 == p2


class TestGradient:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(17)
        n, d, k = 5, 12, 3
        X = rng.normal(size=(n, d))
        y = np.array([0, 1, 2, 1, 0])
        w = rng.uniform(0.5, 2.0, size=n)
        W = rng.normal(scale=0.3, size=(k, d))
        b = rng.normal(scale=0.1, size=k)
        l2 = 1e-3
        loss, grad_W, grad_b = student.loss_and_grad(W, b, X, y, w, l2)
        step = 1e-5
        for grad, param in ((grad_W, W), (grad_b, b)):
            it = np.nditer(param, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = param[idx]
                param[idx] = orig + step
                up, _, _ = student.loss_and_grad(W, b, X, y, w, l2)
                param[idx] = orig - step
                down, _, _ = student.loss_and_grad(W, b, X, y, w, l2)
                param[idx] = orig
                numeric = (up - down) / (2 * step)
                denom = max(abs(numeric), abs(grad[idx]), 1e-8)
                assert abs(numeric - grad[idx]) / denom < 1e-4

    def test_full_batch_loss_strictly_decreases(self):
        texts, labels = separable_fixture(30)
        hasher = SMALL
        X = student.featurize_matrix(texts, hasher).toarray()
        y = np.array([0 if l == "ALPHA" else 1 for l in labels])
        w = np.ones(len(y))
        W = np.zeros((2, hasher.dimensions))
        b = np.zeros(2)
        lr = 0.01
        losses = []
        for _ in range(51):
            loss, gW, gb = student.loss_and_grad(W, b, X, y, w, 0.0)
            losses.append(loss)
            W -= lr * gW
            b -= lr * gb
        for prev, cur in zip(losses, losses[1:]):
            assert cur < prev


class TestPredict:
    def test_zero_model_uniform_scores_tiebreak_first(self):
        labels = ["A", "B", "C", "D"]
        model = StudentModel(hasher=SMALL, labels=labels,
                             W=np.zeros((4, SMALL.dimensions)), b=np.zeros(4),
                             training_config=TrainingConfig(), seed=0)
        scores, predicted = student.predict(model, "anything at all")
        assert np.allclose(scores, 0.25)
        assert predicted == "A"

    def test_scores_are_probabilities(self):
        texts, labels = separable_fixture(20)
        model = student.train_student(texts, labels, ["ALPHA", "BETA"],
                                      TrainingConfig(epochs=3, seed=4), SMALL)
        scores, _ = student.predict(model, texts[0])
        assert scores.sum() == pytest.approx(1.0, abs=1e-9)
        assert ((scores > 0) & (scores < 1)).all()


class TestSerialization:
    def test_round_trip(self, tmp_path):
        texts, labels = separable_fixture(15)
        model = student.train_student(texts, labels, ["ALPHA", "BETA"],
                                      TrainingConfig(epochs=2, seed=9), SMALL)
        path = tmp_path / "model.json"
        student.save_model(model, path)
        loaded = student.load_model(path)
        assert loaded.labels == model.labels
        assert np.array_equal(loaded.W, model.W)
        assert np.array_equal(loaded.b, model.b)
        assert loaded.final_loss == model.final_loss
        _, p1 = student.predict_batch(model, texts)
        _, p2 = student.predict_batch(loaded, texts)
        assert p1 == p2

    def test_format_fields(self, tmp_path):
        texts, labels = separable_fixture(10)
        model = student.train_student(texts, labels, ["ALPHA", "BETA"],
                                      TrainingConfig(epochs=1, seed=9), SMALL)
        path = tmp_path / "model.json"
        student.save_model(model, path)
        data = json.loads(path.read_text())
        assert data["format_version"] == 1
        assert set(data) >= {"hasher", "labels", "W", "b", "training_config",
                             "seed", "final_loss"}
        assert len(data["W"]) == 2 * SMALL.dimensions


class TestExternalExchange:
    def test_export_files(self, tmp_path, two_label_scenario):
        from tagdistill.corpus import Document, Segment, SplitManifest
        docs = {"d1": Document("d1", "toy", "alpha text one. beta text two.")}
        segs = {
            "d1:0:15": Segment("d1", "ALPHA", 0, 15, "teacher"),
            "d1:16:30": Segment("d1", "BETA", 16, 30, "expert"),
        }
        manifest = SplitManifest("toy", train=["d1:0:15"], test=["d1:16:30"],
                                 in_context=[], seed=0)
        hashes = student.export_for_external_trainer(
            manifest, segs, docs, two_label_scenario, tmp_path / "out")
        assert set(hashes) == {"train.jsonl", "test.jsonl", "labels.json", "meta.json"}
        train_rows = [json.loads(l) for l in
                      (tmp_path / "out" / "train.jsonl").read_text().splitlines()]
        assert train_rows == [{"id": "d1:0:15", "text": "alpha text one.",
                               "label": "ALPHA"}]
        assert json.loads((tmp_path / "out" / "labels.json").read_text()) == \
            ["ALPHA", "BETA"]
        # re-export is byte-stable
        again = student.export_for_external_trainer(
            manifest, segs, docs, two_label_scenario, tmp_path / "out")
        assert again == hashes

    def test_import_valid(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps({"id": "a", "scores": [0.2, 0.5, 0.3]}) + "\n")
        preds = student.import_external_predictions(path, ["X", "Y", "Z"])
        assert preds["a"] == pytest.approx([0.2, 0.5, 0.3])

    def test_import_shape_mismatch(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps({"id": "a", "scores": [0.2, 0.5]}) + "\n")
        with pytest.raises(ShapeMismatchError):
            student.import_external_predictions(path, ["X", "Y", "Z"])

    def test_import_not_a_probability(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps({"id": "a", "scores": [0.5, 0.5, 0.1]}) + "\n")
        with pytest.raises(NotAProbabilityError):
            student.import_external_predictions(path, ["X", "Y", "Z"])

    def test_import_renormalizes_within_tolerance(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        scores = [0.2, 0.5, 0.3 + 5e-7]
        path.write_text(json.dumps({"id": "a", "scores": scores}) + "\n")
        preds = student.import_external_predictions(path, ["X", "Y", "Z"])
        assert preds["a"].sum() == pytest.approx(1.0, abs=1e-12)

    def test_import_unknown_id(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps({"id": "ghost", "scores": [1.0, 0.0]}) + "\n")
        with pytest.raises(UnknownIdError):
            student.import_external_predictions(path, ["X", "Y"], expected_ids=["a"])

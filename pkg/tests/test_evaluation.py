import itertools
import json
import math

import numpy as np
import pytest

from tagdistill import evaluation as ev
from tagdistill.errors import (
    DegenerateAllError,
    EmptyInputError,
    InconsistentLabelSetsError,
    LengthMismatchError,
    UnknownLabelError,
)


class TestConfusionMatrix:
    def test_diagonal_when_perfect(self):
        cm = ev.confusion_matrix(["A", "B", "A"], ["A", "B", "A"], ["A", "B"])
        assert np.array_equal(cm.counts, [[2, 0], [0, 1]])

    def test_hand_counted(self):
        cm = ev.confusion_matrix(["A", "A", "B", "B"], ["A", "B", "B", "B"], ["A", "B"])
        assert np.array_equal(cm.counts, [[1, 1], [0, 2]])

    def test_empty(self):
        cm = ev.confusion_matrix([], [], ["A", "B"])
        assert cm.counts.sum() == 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            ev.confusion_matrix(["A"], ["A", "B"], ["A", "B"])

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError):
            ev.confusion_matrix(["Z"], ["A"], ["A", "B"])

    def test_accuracy_is_trace_over_total(self):
        cm = ev.confusion_matrix(["A", "A", "B", "B"], ["A", "B", "B", "B"], ["A", "B"])
        assert cm.accuracy == np.trace(cm.counts) / cm.counts.sum()


class TestMacroF1:
    def test_perfect_diagonal(self):
        cm = ev.confusion_matrix(["A", "B"], ["A", "B"], ["A", "B"])
        _, macro = ev.macro_f1(cm)
        assert macro == 1.0

    def test_hand_evaluated(self):
        cm = ev.confusion_matrix(["A", "A", "B", "B"], ["A", "B", "B", "B"], ["A", "B"])
        per_label, macro = ev.macro_f1(cm)
        assert per_label["A"] == pytest.approx(2 / 3)
        assert per_label["B"] == pytest.approx(0.8)
        assert macro == pytest.approx(0.733333, abs=1e-6)
        prf = ev.per_label_prf(cm)
        assert prf["A"]["precision"] == 1.0
        assert prf["A"]["recall"] == 0.5
        assert prf["B"]["precision"] == pytest.approx(2 / 3)
        assert prf["B"]["recall"] == 1.0

    def test_absent_label_zero_f1_in_mean(self):
        cm = ev.confusion_matrix(["A", "A"], ["A", "A"], ["A", "B", "C"])
        per_label, macro = ev.macro_f1(cm)
        assert per_label["B"] == 0.0 and per_label["C"] == 0.0
        assert macro == pytest.approx(1 / 3)


class TestMacroAUROC:
    def test_four_sample_fixture(self):
        y = ["POS", "NEG", "POS", "NEG"]
        scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.7, 0.3], [0.1, 0.9]])
        per_label, _ = ev.macro_auroc(y, scores, ["POS", "NEG"])
        assert per_label["POS"] == pytest.approx(0.75)

    def test_perfect_separation(self):
        y = ["A", "A", "B", "B"]
        scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]])
        per_label, macro = ev.macro_auroc(y, scores, ["A", "B"])
        assert macro == 1.0

    def test_all_ties_half(self):
        y = ["A", "B", "A", "B"]
        scores = np.full((4, 2), 0.5)
        per_label, macro = ev.macro_auroc(y, scores, ["A", "B"])
        assert macro == pytest.approx(0.5)

    def test_absent_label_skipped(self):
        y = ["A", "A", "B"]
        scores = np.array([[0.5, 0.3, 0.2]] * 3)
        per_label, macro = ev.macro_auroc(y, scores, ["A", "B", "C"])
        assert per_label["C"] is None

    def test_all_degenerate_raises(self):
        with pytest.raises(DegenerateAllError):
            ev.macro_auroc(["A", "A"], np.array([[1.0], [1.0]]), ["A"])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        scores = rng.random(30)
        mask = rng.random(30) < 0.4
        base = ev._auroc_one_vs_rest(mask, scores)
        squared = ev._auroc_one_vs_rest(mask, scores**2)
        assert squared == pytest.approx(base)

    def test_matches_pair_enumeration(self):
        rng = np.random.default_rng(8)
        scores = rng.integers(0, 5, size=20).astype(float)  # force ties
        mask = rng.random(20) < 0.5
        pos = scores[mask]
        neg = scores[~mask]
        wins = sum(1 for p in pos for q in neg if p > q)
        ties = sum(1 for p in pos for q in neg if p == q)
        expected = (wins + 0.5 * ties) / (len(pos) * len(neg))
        assert ev._auroc_one_vs_rest(mask, scores) == pytest.approx(expected)


class TestAccuracyCI:
    def test_all_correct_clips_to_one(self):
        acc, lo, hi = ev.accuracy_with_ci(["A"] * 50, ["A"] * 50)
        assert acc == 1.0 and hi == 1.0 and lo == 1.0

    def test_point_nine_n_100(self):
        y_true = ["A"] * 100
        y_pred = ["A"] * 90 + ["B"] * 10
        acc, lo, hi = ev.accuracy_with_ci(y_true, y_pred)
        assert acc == pytest.approx(0.9)
        assert lo == pytest.approx(0.8412, abs=1e-4)
        assert hi == pytest.approx(0.9588, abs=1e-4)

    def test_half_n_4(self):
        acc, lo, hi = ev.accuracy_with_ci(["A", "A", "B", "B"], ["A", "B", "B", "A"])
        assert acc == 0.5
        assert lo == pytest.approx(0.01, abs=1e-4)
        assert hi == pytest.approx(0.99, abs=1e-4)

    def test_empty_raises(self):
        with pytest.raises(EmptyInputError):
            ev.accuracy_with_ci([], [])


class TestWilcoxon:
    def test_identical_vectors_degenerate(self):
        v = [1, 0, 1, 1, 0]
        result = ev.wilcoxon_paired(v, v)
        assert result.n_effective == 0
        assert result.method == "degenerate"
        assert result.p_value is None

    def test_three_up_one_down(self):
        a = [1, 1, 1, 0, 1, 1]
        b = [0, 0, 0, 1, 1, 1]
        result = ev.wilcoxon_paired(a, b)
        assert result.n_effective == 4
        assert result.stat == pytest.approx(2.5)
        assert result.method == "exact"
        assert result.p_value == pytest.approx(0.625, abs=1e-12)

    def test_exact_p_matches_full_enumeration(self):
        # enumerate all sign assignments of equal-magnitude ranks directly
        for n_pos, n_neg in [(3, 1), (5, 2), (6, 6), (8, 1)]:
            n = n_pos + n_neg
            avg = (n + 1) / 2
            observed = min(n_pos, n_neg) * avg
            count = 0
            for signs in itertools.product([1, -1], repeat=n):
                pos = sum(1 for s in signs if s > 0)
                stat = min(pos, n - pos) * avg
                if stat <= observed + 1e-12:
                    count += 1
            expected_p = count / 2**n
            a = [1] * n_pos + [0] * n_neg
            b = [0] * n_pos + [1] * n_neg
            result = ev.wilcoxon_paired(a, b)
            assert result.p_value == pytest.approx(expected_p, abs=1e-12)

    def test_strict_domination_30_significant(self):
        a = [1] * 30 + [1, 0] * 10
        b = [0] * 30 + [1, 0] * 10
        result = ev.wilcoxon_paired(a, b)
        assert result.n_effective == 30
        assert result.method == "normal-approx"
        assert result.p_value < 0.001

    def test_n_effective_counts_discordant_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            a = rng.integers(0, 2, size=n)
            b = rng.integers(0, 2, size=n)
            result = ev.wilcoxon_paired(a.tolist(), b.tolist())
            assert result.n_effective == int((a != b).sum())
            assert (result.p_value is None) == (result.n_effective == 0)
            if result.p_value is not None:
                assert 0.0 <= result.p_value <= 1.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.integers(0, 2, size=40).tolist()
            b = rng.integers(0, 2, size=40).tolist()
            r1 = ev.wilcoxon_paired(a, b)
            r2 = ev.wilcoxon_paired(b, a)
            assert r1.stat == r2.stat
            assert r1.p_value == r2.p_value
            assert r1.n_effective == r2.n_effective

    def test_exact_and_normal_agree_near_threshold(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 50:
            n_eff = int(rng.integers(20, 26))
            n_pos = int(rng.integers(0, n_eff + 1))
            a = [1] * n_pos + [0] * (n_eff - n_pos)
            b = [0] * n_pos + [1] * (n_eff - n_pos)
            exact = ev.wilcoxon_paired(a, b)
            assert exact.method == "exact"
            # recompute with the normal path by lowering the threshold
            old = ev.EXACT_WILCOXON_LIMIT
            ev.EXACT_WILCOXON_LIMIT = 0
            try:
                approx = ev.wilcoxon_paired(a, b)
            finally:
                ev.EXACT_WILCOXON_LIMIT = old
            assert approx.method == "normal-approx"
            assert abs(exact.p_value - approx.p_value) < 0.02
            checked += 1

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            ev.wilcoxon_paired([1, 0], [1])


class TestBenchmark:
    def test_constant_stub(self):
        record = ev.benchmark_inference(lambda d: None, ["a", "b", "c"],
                                        repetitions=5, warmup=1)
        assert record.p50 <= record.p95
        assert record.mean_seconds >= 0

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            ev.benchmark_inference(lambda d: None, ["a"], repetitions=2, warmup=1)
        with pytest.raises(ValueError):
            ev.benchmark_inference(lambda d: None, ["a"], repetitions=3, warmup=0)


def make_report(model_id, labels=("A", "B")):
    y_true = ["A", "A", "B", "B"]
    y_pred = ["A", "B", "B", "B"]
    scores = np.array([[0.9, 0.1], [0.4, 0.6], [0.2, 0.8], [0.1, 0.9]])
    return ev.evaluate_predictions(model_id, "toy", y_true, y_pred, scores, list(labels))


class TestEmitReport:
    def test_table1_shape(self, tmp_path):
        written = ev.emit_report([make_report("student")], [], [], tmp_path)
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["report_version"] == 1
        md = (tmp_path / "report.md").read_text()
        header = [l for l in md.splitlines() if l.startswith("| Model |")][0]
        assert header == "| Model | F1 score | AUROC | Accuracy | 95% CI |"

    def test_three_models_three_comparisons(self, tmp_path):
        reports = [make_report(m) for m in ("m1", "m2", "m3")]
        comparisons = [
            ev.wilcoxon_paired([1, 0], [0, 1], a, b)
            for a, b in itertools.combinations(["m1", "m2", "m3"], 2)
        ]
        ev.emit_report(reports, comparisons, [], tmp_path)
        report = json.loads((tmp_path / "report.json").read_text())
        assert len(report["comparisons"]) == 3

    def test_reemit_byte_identical(self, tmp_path):
        bench = ev.BenchmarkRecord("student", "toy", 0.001, 0.0009, 0.0015, 5)
        ev.emit_report([make_report("student")], [], [bench], tmp_path / "a")
        ev.emit_report([make_report("student")], [], [bench], tmp_path / "b")
        for name in ("report.json", "report.md", "confusion_student.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_confusion_csv_shape(self, tmp_path):
        ev.emit_report([make_report("student")], [], [], tmp_path)
        rows = (tmp_path / "confusion_student.csv").read_text().splitlines()
        assert rows[0] == "true\\predicted,A,B"
        assert rows[1] == "A,1,1"
        assert rows[2] == "B,0,2"

    def test_inconsistent_label_sets_rejected(self, tmp_path):
        r1 = make_report("m1")
        r2 = make_report("m2")
        r2.labels = ["A", "B", "C"]
        with pytest.raises(InconsistentLabelSetsError):
            ev.emit_report([r1, r2], [], [], tmp_path)

"""Evaluation: per-label metrics, paired model comparison, timing, reports."""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import (
    DegenerateAllError,
    EmptyInputError,
    InconsistentLabelSetsError,
    LengthMismatchError,
    UnknownLabelError,
)

Z_95 = 1.959964
EXACT_WILCOXON_LIMIT = 25
REPORT_VERSION = 1


@dataclass
class ConfusionMatrix:
    labels: list
    counts: np.ndarray  # K x K, rows true, columns predicted

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def accuracy(self):
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0


def confusion_matrix(y_true, y_pred, labels):
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(f"{len(y_true)} true vs {len(y_pred)} predicted")
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index:
            raise UnknownLabelError(t)
        if p not in index:
            raise UnknownLabelError(p)
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels=list(labels), counts=counts)


def per_label_prf(cm: ConfusionMatrix):
    """Precision/recall/F1 per label with the zero-division-is-zero convention."""
    out = {}
    counts = cm.counts
    for i, label in enumerate(cm.labels):
        tp = float(counts[i, i])
        fp = float(counts[:, i].sum() - counts[i, i])
        fn = float(counts[i, :].sum() - counts[i, i])
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out[label] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def macro_f1(cm: ConfusionMatrix):
    """Unweighted mean of per-label F1 over all labels in the matrix."""
    prf = per_label_prf(cm)
    per_label = {label: vals["f1"] for label, vals in prf.items()}
    macro = sum(per_label.values()) / len(per_label) if per_label else 0.0
    return per_label, macro


def _auroc_one_vs_rest(positive_mask, scores):
    """Rank-based AUROC with average ranks for ties."""
    n_pos = int(positive_mask.sum())
    n_neg = len(scores) - n_pos
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[positive_mask].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def macro_auroc(y_true, scores, labels):
    """One-vs-rest AUROC per label; labels without both classes are skipped."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (len(y_true), len(labels)):
        raise LengthMismatchError(
            f"score matrix shape {scores.shape} does not match {len(y_true)}x{len(labels)}")
    per_label = {}
    used = []
    for j, label in enumerate(labels):
        mask = np.array([t == label for t in y_true])
        n_pos = int(mask.sum())
        if n_pos == 0 or n_pos == len(y_true):
            per_label[label] = None
            continue
        auc = _auroc_one_vs_rest(mask, scores[:, j])
        per_label[label] = auc
        used.append(auc)
    if not used:
        raise DegenerateAllError("no label has both positive and negative samples")
    return per_label, sum(used) / len(used)


def accuracy_with_ci(y_true, y_pred, confidence=0.95):
    """Accuracy with a Wald normal-approximation interval, clipped to [0, 1]."""
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(f"{len(y_true)} true vs {len(y_pred)} predicted")
    n = len(y_true)
    if n == 0:
        raise EmptyInputError("cannot compute accuracy of zero samples")
    acc = sum(t == p for t, p in zip(y_true, y_pred)) / n
    z = Z_95 if abs(confidence - 0.95) < 1e-12 else NormalDist().inv_cdf(0.5 + confidence / 2)
    half = z * math.sqrt(acc * (1 - acc) / n)
    return acc, max(0.0, acc - half), min(1.0, acc + half)


@dataclass
class ComparisonResult:
    model_a: str
    model_b: str
    stat: float
    p_value: float  # None when degenerate
    n_effective: int
    method: str  # exact | normal-approx | degenerate


def wilcoxon_paired(correct_a, correct_b, model_a="a", model_b="b"):
    """Paired Wilcoxon signed-rank test on per-sample correctness vectors.

    Differences are all +/-1 after zero-drop, so every rank ties at
    (n_eff + 1) / 2 and the exact null reduces to a binomial sign test;
    above EXACT_WILCOXON_LIMIT a tie-corrected normal approximation with
    continuity correction is used.
    """
    if len(correct_a) != len(correct_b):
        raise LengthMismatchError(f"{len(correct_a)} vs {len(correct_b)} samples")
    diffs = [int(a) - int(b) for a, b in zip(correct_a, correct_b)]
    signs = [d for d in diffs if d != 0]
    n = len(signs)
    if n == 0:
        return ComparisonResult(model_a, model_b, stat=0.0, p_value=None,
                                n_effective=0, method="degenerate")
    n_pos = sum(1 for d in signs if d > 0)
    n_neg = n - n_pos
    avg_rank = (n + 1) / 2
    w_plus = n_pos * avg_rank
    w_minus = n_neg * avg_rank
    stat = min(w_plus, w_minus)
    if n <= EXACT_WILCOXON_LIMIT:
        # all |d| equal: the distribution of min(#pos, #neg) is Bin(n, 1/2)
        m = min(n_pos, n_neg)
        count = sum(math.comb(n, k) for k in range(n + 1) if min(k, n - k) <= m)
        p = count / 2**n
        method = "exact"
    else:
        mean = n * (n + 1) / 4
        var = n * (n + 1) * (2 * n + 1) / 24 - (n**3 - n) / 48
        # every rank ties at (n+1)/2, so the statistic's support steps by
        # (n+1)/2; continuity correction is half that step, not 0.5
        z = (stat - mean + (n + 1) / 4) / math.sqrt(var)
        p = min(1.0, 2 * NormalDist().cdf(z))
        method = "normal-approx"
    return ComparisonResult(model_a, model_b, stat=float(stat), p_value=float(p),
                            n_effective=n, method=method)


@dataclass
class BenchmarkRecord:
    model_id: str
    scenario_id: str
    mean_seconds: float
    p50: float
    p95: float
    repetitions: int


def benchmark_inference(predict_fn, documents, repetitions=5, warmup=1,
                        model_id="model", scenario_id=""):
    """Wall-clock per-document latency over repeated passes, warmup discarded."""
    if repetitions < 3:
        raise ValueError("repetitions must be at least 3")
    if warmup < 1:
        raise ValueError("warmup must be at least 1")
    for _ in range(warmup):
        for doc in documents:
            predict_fn(doc)
    times = []
    for _ in range(repetitions):
        for doc in documents:
            t0 = time.perf_counter()
            predict_fn(doc)
            times.append(time.perf_counter() - t0)
    times = np.array(times)
    return BenchmarkRecord(
        model_id=model_id,
        scenario_id=scenario_id,
        mean_seconds=float(times.mean()),
        p50=float(np.percentile(times, 50)),
        p95=float(np.percentile(times, 95)),
        repetitions=repetitions,
    )


@dataclass
class MetricsReport:
    model_id: str
    scenario_id: str
    labels: list
    per_label: dict  # label -> {precision, recall, f1, auroc}
    macro_f1: float
    macro_auroc: float
    accuracy: float
    accuracy_ci: tuple
    n: int
    confusion: list = field(default_factory=list)  # K x K row-major

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "scenario_id": self.scenario_id,
            "labels": list(self.labels),
            "per_label": self.per_label,
            "macro_f1": self.macro_f1,
            "macro_auroc": self.macro_auroc,
            "accuracy": self.accuracy,
            "accuracy_ci": list(self.accuracy_ci),
            "n": self.n,
            "confusion": self.confusion,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            model_id=data["model_id"],
            scenario_id=data["scenario_id"],
            labels=list(data["labels"]),
            per_label=data["per_label"],
            macro_f1=data["macro_f1"],
            macro_auroc=data["macro_auroc"],
            accuracy=data["accuracy"],
            accuracy_ci=tuple(data["accuracy_ci"]),
            n=data["n"],
            confusion=data.get("confusion", []),
        )


def evaluate_predictions(model_id, scenario_id, y_true, y_pred, scores, labels):
    """Bundle every headline metric for one model on one test set."""
    cm = confusion_matrix(y_true, y_pred, labels)
    prf = per_label_prf(cm)
    f1_per_label, f1_macro = macro_f1(cm)
    auroc_per_label, auroc_macro = macro_auroc(y_true, scores, labels)
    acc, lo, hi = accuracy_with_ci(y_true, y_pred)
    per_label = {
        label: {
            "precision": prf[label]["precision"],
            "recall": prf[label]["recall"],
            "f1": f1_per_label[label],
            "auroc": auroc_per_label[label],
        }
        for label in labels
    }
    return MetricsReport(
        model_id=model_id,
        scenario_id=scenario_id,
        labels=list(labels),
        per_label=per_label,
        macro_f1=f1_macro,
        macro_auroc=auroc_macro,
        accuracy=acc,
        accuracy_ci=(lo, hi),
        n=len(y_true),
        confusion=[[int(v) for v in row] for row in cm.counts],
    )


def _fmt(x, digits=4):
    if x is None:
        return "-"
    return f"{x:.{digits}f}"


def emit_report(metrics_reports, comparisons, benchmarks, out_dir, fmt="table"):
    """Write report.json, report.md and per-model confusion CSVs.

    Deterministic: identical inputs produce byte-identical files.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    reports = sorted(metrics_reports, key=lambda r: r.model_id)
    label_sets = {tuple(r.labels) for r in reports}
    if len(label_sets) > 1:
        raise InconsistentLabelSetsError(
            f"reports carry {len(label_sets)} different label sets")

    payload = {
        "report_version": REPORT_VERSION,
        "metrics": [r.to_dict() for r in reports],
        "comparisons": [
            {
                "model_a": c.model_a,
                "model_b": c.model_b,
                "stat": c.stat,
                "p_value": c.p_value,
                "n_effective": c.n_effective,
                "method": c.method,
            }
            for c in comparisons
        ],
        "benchmarks": [
            {
                "model_id": b.model_id,
                "scenario_id": b.scenario_id,
                "mean_seconds": b.mean_seconds,
                "p50": b.p50,
                "p95": b.p95,
                "repetitions": b.repetitions,
            }
            for b in benchmarks
        ],
    }
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")

    lines = ["# Evaluation report", ""]
    if reports:
        lines += ["## Classification metrics", "",
                  "| Model | F1 score | AUROC | Accuracy | 95% CI |",
                  "| --- | --- | --- | --- | --- |"]
        for r in reports:
            lo, hi = r.accuracy_ci
            lines.append(
                f"| {r.model_id} | {_fmt(r.macro_f1)} | {_fmt(r.macro_auroc)} "
                f"| {_fmt(r.accuracy)} | {_fmt(lo)}-{_fmt(hi)} |")
        lines.append("")
    if comparisons:
        lines += ["## Pairwise comparisons (Wilcoxon signed-rank)", "",
                  "| Model pair | stat | p-value | n_effective | method |",
                  "| --- | --- | --- | --- | --- |"]
        for c in comparisons:
            p = "-" if c.p_value is None else f"{c.p_value:.3g}"
            lines.append(
                f"| {c.model_a} vs {c.model_b} | {_fmt(c.stat, 1)} | {p} "
                f"| {c.n_effective} | {c.method} |")
        lines.append("")
    if benchmarks:
        lines += ["## Inference time", "",
                  "| Model | mean [s/doc] | p50 [s] | p95 [s] | repetitions |",
                  "| --- | --- | --- | --- | --- |"]
        for b in benchmarks:
            lines.append(
                f"| {b.model_id} | {_fmt(b.mean_seconds, 6)} | {_fmt(b.p50, 6)} "
                f"| {_fmt(b.p95, 6)} | {b.repetitions} |")
        lines.append("")
    md_path = os.path.join(out_dir, "report.md")
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))

    written = [json_path, md_path]
    for r in reports:
        if not r.confusion:
            continue
        csv_path = os.path.join(out_dir, f"confusion_{r.model_id}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + list(r.labels))
            for label, row in zip(r.labels, r.confusion):
                writer.writerow([label] + list(row))
        written.append(csv_path)
    return written

"""Walk through the evaluation metrics on a small hand-built example.

Run with:  python3 demos/metrics_walkthrough.py
"""

import numpy as np

from tagdistill import evaluation as ev

labels = ["CARDIO", "NEURO", "ORTHO"]
y_true = ["CARDIO", "CARDIO", "NEURO", "NEURO", "ORTHO", "ORTHO", "ORTHO"]
y_pred = ["CARDIO", "NEURO", "NEURO", "NEURO", "ORTHO", "ORTHO", "CARDIO"]

print("== Confusion matrix ==")
cm = ev.confusion_matrix(y_true, y_pred, labels)
header = "true\\pred " + " ".join(f"{l:>7}" for l in labels)
print(header)
for i, label in enumerate(labels):
    row = " ".join(f"{int(c):>7}" for c in cm.counts[i])
    print(f"{label:>9} {row}")

print("\n== Per-label precision / recall / F1 ==")
for label, vals in ev.per_label_prf(cm).items():
    print(f"{label:>7}: precision {vals['precision']:.3f} "
          f"recall {vals['recall']:.3f} f1 {vals['f1']:.3f}")

per_label, macro = ev.macro_f1(cm)
print(f"\nmacro-F1 (unweighted mean over labels): {macro:.4f}")

print("\n== Accuracy with a 95% Wald interval ==")
acc, lo, hi = ev.accuracy_with_ci(y_true, y_pred)
print(f"accuracy {acc:.4f}, CI ({lo:.4f}, {hi:.4f}) at n={len(y_true)}")

print("\n== Macro AUROC from per-class scores ==")
rng = np.random.default_rng(0)
# scores lean toward the predicted label with some noise
scores = np.full((len(y_pred), len(labels)), 0.2)
for i, pred in enumerate(y_pred):
    scores[i, labels.index(pred)] = 0.6
scores += rng.uniform(0, 0.05, scores.shape)
scores /= scores.sum(axis=1, keepdims=True)
per_label_auroc, macro_auroc = ev.macro_auroc(y_true, scores, labels)
for label, value in per_label_auroc.items():
    print(f"{label:>7}: AUROC {value:.4f}")
print(f"macro AUROC: {macro_auroc:.4f}")

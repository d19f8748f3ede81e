"""Distill a mock teacher into a compact student, end to end, as library calls.

A synthetic corpus is generated with known gold labels, a deterministic mock
teacher annotates it (with a little label noise), a stratified subset is
"expert-validated" against the gold, splits are built, and a hashed-feature
softmax student is trained on the teacher labels and scored on the clean
expert test split.

Run with:  python3 demos/distillation_run.py
"""

from tagdistill import corpus, evaluation, student, teacher
from tagdistill.hashing import derive_seed
from tagdistill.scenario import ClinicalScenario

SEED = 7

scenario = ClinicalScenario(
    id="demo",
    name="Demo scenario",
    system_message="Label each passage with one tag.",
    output_instruction=teacher.DEFAULT_OUTPUT_INSTRUCTION,
    labels=("FINDING", "HISTORY", "PLAN"),
)
keywords = {
    "FINDING": ["guzek", "zmiana"],
    "HISTORY": ["wywiad", "przebyte"],
    "PLAN": ["kontrola", "zalecenie"],
}

print("== 1. Synthetic corpus with gold labels ==")
spec = corpus.SynthSpec(labels=scenario.labels, keywords=keywords,
                        n_docs=800, segments_per_doc=(1, 3),
                        scenario_id=scenario.id)
documents, gold = corpus.generate_synthetic_corpus(spec, seed=SEED)
print(f"{len(documents)} documents, {len(gold)} gold segments")

print("\n== 2. Mock teacher annotation (5% label noise) ==")
endpoint = teacher.MockChatEndpoint(keywords, noise=0.05,
                                    seed=derive_seed(SEED, "annotate"),
                                    labels=list(scenario.labels))
annotations, failures = teacher.annotate_corpus(documents, scenario, endpoint,
                                                backoff=0)
segments = [seg for ann in annotations for seg in ann.segments]
print(f"{len(segments)} teacher segments, {len(failures)} failures")
dist = corpus.label_distribution(segments, scenario.labels)
print("label distribution:", dict(sorted(dist.items())))

print("\n== 3. Expert validation of a stratified subset ==")
sampled = corpus.sample_validation_subset(
    segments, min_per_label=10, target_size=200,
    seed=derive_seed(SEED, "sample"))
gold_by_span = {(g.doc_id, g.start, g.end): g.label for g in gold}
expert = []
for seg in segments:
    if seg.segment_id in sampled:
        label = gold_by_span.get((seg.doc_id, seg.start, seg.end), seg.label)
        expert.append(corpus.Segment(seg.doc_id, label, seg.start, seg.end,
                                     source="expert"))
print(f"{len(expert)} segments validated "
      f"({sum(1 for s in segments if s.segment_id in sampled and gold_by_span.get((s.doc_id, s.start, s.end)) != s.label)} teacher labels corrected)")

print("\n== 4. Splits ==")
combined = corpus.apply_expert_overrides(segments, expert)
manifest, warnings = corpus.build_splits(
    combined, [e.segment_id for e in expert], k_ic=2,
    seed=derive_seed(SEED, "splits"),
    scenario_id=scenario.id, scenario_labels=scenario.labels)
print(f"train={len(manifest.train)} test={len(manifest.test)} "
      f"in_context={len(manifest.in_context)}")

print("\n== 5. Train the student on teacher labels ==")
docs_by_id = {d.doc_id: d for d in documents}
segs_by_id = {s.segment_id: s for s in combined}
texts = [docs_by_id[segs_by_id[i].doc_id].text[segs_by_id[i].start:segs_by_id[i].end]
         for i in manifest.train]
labels = [segs_by_id[i].label for i in manifest.train]
weights = corpus.compute_class_weights(
    corpus.label_distribution([segs_by_id[i] for i in manifest.train]))
config = student.TrainingConfig(epochs=20, seed=derive_seed(SEED, "train"),
                                class_weights=weights)
model = student.train_student(texts, labels, list(scenario.labels), config,
                              student.HasherConfig(dimensions=2 ** 14))
print(f"final training loss {model.final_loss:.4f}")

print("\n== 6. Evaluate on the clean expert test split ==")
test_texts = [docs_by_id[segs_by_id[i].doc_id].text[segs_by_id[i].start:segs_by_id[i].end]
              for i in manifest.test]
y_true = [segs_by_id[i].label for i in manifest.test]
scores, y_pred = student.predict_batch(model, test_texts)
report = evaluation.evaluate_predictions("student", scenario.id, y_true,
                                         y_pred, scores, list(scenario.labels))
print(f"macro-F1 {report.macro_f1:.4f}  AUROC {report.macro_auroc:.4f}  "
      f"accuracy {report.accuracy:.4f} "
      f"CI ({report.accuracy_ci[0]:.4f}, {report.accuracy_ci[1]:.4f}) "
      f"n={report.n}")

"""Command-line pipeline orchestration over a workspace directory.

Every stage writes its artifacts into a fixed subdirectory plus a
run-manifest recording the seed and input/output content hashes, so a whole
run is reproducible from one top-level seed.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import review as review_mod
from . import student as student_mod
from . import teacher as teacher_mod
from .corpus import (
    DEFAULT_CATEGORY_CAP,
    DEFAULT_IN_CONTEXT_PER_LABEL,
    DEFAULT_MIN_PER_LABEL,
    Segment,
    SplitManifest,
    SynthSpec,
)
from .errors import TagDistillError, WorkspaceLockedError
from .hashing import derive_seed
from .scenario import ClinicalScenario, load_scenario, save_scenario

DEFAULT_SEED = 42


class Workspace:
    SUBDIRS = ("corpus", "annotations", "validation", "splits", "models",
               "external", "predictions", "reports", "manifests", "review")

    def __init__(self, root):
        self.root = Path(root)

    def path(self, *parts):
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def require(self, *parts, hint=""):
        p = self.root.joinpath(*parts)
        if not p.exists():
            rel = "/".join(parts)
            raise TagDistillError(f"missing artifact {rel}; {hint}" if hint
                                  else f"missing artifact {rel}")
        return p


class workspace_lock:
    """One command at a time per workspace."""

    def __init__(self, ws: Workspace):
        self.lock_path = ws.path(".lock")

    def __enter__(self):
        for attempt in range(2):
            try:
                fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.write(fd, str(os.getpid()).encode())
                os.close(fd)
                return self
            except FileExistsError:
                if attempt == 0 and self._holder_is_dead():
                    try:
                        os.unlink(self.lock_path)
                    except FileNotFoundError:
                        pass
                    continue
                raise WorkspaceLockedError(
                    f"lock file {self.lock_path} exists; "
                    "another command is running")

    def _holder_is_dead(self):
        try:
            pid = int(open(self.lock_path).read().strip())
        except (OSError, ValueError):
            return True
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return True
        except PermissionError:
            return False
        return False

    def __exit__(self, *exc):
        try:
            os.unlink(self.lock_path)
        except FileNotFoundError:
            pass
        return False


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_stage_manifest(ws: Workspace, stage, seed, inputs, outputs):
    manifest = {
        "stage": stage,
        "seed": seed,
        "inputs": {str(Path(p).relative_to(ws.root)) if str(p).startswith(str(ws.root))
                   else str(p): _sha256(p) for p in inputs if os.path.exists(p)},
        "outputs": {str(Path(p).relative_to(ws.root)): _sha256(p) for p in outputs},
    }
    with open(ws.path("manifests", f"{stage}.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_workspace_scenario(ws: Workspace, args):
    path = getattr(args, "scenario", None) or ws.require(
        "scenario.json", hint="provide --scenario or run synth first")
    return load_scenario(path)


def _synthetic_scenario(n_labels):
    labels = tuple(f"TAG_{i:02d}" for i in range(n_labels))
    keywords = {label: [f"marker{i}alfa", f"marker{i}beta"]
                for i, label in enumerate(labels)}
    scenario = ClinicalScenario(
        id="synthetic",
        name="Synthetic scenario",
        system_message=(
            "You are a clinical documentation assistant. Assign each passage "
            "of the input text one of the available labels."),
        output_instruction=teacher_mod.DEFAULT_OUTPUT_INSTRUCTION,
        labels=labels,
        in_context=(),
    )
    return scenario, keywords


def cmd_synth(ws, args):
    seed = derive_seed(args.seed, "synth")
    scenario, keywords = _synthetic_scenario(args.labels)
    spec = SynthSpec(labels=scenario.labels, keywords=keywords, n_docs=args.docs,
                     segments_per_doc=(args.min_segments, args.max_segments),
                     noise=args.synth_noise, scenario_id=scenario.id)
    documents, gold = corpus_mod.generate_synthetic_corpus(spec, seed)
    scenario_path = ws.path("scenario.json")
    save_scenario(scenario, scenario_path)
    corpus_path = ws.path("corpus", "corpus.jsonl")
    corpus_mod.write_corpus(documents, corpus_path)
    gold_path = ws.path("corpus", "gold.jsonl")
    corpus_mod.write_annotations(gold, gold_path)
    kw_path = ws.path("corpus", "keywords.json")
    with open(kw_path, "w", encoding="utf-8") as fh:
        json.dump(keywords, fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_stage_manifest(ws, "synth", seed, [],
                         [scenario_path, corpus_path, gold_path, kw_path])
    print(f"synth: {len(documents)} documents, {len(gold)} gold segments")


def cmd_ingest(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    src = args.corpus or ws.require("corpus", "corpus.jsonl",
                                    hint="provide --corpus or run synth first")
    docs, stats = corpus_mod.read_corpus(src, scenario.id, cap=args.cap)
    out = ws.path("corpus", "corpus.jsonl")
    if Path(src).resolve() != out.resolve():
        corpus_mod.write_corpus(docs, out)
    stats_path = ws.path("corpus", "stats.json")
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump({"count": stats.count, "total_chars": stats.total_chars,
                   "cap": args.cap}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_stage_manifest(ws, "ingest", args.seed, [src], [out, stats_path])
    print(f"ingest: {stats.count} documents, {stats.total_chars} chars")


def _load_corpus(ws, scenario):
    path = ws.require("corpus", "corpus.jsonl", hint="run ingest or synth first")
    docs, _ = corpus_mod.read_corpus(path, scenario.id)
    return docs


def cmd_annotate(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    documents = _load_corpus(ws, scenario)
    seed = derive_seed(args.seed, "annotate")
    if args.mock:
        kw_path = ws.require("corpus", "keywords.json",
                             hint="mock annotation needs the synth keyword map")
        with open(kw_path, encoding="utf-8") as fh:
            keywords = json.load(fh)
        endpoint = teacher_mod.MockChatEndpoint(
            keywords, noise=args.noise, seed=seed, labels=list(scenario.labels))
        backoff = 0.0
    else:
        if not args.endpoint_url:
            raise TagDistillError("teacher annotation needs --endpoint-url or --mock")
        config = teacher_mod.EndpointConfig.from_env(args.endpoint_url, args.model)
        endpoint = teacher_mod.HttpChatEndpoint(config)
        backoff = teacher_mod.DEFAULT_BACKOFF
    annotations, failures = teacher_mod.annotate_corpus(
        documents, scenario, endpoint, concurrency=args.concurrency,
        max_retries=args.retries, backoff=backoff)
    segments = [seg for ann in annotations for seg in ann.segments]
    out = ws.path("annotations", "teacher.jsonl")
    corpus_mod.write_annotations(segments, out)
    fail_path = ws.path("annotations", "failures.jsonl")
    teacher_mod.write_failure_report(failures, fail_path)
    write_stage_manifest(ws, "annotate", seed,
                         [ws.root / "corpus" / "corpus.jsonl"], [out, fail_path])
    print(f"annotate: {len(annotations)} documents annotated, {len(failures)} failures")


def cmd_sample_validation(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    seed = derive_seed(args.seed, "sample-validation")
    teacher_path = ws.require("annotations", "teacher.jsonl", hint="run annotate first")
    segments = corpus_mod.read_annotations(teacher_path)
    n_labels = len({s.label for s in segments})
    target = args.target_size or min(500, max(n_labels, len(segments) // 10))
    ids = corpus_mod.sample_validation_subset(
        segments, args.min_per_label, target, seed)
    out = ws.path("validation", "subset.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"segment_ids": sorted(ids), "seed": seed,
                   "min_per_label": args.min_per_label, "target_size": target},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_stage_manifest(ws, "sample-validation", seed, [teacher_path], [out])
    print(f"sample-validation: {len(ids)} segments selected for expert review")


def cmd_mock_validate(ws, args):
    """Simulate the expert pass using the synthetic gold annotations."""
    seed = derive_seed(args.seed, "mock-validate")
    subset_path = ws.require("validation", "subset.json", hint="run sample-validation first")
    with open(subset_path, encoding="utf-8") as fh:
        sampled = set(json.load(fh)["segment_ids"])
    teacher_path = ws.require("annotations", "teacher.jsonl", hint="run annotate first")
    gold_path = ws.require("corpus", "gold.jsonl",
                           hint="mock validation needs synthetic gold annotations")
    teacher_segments = corpus_mod.read_annotations(teacher_path)
    gold_by_span = {(s.doc_id, s.start, s.end): s
                    for s in corpus_mod.read_annotations(gold_path)}
    expert = []
    for seg in teacher_segments:
        if seg.segment_id not in sampled:
            continue
        gold = gold_by_span.get((seg.doc_id, seg.start, seg.end))
        label = gold.label if gold is not None else seg.label
        expert.append(Segment(doc_id=seg.doc_id, label=label, start=seg.start,
                              end=seg.end, source="expert"))
    out = ws.path("validation", "expert.jsonl")
    corpus_mod.write_annotations(expert, out)
    write_stage_manifest(ws, "mock-validate", seed,
                         [subset_path, teacher_path, gold_path], [out])
    print(f"mock-validate: {len(expert)} segments validated")


def cmd_build_splits(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    seed = derive_seed(args.seed, "build-splits")
    teacher_path = ws.require("annotations", "teacher.jsonl", hint="run annotate first")
    expert_path = Path(args.expert) if args.expert else ws.require(
        "validation", "expert.jsonl",
        hint="run mock-validate or export from the review service first")
    teacher_segments = corpus_mod.read_annotations(teacher_path)
    expert_segments = corpus_mod.read_annotations(expert_path)
    combined = corpus_mod.apply_expert_overrides(teacher_segments, expert_segments)
    validated_ids = [s.segment_id for s in expert_segments]
    manifest, warnings = corpus_mod.build_splits(
        combined, validated_ids, args.k_ic, seed,
        scenario_id=scenario.id, scenario_labels=scenario.labels)
    manifest.created_from = "teacher annotations + expert validation"
    out = ws.path("splits", "splits.json")
    manifest.save(out)
    write_stage_manifest(ws, "build-splits", seed,
                         [teacher_path, expert_path], [out])
    for warning in warnings:
        print(f"warning: {warning}")
    print(f"build-splits: train={len(manifest.train)} test={len(manifest.test)} "
          f"in_context={len(manifest.in_context)}")


def _load_combined_segments(ws):
    teacher_segments = corpus_mod.read_annotations(
        ws.require("annotations", "teacher.jsonl", hint="run annotate first"))
    expert_path = ws.root / "validation" / "expert.jsonl"
    if expert_path.exists():
        expert_segments = corpus_mod.read_annotations(expert_path)
        return corpus_mod.apply_expert_overrides(teacher_segments, expert_segments)
    return teacher_segments


def cmd_train(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    seed = derive_seed(args.seed, "train")
    splits_path = ws.require("splits", "splits.json", hint="run build-splits first")
    manifest = SplitManifest.load(splits_path)
    documents = {d.doc_id: d for d in _load_corpus(ws, scenario)}
    segments = {s.segment_id: s for s in _load_combined_segments(ws)}
    texts, labels = [], []
    for sid in manifest.train:
        seg = segments[sid]
        texts.append(documents[seg.doc_id].text[seg.start:seg.end])
        labels.append(seg.label)
    if args.no_class_weights:
        weights = {}
    else:
        counts = corpus_mod.label_distribution(labels_to_segments(labels))
        weights = corpus_mod.compute_class_weights(counts, cap=args.weight_cap)
    config = student_mod.TrainingConfig(
        learning_rate=args.learning_rate, epochs=args.epochs,
        batch_size=args.batch_size, l2=args.l2, seed=seed, class_weights=weights)
    hasher = student_mod.HasherConfig(dimensions=args.dimensions)
    model = student_mod.train_student(texts, labels, list(scenario.labels),
                                      config, hasher)
    out = ws.path("models", "student.json")
    student_mod.save_model(model, out)
    write_stage_manifest(ws, "train", seed, [splits_path], [out])
    print(f"train: {len(texts)} examples, final loss {model.final_loss:.6f}")


def labels_to_segments(labels):
    """Adapter so label_distribution can count plain label lists."""
    return [Segment("x", label, 0, 1, "mock") for label in labels]


def _test_examples(ws, scenario, manifest):
    documents = {d.doc_id: d for d in _load_corpus(ws, scenario)}
    segments = {s.segment_id: s for s in _load_combined_segments(ws)}
    ids, texts, y_true = [], [], []
    for sid in manifest.test:
        seg = segments[sid]
        ids.append(sid)
        texts.append(documents[seg.doc_id].text[seg.start:seg.end])
        y_true.append(seg.label)
    return ids, texts, y_true


def cmd_evaluate(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    splits_path = ws.require("splits", "splits.json",
                             hint="run build-splits before evaluate")
    manifest = SplitManifest.load(splits_path)
    model_path = Path(args.model_file) if args.model_file else ws.require(
        "models", "student.json", hint="run train before evaluate")
    model = student_mod.load_model(model_path)
    ids, texts, y_true = _test_examples(ws, scenario, manifest)
    if not ids:
        raise TagDistillError("test split is empty; validate more segments first")
    scores, y_pred = student_mod.predict_batch(model, texts)
    report = eval_mod.evaluate_predictions(
        args.model_id, scenario.id, y_true, y_pred, scores, list(scenario.labels))
    eval_path = ws.path("reports", f"eval_{args.model_id}.json")
    with open(eval_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    pred_path = ws.path("predictions", f"{args.model_id}.jsonl")
    with open(pred_path, "w", encoding="utf-8") as fh:
        for i, sid in enumerate(ids):
            fh.write(json.dumps({
                "id": sid, "true": y_true[i], "predicted": y_pred[i],
                "correct": bool(y_true[i] == y_pred[i]),
                "scores": [float(v) for v in scores[i]],
            }))
            fh.write("\n")
    write_stage_manifest(ws, f"evaluate-{args.model_id}", args.seed,
                         [splits_path, model_path], [eval_path, pred_path])
    print(f"evaluate[{args.model_id}]: macro-F1 {report.macro_f1:.4f} "
          f"AUROC {report.macro_auroc:.4f} accuracy {report.accuracy:.4f} "
          f"CI ({report.accuracy_ci[0]:.4f}, {report.accuracy_ci[1]:.4f}) n={report.n}")


def cmd_export_external(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    manifest = SplitManifest.load(ws.require("splits", "splits.json",
                                             hint="run build-splits first"))
    documents = {d.doc_id: d for d in _load_corpus(ws, scenario)}
    segments = {s.segment_id: s for s in _load_combined_segments(ws)}
    out_dir = ws.path("external", "bundle")
    hashes = student_mod.export_for_external_trainer(
        manifest, segments, documents, scenario, out_dir)
    manifest_path = ws.path("external", "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump({"files": hashes}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"export-external: wrote {len(hashes)} files to {out_dir}")


def cmd_import_predictions(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    manifest = SplitManifest.load(ws.require("splits", "splits.json",
                                             hint="run build-splits first"))
    ids, _, y_true = _test_examples(ws, scenario, manifest)
    predictions = student_mod.import_external_predictions(
        args.input, list(scenario.labels), expected_ids=ids)
    missing = [sid for sid in ids if sid not in predictions]
    if missing:
        raise TagDistillError(f"predictions missing {len(missing)} test ids "
                              f"(e.g. {missing[0]})")
    labels = list(scenario.labels)
    pred_path = ws.path("predictions", f"{args.model_id}.jsonl")
    with open(pred_path, "w", encoding="utf-8") as fh:
        for sid, true in zip(ids, y_true):
            scores = predictions[sid]
            predicted = labels[int(np.argmax(scores))]
            fh.write(json.dumps({
                "id": sid, "true": true, "predicted": predicted,
                "correct": bool(predicted == true),
                "scores": [float(v) for v in scores],
            }))
            fh.write("\n")
    report = eval_mod.evaluate_predictions(
        args.model_id, scenario.id, y_true,
        [labels[int(np.argmax(predictions[sid]))] for sid in ids],
        np.array([predictions[sid] for sid in ids]), labels)
    eval_path = ws.path("reports", f"eval_{args.model_id}.json")
    with open(eval_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"import-predictions[{args.model_id}]: {len(ids)} test predictions imported")


def _read_prediction_sets(ws, model_ids=None):
    pred_dir = ws.root / "predictions"
    if model_ids:
        paths = [pred_dir / f"{m}.jsonl" for m in model_ids]
    else:
        paths = sorted(pred_dir.glob("*.jsonl")) if pred_dir.exists() else []
    sets = {}
    for path in paths:
        if not path.exists():
            raise TagDistillError(f"missing predictions file {path}")
        rows = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    rows[obj["id"]] = obj
        sets[path.stem] = rows
    return sets


def cmd_compare(ws, args):
    sets = _read_prediction_sets(ws, args.models)
    if len(sets) < 2:
        raise TagDistillError("compare needs at least 2 prediction sets "
                              "(run evaluate / import-predictions first)")
    names = sorted(sets)
    common = set.intersection(*(set(rows) for rows in sets.values()))
    ids = sorted(common)
    comparisons = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            result = eval_mod.wilcoxon_paired(
                [sets[a][sid]["correct"] for sid in ids],
                [sets[b][sid]["correct"] for sid in ids],
                model_a=a, model_b=b)
            comparisons.append(result)
    out = ws.path("reports", "comparisons.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump([{
            "model_a": c.model_a, "model_b": c.model_b, "stat": c.stat,
            "p_value": c.p_value, "n_effective": c.n_effective, "method": c.method,
        } for c in comparisons], fh, sort_keys=True, indent=2)
        fh.write("\n")
    for c in comparisons:
        p = "-" if c.p_value is None else f"{c.p_value:.4g}"
        print(f"compare: {c.model_a} vs {c.model_b} stat={c.stat} p={p} "
              f"n_effective={c.n_effective} ({c.method})")


def cmd_bench(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    model = student_mod.load_model(ws.require("models", "student.json",
                                              hint="run train before bench"))
    documents = _load_corpus(ws, scenario)[:args.docs]
    record = eval_mod.benchmark_inference(
        lambda doc: student_mod.predict(model, doc.text), documents,
        repetitions=args.repetitions, warmup=args.warmup,
        model_id=args.model_id, scenario_id=scenario.id)
    out = ws.path("reports", "bench.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump([{
            "model_id": record.model_id, "scenario_id": record.scenario_id,
            "mean_seconds": record.mean_seconds, "p50": record.p50,
            "p95": record.p95, "repetitions": record.repetitions,
        }], fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"bench[{record.model_id}]: mean {record.mean_seconds:.6f}s "
          f"p50 {record.p50:.6f}s p95 {record.p95:.6f}s over {len(documents)} docs")


def cmd_report(ws, args):
    reports_dir = ws.root / "reports"
    metrics = []
    for path in sorted(reports_dir.glob("eval_*.json")) if reports_dir.exists() else []:
        with open(path, encoding="utf-8") as fh:
            metrics.append(eval_mod.MetricsReport.from_dict(json.load(fh)))
    if not metrics:
        raise TagDistillError("no eval_*.json found; run evaluate first")
    comparisons = []
    cmp_path = reports_dir / "comparisons.json"
    if cmp_path.exists():
        with open(cmp_path, encoding="utf-8") as fh:
            for row in json.load(fh):
                comparisons.append(eval_mod.ComparisonResult(**row))
    benchmarks = []
    bench_path = reports_dir / "bench.json"
    if bench_path.exists():
        with open(bench_path, encoding="utf-8") as fh:
            for row in json.load(fh):
                benchmarks.append(eval_mod.BenchmarkRecord(**row))
    written = eval_mod.emit_report(metrics, comparisons, benchmarks,
                                   reports_dir, fmt=args.format)
    print(f"report: wrote {len(written)} files to {reports_dir}")


def cmd_serve_review(ws, args):
    scenario = _load_workspace_scenario(ws, args)
    documents = _load_corpus(ws, scenario)
    teacher_segments = corpus_mod.read_annotations(
        ws.require("annotations", "teacher.jsonl", hint="run annotate first"))
    subset_doc_ids = None
    subset_path = ws.root / "validation" / "subset.json"
    if subset_path.exists():
        with open(subset_path, encoding="utf-8") as fh:
            sampled = json.load(fh)["segment_ids"]
        subset_doc_ids = {sid.rsplit(":", 2)[0] for sid in sampled}
    splits_manifest = None
    splits_path = ws.root / "splits" / "splits.json"
    if splits_path.exists():
        splits_manifest = SplitManifest.load(splits_path)
    log = review_mod.EventLog(str(ws.path("review", "events.log")))
    store = review_mod.ReviewStore(scenario, documents, teacher_segments, log,
                                   subset_doc_ids=subset_doc_ids,
                                   splits_manifest=splits_manifest)
    server = review_mod.create_server(store, port=args.port, host=args.host,
                                      static_dir=args.static_dir)
    print(f"serve-review: listening on {server.server_address[0]}:"
          f"{server.server_address[1]} with {len(store.tasks)} tasks", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        log.close()


def cmd_pipeline(ws, args):
    if not args.mock:
        raise TagDistillError("pipeline currently requires --mock (no live endpoint)")
    stages = []
    if args.synth:
        stages.append(("synth", cmd_synth))
    stages += [
        ("ingest", cmd_ingest),
        ("annotate", cmd_annotate),
        ("sample-validation", cmd_sample_validation),
        ("mock-validate", cmd_mock_validate),
        ("build-splits", cmd_build_splits),
        ("train", cmd_train),
        ("evaluate", cmd_evaluate),
        ("report", cmd_report),
    ]
    for name, fn in stages:
        print(f"--- stage: {name}")
        fn(ws, args)
    print("pipeline: complete")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tagdistill",
        description="Teacher-to-student annotation distillation pipeline")
    parser.add_argument("--workspace", required=True, help="workspace directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--scenario", help="scenario config file (default: workspace/scenario.json)")
    parser.add_argument("--format", choices=["json", "table"], default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus fixture")
    p.add_argument("--docs", type=int, default=1000)
    p.add_argument("--labels", type=int, default=8)
    p.add_argument("--synth-noise", type=float, default=0.0)
    p.add_argument("--min-segments", type=int, default=1)
    p.add_argument("--max-segments", type=int, default=3)

    p = sub.add_parser("ingest", help="load and cap a corpus file")
    p.add_argument("--corpus")
    p.add_argument("--cap", type=int, default=DEFAULT_CATEGORY_CAP)

    p = sub.add_parser("annotate", help="teacher annotation pass")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--endpoint-url")
    p.add_argument("--model", default="llama")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--retries", type=int, default=teacher_mod.DEFAULT_RETRIES)

    p = sub.add_parser("sample-validation", help="pick the expert validation subset")
    p.add_argument("--min-per-label", type=int, default=DEFAULT_MIN_PER_LABEL)
    p.add_argument("--target-size", type=int)

    sub.add_parser("mock-validate", help="simulate expert validation from synthetic gold")

    p = sub.add_parser("build-splits", help="assign segments to train/test/in-context")
    p.add_argument("--k-ic", type=int, default=DEFAULT_IN_CONTEXT_PER_LABEL)
    p.add_argument("--expert", help="expert annotations file "
                                    "(default: workspace/validation/expert.jsonl)")

    p = sub.add_parser("train", help="train the native student classifier")
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--l2", type=float, default=1e-5)
    p.add_argument("--dimensions", type=int, default=2**18)
    p.add_argument("--weight-cap", type=float, default=corpus_mod.DEFAULT_WEIGHT_CAP)
    p.add_argument("--no-class-weights", action="store_true")

    p = sub.add_parser("evaluate", help="evaluate a model on the test split")
    p.add_argument("--model-id", default="student")
    p.add_argument("--model-file")

    sub.add_parser("export-external", help="write the external-trainer exchange bundle")

    p = sub.add_parser("import-predictions", help="bring external predictions into the harness")
    p.add_argument("--input", required=True)
    p.add_argument("--model-id", required=True)

    p = sub.add_parser("compare", help="pairwise Wilcoxon across prediction sets")
    p.add_argument("--models", nargs="*")

    p = sub.add_parser("bench", help="inference-time benchmark")
    p.add_argument("--model-id", default="student")
    p.add_argument("--docs", type=int, default=100)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)

    sub.add_parser("report", help="emit the combined report files")

    p = sub.add_parser("serve-review", help="run the expert review HTTP service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir")

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--synth", action="store_true")
    p.add_argument("--docs", type=int, default=1000)
    p.add_argument("--labels", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.0,
                   help="teacher label-noise rate for the mock endpoint")
    p.add_argument("--synth-noise", type=float, default=0.0)
    p.add_argument("--min-segments", type=int, default=1)
    p.add_argument("--max-segments", type=int, default=3)
    p.add_argument("--cap", type=int, default=DEFAULT_CATEGORY_CAP)
    p.add_argument("--corpus")
    p.add_argument("--endpoint-url")
    p.add_argument("--model", default="llama")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--retries", type=int, default=teacher_mod.DEFAULT_RETRIES)
    p.add_argument("--min-per-label", type=int, default=DEFAULT_MIN_PER_LABEL)
    p.add_argument("--target-size", type=int)
    p.add_argument("--k-ic", type=int, default=DEFAULT_IN_CONTEXT_PER_LABEL)
    p.add_argument("--expert")
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--l2", type=float, default=1e-5)
    p.add_argument("--dimensions", type=int, default=2**18)
    p.add_argument("--weight-cap", type=float, default=corpus_mod.DEFAULT_WEIGHT_CAP)
    p.add_argument("--no-class-weights", action="store_true")
    p.add_argument("--model-id", default="student")
    p.add_argument("--model-file")

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "annotate": cmd_annotate,
    "sample-validation": cmd_sample_validation,
    "mock-validate": cmd_mock_validate,
    "build-splits": cmd_build_splits,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "export-external": cmd_export_external,
    "import-predictions": cmd_import_predictions,
    "compare": cmd_compare,
    "bench": cmd_bench,
    "report": cmd_report,
    "serve-review": cmd_serve_review,
    "pipeline": cmd_pipeline,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    ws = Workspace(args.workspace)
    ws.root.mkdir(parents=True, exist_ok=True)
    try:
        with workspace_lock(ws):
            COMMANDS[args.command](ws, args)
    except TagDistillError as exc:
        detail = " ".join(str(exc).split())
        print(f"error: {detail}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

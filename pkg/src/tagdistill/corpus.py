"""Corpus handling: documents, labeled segments, splits, weights, fixtures.

All character offsets are Unicode scalar-value indices (Python string
indices), never bytes. Polish diacritics make byte offsets fragile when
text moves between components.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DuplicateIdError,
    EmptyDistributionError,
    InfeasibleTargetError,
    MalformedLineError,
    ValidationError,
)
from .hashing import derive_seed
from .scenario import Violation

SOURCES = ("teacher", "expert", "mock")

DEFAULT_CATEGORY_CAP = 5000
DEFAULT_WEIGHT_CAP = 50.0
DEFAULT_MIN_PER_LABEL = 20
DEFAULT_IN_CONTEXT_PER_LABEL = 2


@dataclass(frozen=True)
class Document:
    doc_id: str
    scenario_id: str
    text: str


@dataclass(frozen=True)
class Segment:
    doc_id: str
    label: str
    start: int
    end: int
    source: str
    model_id: str = None

    @property
    def segment_id(self) -> str:
        return f"{self.doc_id}:{self.start}:{self.end}"


@dataclass
class CorpusStats:
    count: int
    total_chars: int


def read_corpus(path, scenario_id, cap=None):
    """Read a JSON-lines corpus file into documents.

    When `cap` is set, retention is the first `cap` documents in file
    order, deterministically.
    """
    docs = []
    seen = set()
    total_chars = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if cap is not None and len(docs) >= cap:
                break
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(lineno, str(exc)) from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise MalformedLineError(lineno, "expected object with 'id' and 'text'")
            doc_id = str(obj["id"])
            text = obj["text"]
            if not isinstance(text, str) or len(text) < 1:
                raise MalformedLineError(lineno, "'text' must be a non-empty string")
            if doc_id in seen:
                raise DuplicateIdError(f"doc id {doc_id!r} repeated at line {lineno}")
            seen.add(doc_id)
            docs.append(Document(doc_id=doc_id, scenario_id=scenario_id, text=text))
            total_chars += len(text)
    return docs, CorpusStats(count=len(docs), total_chars=total_chars)


def write_corpus(documents, path):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps({"id": doc.doc_id, "text": doc.text}, ensure_ascii=False))
            fh.write("\n")


def validate_doc_segments(text, labels, segments):
    """Check span bounds, label membership, ordering and non-overlap for one document.

    Returns a list of human-readable problems; empty means valid.
    """
    problems = []
    n = len(text)
    prev_end = 0
    for i, seg in enumerate(segments):
        if labels is not None and seg.label not in labels:
            problems.append(f"segments[{i}]: unknown label {seg.label!r}")
        if not (0 <= seg.start < seg.end <= n):
            problems.append(f"segments[{i}]: span ({seg.start}, {seg.end}) outside text of length {n}")
            continue
        if seg.start < prev_end:
            problems.append(f"segments[{i}]: span ({seg.start}, {seg.end}) overlaps or is out of order")
        prev_end = max(prev_end, seg.end)
    return problems


def read_annotations(path):
    """Read a JSON-lines annotations file into a flat segment list."""
    segments = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(lineno, str(exc)) from exc
            try:
                doc_id = str(obj["doc_id"])
                source = str(obj["source"])
                model_id = obj.get("model_id")
                for raw in obj["segments"]:
                    segments.append(Segment(
                        doc_id=doc_id,
                        label=str(raw["label"]),
                        start=int(raw["start"]),
                        end=int(raw["end"]),
                        source=source,
                        model_id=model_id,
                    ))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedLineError(lineno, f"bad annotation record: {exc}") from exc
    return segments


def write_annotations(segments, path):
    """Write segments grouped per (doc, source, model) as JSON lines."""
    groups = {}
    order = []
    for seg in segments:
        key = (seg.doc_id, seg.source, seg.model_id)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(seg)
    with open(path, "w", encoding="utf-8") as fh:
        for key in order:
            doc_id, source, model_id = key
            segs = sorted(groups[key], key=lambda s: s.start)
            fh.write(json.dumps({
                "doc_id": doc_id,
                "source": source,
                "model_id": model_id,
                "segments": [
                    {"label": s.label, "start": s.start, "end": s.end} for s in segs
                ],
            }, ensure_ascii=False))
            fh.write("\n")


def label_distribution(segments, labels=None):
    """Count segments per label; zero counts included for the full label set."""
    counts = {label: 0 for label in (labels or ())}
    for seg in segments:
        counts[seg.label] = counts.get(seg.label, 0) + 1
    return counts


def compute_class_weights(counts, cap=DEFAULT_WEIGHT_CAP):
    """Inverse-frequency balanced weights: w_c = N / (K * n_c), clamped to `cap`.

    Labels with zero count are omitted. Without clamping the identity
    sum(n_c * w_c) == N holds exactly.
    """
    present = {label: n for label, n in counts.items() if n > 0}
    if not present:
        raise EmptyDistributionError("no label has a nonzero count")
    total = sum(present.values())
    k = len(present)
    return {label: min(total / (k * n), cap) for label, n in present.items()}


def sample_validation_subset(segments, min_per_label, target_size, seed):
    """Pick segment ids for expert validation so every label is represented.

    Round-robin over per-label pools (shuffled by seed) until each label has
    min(min_per_label, available) picks, then uniform fill up to target_size.
    Pure function of (input, seed).
    """
    if min_per_label < 1:
        raise InfeasibleTargetError("min_per_label must be >= 1")
    by_label = {}
    for seg in segments:
        by_label.setdefault(seg.label, []).append(seg.segment_id)
    labels = sorted(by_label)
    if not labels:
        return []
    if target_size < len(labels):
        raise InfeasibleTargetError(
            f"target_size {target_size} cannot cover {len(labels)} labels")
    rng = np.random.default_rng(seed)
    pools = {}
    for label in labels:
        pool = sorted(by_label[label])
        rng.shuffle(pool)
        pools[label] = pool
    chosen = []
    for _ in range(min_per_label):
        for label in labels:
            if pools[label] and len(chosen) < target_size:
                chosen.append(pools[label].pop())
    leftovers = [sid for label in labels for sid in pools[label]]
    rng.shuffle(leftovers)
    while leftovers and len(chosen) < target_size:
        chosen.append(leftovers.pop())
    return chosen


@dataclass
class SplitManifest:
    scenario_id: str
    train: list
    test: list
    in_context: list
    seed: int
    created_from: str = ""

    def to_dict(self):
        return {
            "scenario_id": self.scenario_id,
            "train": list(self.train),
            "test": list(self.test),
            "in_context": list(self.in_context),
            "seed": self.seed,
            "created_from": self.created_from,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            scenario_id=data["scenario_id"],
            train=list(data["train"]),
            test=list(data["test"]),
            in_context=list(data["in_context"]),
            seed=int(data["seed"]),
            created_from=data.get("created_from", ""),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def build_splits(all_segments, validated_ids, k_ic, seed, scenario_id="",
                 scenario_labels=None):
    """Assign validated segments to in-context/test pools, the rest to train.

    Returns (manifest, warnings). Labels with too few validated segments keep
    at least one test item and get fewer in-context slots, with a warning.
    """
    validated_ids = set(validated_ids)
    by_id = {seg.segment_id: seg for seg in all_segments}
    missing = validated_ids - set(by_id)
    if missing:
        raise ValidationError([Violation(
            "UnknownSegment", "validated_ids", f"{len(missing)} ids not in segment set")])
    non_expert = [sid for sid in validated_ids if by_id[sid].source != "expert"]
    if non_expert:
        raise ValidationError([Violation(
            "NotValidated", "validated_ids",
            f"{len(non_expert)} segments lack expert source (e.g. {sorted(non_expert)[0]})")])

    warnings = []
    by_label = {}
    for sid in sorted(validated_ids):
        by_label.setdefault(by_id[sid].label, []).append(sid)
    rng = np.random.default_rng(seed)
    in_context, test = [], []
    for label in sorted(by_label):
        ids = by_label[label]
        rng.shuffle(ids)
        avail = len(ids)
        if avail < k_ic + 1:
            take = max(0, avail - 1)
            warnings.append(
                f"InsufficientValidated: label {label} has only {avail} validated "
                f"segments; using {take} in-context")
        else:
            take = k_ic
        in_context.extend(ids[:take])
        test.extend(ids[take:])
    if scenario_labels is not None:
        for label in scenario_labels:
            if label not in by_label:
                warnings.append(f"MissingLabel: label {label} has no validated segments")
    train = [seg.segment_id for seg in all_segments if seg.segment_id not in validated_ids]
    manifest = SplitManifest(
        scenario_id=scenario_id,
        train=sorted(train),
        test=sorted(test),
        in_context=sorted(in_context),
        seed=seed,
    )
    return manifest, warnings


def split_sentences(text):
    """Sentence spans used by both the fixture generator and the mock teacher.

    A sentence ends at '.', '?' or '!' followed by whitespace or end of text,
    or at a newline. Returned spans cover the sentence including its final
    punctuation, excluding surrounding whitespace.
    """
    spans = []
    start = None
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if start is None:
            if not ch.isspace():
                start = i
            i += 1
            continue
        if ch == "\n":
            end = i
            while end > start and text[end - 1].isspace():
                end -= 1
            if end > start:
                spans.append((start, end))
            start = None
        elif ch in ".?!" and (i + 1 == n or text[i + 1].isspace()):
            spans.append((start, i + 1))
            start = None
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans


FILLER_WORDS = (
    "badanie wynik pacjent kontrola obraz opis norma zmiana obszar struktura "
    "widoczne stwierdza cechy okolica poziom granica przebieg stan ocena tkanka "
    "lewy prawy obie strona czesc material preparat plan dalszy zalecenie "
    "obecnie ponownie wyraznie miernie znacznie typowy drobny rozlany pojedynczy liczne"
).split()


@dataclass(frozen=True)
class SynthSpec:
    labels: tuple
    keywords: dict  # label -> list of keyword strings
    n_docs: int
    segments_per_doc: tuple = (1, 3)
    noise: float = 0.0
    scenario_id: str = "synthetic"


def generate_synthetic_corpus(spec: SynthSpec, seed: int):
    """Build a keyword-planted corpus with gold segments.

    Each segment is one sentence containing exactly one keyword of its true
    label plus filler words. With probability `noise` the emitted gold label
    is swapped for a uniformly different one. Structure and noise use separate
    derived RNG streams, so runs differing only in `noise` share identical
    texts.
    """
    for label in spec.labels:
        if not spec.keywords.get(label):
            raise ValidationError([Violation(
                "MissingKeywords", f"keywords[{label}]", "every label needs at least one keyword")])
    all_keywords = [kw for kws in spec.keywords.values() for kw in kws]
    if len(all_keywords) != len(set(all_keywords)):
        raise ValidationError([Violation(
            "DuplicateKeyword", "keywords", "keywords must be pairwise distinct across labels")])
    fillers = [w for w in FILLER_WORDS if w not in set(all_keywords)]
    structure_rng = np.random.default_rng(derive_seed(seed, "structure"))
    noise_rng = np.random.default_rng(derive_seed(seed, "noise"))
    lo, hi = spec.segments_per_doc
    labels = list(spec.labels)

    documents = []
    gold = []
    for i in range(spec.n_docs):
        doc_id = f"doc{i:05d}"
        n_segments = int(structure_rng.integers(lo, hi + 1))
        sentences = []
        cursor = 0
        for _ in range(n_segments):
            label = labels[int(structure_rng.integers(len(labels)))]
            kws = spec.keywords[label]
            keyword = kws[int(structure_rng.integers(len(kws)))]
            n_fill = int(structure_rng.integers(3, 8))
            words = [fillers[int(structure_rng.integers(len(fillers)))] for _ in range(n_fill)]
            words.insert(int(structure_rng.integers(n_fill + 1)), keyword)
            sentence = " ".join(words) + "."
            start, end = cursor, cursor + len(sentence)
            emitted = label
            # always draw so the noise stream stays aligned across noise settings
            flip = noise_rng.random() < spec.noise
            if flip and len(labels) > 1:
                others = [l for l in labels if l != label]
                emitted = others[int(noise_rng.integers(len(others)))]
            else:
                noise_rng.integers(max(1, len(labels) - 1))
            gold.append(Segment(doc_id=doc_id, label=emitted, start=start, end=end, source="mock"))
            sentences.append(sentence)
            cursor = end + 1
        documents.append(Document(doc_id=doc_id, scenario_id=spec.scenario_id,
                                  text=" ".join(sentences)))
    return documents, gold


def apply_expert_overrides(segments, overrides):
    """Replace teacher segments with expert verdicts keyed by segment id."""
    by_id = {seg.segment_id: seg for seg in overrides}
    out = []
    for seg in segments:
        expert = by_id.get(seg.segment_id)
        if expert is not None:
            out.append(replace(seg, label=expert.label, source="expert",
                               model_id=expert.model_id))
        else:
            out.append(seg)
    return out

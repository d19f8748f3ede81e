"""Teacher side of the distillation: prompts, reply parsing, annotation runs.

The teacher replies with a JSON array of {"label", "text"} pairs — verbatim
spans, not offsets, because chat models reproduce text far more reliably
than they count characters. Offsets are recovered by greedy left-to-right
location in the source document.
"""

import json
import logging
import os
import re
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .corpus import Segment, split_sentences
from .errors import (
    EndpointUnreachableError,
    NotJsonError,
    OverlapAfterLocationError,
    SegmentNotFoundError,
    TransportError,
    UnknownLabelError,
)
from .hashing import derive_seed

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_MAX_EXAMPLES = 8
DEFAULT_RETRIES = 2
DEFAULT_BACKOFF = 1.0
DEFAULT_TEMPERATURE = 0.0

DEFAULT_OUTPUT_INSTRUCTION = (
    "Reply with a JSON array only. Each element must be an object with a "
    '"label" field holding one of the labels above and a "text" field holding '
    "the verbatim passage from the input that the label applies to. Do not "
    "add any other text."
)


def canonical_annotation_json(segments, text):
    """The assistant-turn serialization of labeled segments."""
    return json.dumps(
        [{"label": seg.label, "text": text[seg.start:seg.end]} for seg in segments],
        ensure_ascii=False,
    )


def build_prompt(scenario, document_text, max_examples=DEFAULT_MAX_EXAMPLES):
    """Assemble the system + few-shot + document message sequence.

    Produces 2*k + 2 messages for k in-context examples used.
    """
    system = (
        f"{scenario.system_message}\n\n"
        f"Available labels: {', '.join(scenario.labels)}\n\n"
        f"{scenario.output_instruction}"
    )
    messages = [{"role": "system", "content": system}]
    for example in scenario.in_context[:max_examples]:
        segs = [Segment("example", label, start, end, "mock")
                for label, start, end in example.segments]
        messages.append({"role": "user", "content": example.text})
        messages.append({"role": "assistant",
                         "content": canonical_annotation_json(segs, example.text)})
    messages.append({"role": "user", "content": document_text})
    return messages


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\n(.*?)\n?```\s*$", re.DOTALL)
_WS_RE = re.compile(r"\s+")


def _strip_code_fence(raw):
    stripped = raw.strip()
    match = _FENCE_RE.match(stripped)
    return match.group(1) if match else stripped


def _normalize_needle(text):
    return _WS_RE.sub(" ", unicodedata.normalize("NFC", text)).strip()


def _build_search_form(text):
    """NFC-normalized, whitespace-collapsed copy of `text` with an offset map.

    Returns (search string, starts, ends) where starts[i]/ends[i] give the
    original-text span covered by search character i. NFC is applied per
    combining sequence so every produced character maps back to a span of
    the original.
    """
    chars = []
    starts = []
    ends = []
    i = 0
    n = len(text)
    pending_space = False
    while i < n:
        if text[i].isspace():
            if chars:  # drop leading whitespace
                pending_space = True
            i += 1
            continue
        # one base character plus its combining marks
        j = i + 1
        while j < n and unicodedata.combining(text[j]):
            j += 1
        cluster = unicodedata.normalize("NFC", text[i:j])
        if pending_space:
            chars.append(" ")
            starts.append(i)
            ends.append(i)
            pending_space = False
        for ch in cluster:
            chars.append(ch)
            starts.append(i)
            ends.append(j)
        i = j
    return "".join(chars), starts, ends


def parse_teacher_output(raw, scenario, source_text):
    """Parse a teacher reply into located, validated segments.

    Raises NotJsonError, UnknownLabelError, SegmentNotFoundError or
    OverlapAfterLocationError; each maps to the upstream retry policy.
    """
    body = _strip_code_fence(raw)
    try:
        entries = json.loads(body)
    except json.JSONDecodeError as exc:
        raise NotJsonError(str(exc)) from exc
    if not isinstance(entries, list):
        raise NotJsonError("expected a JSON array")

    search, starts, ends = _build_search_form(source_text)
    segments = []
    cursor = 0
    prev_end = 0
    for entry in entries:
        if not isinstance(entry, dict) or "label" not in entry or "text" not in entry:
            raise NotJsonError("each element must be an object with 'label' and 'text'")
        label = str(entry["label"])
        if label not in scenario.label_set:
            raise UnknownLabelError(label)
        needle = _normalize_needle(str(entry["text"]))
        if not needle:
            raise SegmentNotFoundError("")
        pos = search.find(needle, cursor)
        if pos < 0:
            # nothing left after the cursor: the teacher went backwards or
            # overlapped; locate from the start so the overlap check can
            # report it distinctly
            pos = search.find(needle)
        if pos < 0:
            raise SegmentNotFoundError(needle[:40])
        start = starts[pos]
        end = ends[pos + len(needle) - 1]
        cursor = pos + len(needle)
        if start < prev_end:
            raise OverlapAfterLocationError(
                f"segment at ({start}, {end}) overlaps previous ending at {prev_end}")
        prev_end = end
        segments.append((label, start, end))
    return segments


def mock_teacher_annotate(document, keyword_map, noise=0.0, seed=0,
                          fallback_label=None, labels=None):
    """Deterministic keyword-rule stand-in for the LLM teacher.

    Sentences containing exactly one known keyword get that keyword's label;
    others fall back to `fallback_label` or are skipped. With probability
    `noise` a label is swapped for a uniformly different one. Seeded per
    document, so concurrency order never changes the output.
    """
    text = document.text
    kw_to_label = {}
    for label, kws in keyword_map.items():
        for kw in kws:
            kw_to_label[kw] = label
    label_pool = list(labels) if labels else sorted(set(keyword_map))
    rng = np.random.default_rng(derive_seed(seed, f"mock:{document.doc_id}"))
    segments = []
    for start, end in split_sentences(text):
        words = re.findall(r"\w+", text[start:end], flags=re.UNICODE)
        hits = {kw_to_label[w] for w in words if w in kw_to_label}
        if len(hits) == 1:
            label = hits.pop()
        elif fallback_label is not None:
            label = fallback_label
        else:
            continue
        flip = rng.random() < noise
        if flip and len(label_pool) > 1:
            others = [l for l in label_pool if l != label]
            label = others[int(rng.integers(len(others)))]
        else:
            rng.integers(max(1, len(label_pool) - 1))
        segments.append(Segment(doc_id=document.doc_id, label=label,
                                start=start, end=end, source="mock"))
    return segments


@dataclass
class EndpointConfig:
    url: str
    model: str
    api_key: str = None
    temperature: float = DEFAULT_TEMPERATURE
    timeout: float = 60.0

    @classmethod
    def from_env(cls, url, model, **kwargs):
        return cls(url=url, model=model,
                   api_key=os.environ.get("TEACHER_API_KEY"), **kwargs)


class HttpChatEndpoint:
    """Client for any endpoint speaking the open chat-completions wire shape."""

    def __init__(self, config: EndpointConfig, session=None):
        self.config = config
        self.model_id = config.model
        self._session = session or requests.Session()

    def complete(self, messages):
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        body = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        }
        try:
            resp = self._session.post(self.config.url, json=body, headers=headers,
                                      timeout=self.config.timeout)
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise TransportError(str(exc)) from exc


class MockChatEndpoint:
    """In-process endpoint that answers with canonical mock-teacher annotations."""

    def __init__(self, keyword_map, noise=0.0, seed=0, fallback_label=None,
                 labels=None, model_id="mock-teacher"):
        self.keyword_map = keyword_map
        self.noise = noise
        self.seed = seed
        self.fallback_label = fallback_label
        self.labels = labels
        self.model_id = model_id

    def complete(self, messages):
        from .corpus import Document
        from .hashing import fnv1a64

        text = messages[-1]["content"]
        # the wire only carries text, so key the per-document noise stream
        # on a stable content hash
        doc = Document(doc_id=f"h{fnv1a64(text.encode('utf-8')):016x}",
                       scenario_id="", text=text)
        segments = mock_teacher_annotate(doc, self.keyword_map, self.noise,
                                         self.seed, self.fallback_label, self.labels)
        return canonical_annotation_json(segments, text)


@dataclass
class DocAnnotation:
    doc_id: str
    segments: list
    attempts: int
    model_id: str


@dataclass
class AnnotationFailure:
    doc_id: str
    error_kind: str
    detail: str
    attempts: int

    def to_dict(self):
        return {"doc_id": self.doc_id, "error_kind": self.error_kind,
                "detail": self.detail, "attempts": self.attempts}


def annotate_document(document, scenario, endpoint, max_retries=DEFAULT_RETRIES,
                      backoff=DEFAULT_BACKOFF, max_examples=DEFAULT_MAX_EXAMPLES):
    """Annotate one document with retries and exponential backoff."""
    messages = build_prompt(scenario, document.text, max_examples)
    last_error = None
    model_id = getattr(endpoint, "model_id", "unknown")
    for attempt in range(max_retries + 1):
        if attempt > 0 and backoff > 0:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            raw = endpoint.complete(messages)
            located = parse_teacher_output(raw, scenario, document.text)
        except (TransportError, NotJsonError, UnknownLabelError,
                SegmentNotFoundError, OverlapAfterLocationError) as exc:
            last_error = exc
            continue
        segments = [Segment(doc_id=document.doc_id, label=label, start=start,
                            end=end, source="teacher", model_id=model_id)
                    for label, start, end in located]
        return DocAnnotation(doc_id=document.doc_id, segments=segments,
                             attempts=attempt + 1, model_id=model_id), None
    failure = AnnotationFailure(doc_id=document.doc_id,
                                error_kind=last_error.kind,
                                detail=str(last_error),
                                attempts=max_retries + 1)
    return None, failure


def annotate_corpus(documents, scenario, endpoint, concurrency=4,
                    max_retries=DEFAULT_RETRIES, backoff=DEFAULT_BACKOFF,
                    max_examples=DEFAULT_MAX_EXAMPLES):
    """Annotate a corpus, collecting per-document failures as data.

    Results preserve input document order. Raises EndpointUnreachableError
    only when not a single request succeeded.
    """
    annotations = []
    failures = []
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        results = list(pool.map(
            lambda doc: annotate_document(doc, scenario, endpoint,
                                          max_retries, backoff, max_examples),
            documents))
    for annotation, failure in results:
        if annotation is not None:
            annotations.append(annotation)
        else:
            failures.append(failure)
    if documents and not annotations and all(
            f.error_kind == "TransportError" for f in failures):
        raise EndpointUnreachableError("no request ever succeeded")
    return annotations, failures


def write_failure_report(failures, path):
    with open(path, "w", encoding="utf-8") as fh:
        for failure in failures:
            fh.write(json.dumps(failure.to_dict(), ensure_ascii=False))
            fh.write("\n")

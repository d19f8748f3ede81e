"""Compact student classifier: hashed n-gram features + weighted softmax regression.

Determinism is a hard requirement here: training is plain seeded mini-batch
gradient descent, the feature hash is pinned to FNV-1a 64, and the model
serializes to a single JSON document.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import sparse

from .errors import (
    DegenerateDataError,
    EmptyTextError,
    NonFiniteLossError,
    NotAProbabilityError,
    ShapeMismatchError,
    UnknownIdError,
)
from .hashing import fnv1a64

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class HasherConfig:
    dimensions: int = 2**18
    word_unigrams: bool = True
    char_ngram_min: int = 3
    char_ngram_max: int = 5
    lowercase: bool = True
    signed_hashing: bool = True

    def __post_init__(self):
        if self.dimensions < 2**10:
            raise ValueError("dimensions must be at least 2^10")
        if self.char_ngram_min < 2 or self.char_ngram_max < self.char_ngram_min:
            raise ValueError("char n-gram range must be nonempty with min >= 2")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _feature_strings(text, config):
    if config.lowercase:
        text = text.lower()
    for token in _TOKEN_RE.findall(text):
        if config.word_unigrams:
            yield "u=" + token
        for n in range(config.char_ngram_min, config.char_ngram_max + 1):
            for i in range(len(token) - n + 1):
                yield f"c{n}=" + token[i:i + n]


def featurize(text, config: HasherConfig):
    """Hash a text into a sparse L2-normalized vector (index -> value)."""
    if not text:
        raise EmptyTextError("cannot featurize empty text")
    accum = {}
    dims = config.dimensions
    for feat in _feature_strings(text, config):
        h = fnv1a64(feat.encode("utf-8"))
        idx = h % dims
        sign = -1.0 if config.signed_hashing and (h >> 63) & 1 else 1.0
        accum[idx] = accum.get(idx, 0.0) + sign
    norm = np.sqrt(sum(v * v for v in accum.values()))
    if norm == 0.0:
        # all-whitespace / no-token input behaves like empty
        raise EmptyTextError("text produced no features")
    return {idx: v / norm for idx, v in accum.items()}


def featurize_matrix(texts, config: HasherConfig):
    """CSR matrix of featurized rows; the training-time bulk path."""
    indptr = [0]
    indices = []
    data = []
    for text in texts:
        vec = featurize(text, config)
        for idx in sorted(vec):
            indices.append(idx)
            data.append(vec[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(texts), config.dimensions))


@dataclass
class TrainingConfig:
    learning_rate: float = 0.5
    epochs: int = 20
    batch_size: int = 256
    l2: float = 1e-5
    seed: int = 42
    class_weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "l2": self.l2,
            "seed": self.seed,
            "class_weights": dict(self.class_weights),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class StudentModel:
    hasher: HasherConfig
    labels: list
    W: np.ndarray  # K x D
    b: np.ndarray  # K
    training_config: TrainingConfig
    seed: int
    final_loss: float = float("nan")


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def loss_and_grad(W, b, X, y, sample_weights, l2):
    """Weighted cross-entropy loss and analytic gradients over a full batch.

    L = -(1/N) sum_i w_i log p_{y_i}(x_i) + (l2/2) ||W||^2
    """
    n = X.shape[0]
    logits = X @ W.T + b
    probs = _softmax(logits)
    picked = probs[np.arange(n), y]
    loss = -np.mean(sample_weights * np.log(np.clip(picked, 1e-300, None)))
    loss += 0.5 * l2 * float((W * W).sum())
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta *= sample_weights[:, None] / n
    grad_W = np.asarray(delta.T @ X) + l2 * W
    grad_b = delta.sum(axis=0)
    return loss, grad_W, grad_b


def train_student(texts, labels_per_text, label_order, config: TrainingConfig,
                  hasher: HasherConfig = None):
    """Train the linear student by seeded mini-batch gradient descent."""
    hasher = hasher or HasherConfig()
    label_order = list(label_order)
    if len(set(labels_per_text)) < 2:
        raise DegenerateDataError("training data contains fewer than 2 distinct labels")
    label_index = {label: i for i, label in enumerate(label_order)}
    y = np.array([label_index[label] for label in labels_per_text], dtype=np.int64)
    X = featurize_matrix(texts, hasher)
    n, dims = X.shape
    k = len(label_order)
    weights = config.class_weights or {}
    sample_weights = np.array([weights.get(label, 1.0) for label in labels_per_text])

    W = np.zeros((k, dims))
    b = np.zeros(k)
    rng = np.random.default_rng(config.seed)
    batch = config.batch_size
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            Xb = X[idx]
            yb = y[idx]
            m = len(idx)
            logits = Xb @ W.T + b
            probs = _softmax(logits)
            delta = probs
            delta[np.arange(m), yb] -= 1.0
            delta *= sample_weights[idx, None] / m
            grad_W = np.asarray(delta.T @ Xb)
            W -= lr * (grad_W + config.l2 * W)
            b -= lr * delta.sum(axis=0)
            if not np.isfinite(W).all() or not np.isfinite(b).all():
                raise NonFiniteLossError(
                    f"parameters diverged (lr={lr}, batch={batch})")

    final_loss, _, _ = loss_and_grad(W, b, X, y, sample_weights, config.l2)
    if not np.isfinite(final_loss):
        raise NonFiniteLossError(f"final loss is not finite: {final_loss}")
    return StudentModel(hasher=hasher, labels=label_order, W=W, b=b,
                        training_config=config, seed=config.seed,
                        final_loss=float(final_loss))


def predict(model: StudentModel, text):
    """Probability scores over labels plus the argmax label (lowest index wins ties)."""
    vec = featurize(text, model.hasher)
    logits = model.b.copy()
    for idx, value in vec.items():
        logits += model.W[:, idx] * value
    scores = _softmax(logits)
    return scores, model.labels[int(np.argmax(scores))]


def predict_batch(model: StudentModel, texts):
    X = featurize_matrix(texts, model.hasher)
    scores = _softmax(X @ model.W.T + model.b)
    predicted = [model.labels[i] for i in np.argmax(scores, axis=1)]
    return scores, predicted


MODEL_FORMAT_VERSION = 1


def model_to_dict(model: StudentModel):
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "hasher": model.hasher.to_dict(),
        "labels": list(model.labels),
        "W": [float(v) for v in model.W.ravel(order="C")],
        "b": [float(v) for v in model.b],
        "training_config": model.training_config.to_dict(),
        "seed": model.seed,
        "final_loss": model.final_loss,
    }


def save_model(model: StudentModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> StudentModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    hasher = HasherConfig.from_dict(data["hasher"])
    labels = list(data["labels"])
    k = len(labels)
    W = np.array(data["W"]).reshape(k, hasher.dimensions)
    return StudentModel(
        hasher=hasher,
        labels=labels,
        W=W,
        b=np.array(data["b"]),
        training_config=TrainingConfig.from_dict(data["training_config"]),
        seed=int(data["seed"]),
        final_loss=float(data["final_loss"]),
    )


def _sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def export_for_external_trainer(manifest, segments_by_id, documents_by_id,
                                scenario, out_dir):
    """Write the file-exchange bundle that lets heavyweight trainers participate.

    Emits train.jsonl / test.jsonl ({"text", "label"} lines), labels.json,
    meta.json, and returns a manifest of files with content hashes.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)

    def write_pool(ids, name):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            for sid in ids:
                seg = segments_by_id[sid]
                text = documents_by_id[seg.doc_id].text[seg.start:seg.end]
                fh.write(json.dumps({"id": sid, "text": text, "label": seg.label},
                                    ensure_ascii=False))
                fh.write("\n")
        return path

    paths = [
        write_pool(manifest.train, "train.jsonl"),
        write_pool(manifest.test, "test.jsonl"),
    ]
    labels_path = os.path.join(out_dir, "labels.json")
    with open(labels_path, "w", encoding="utf-8") as fh:
        json.dump(list(scenario.labels), fh)
        fh.write("\n")
    paths.append(labels_path)
    meta_path = os.path.join(out_dir, "meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump({
            "scenario_id": scenario.id,
            "seed": manifest.seed,
            "counts": {"train": len(manifest.train), "test": len(manifest.test)},
        }, fh, sort_keys=True, indent=2)
        fh.write("\n")
    paths.append(meta_path)
    return {os.path.basename(p): _sha256_file(p) for p in paths}


def import_external_predictions(path, labels, expected_ids=None, tolerance=1e-6):
    """Read a predictions file of {"id", "scores"} lines into id -> score vector.

    Score vectors must be finite, nonnegative, and sum to 1 within tolerance
    (renormalized); anything else is rejected.
    """
    k = len(labels)
    expected = set(expected_ids) if expected_ids is not None else None
    predictions = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pid = str(obj["id"])
            if expected is not None and pid not in expected:
                raise UnknownIdError(f"line {lineno}: id {pid!r} not in expected set")
            scores = np.array(obj["scores"], dtype=float)
            if scores.shape != (k,):
                raise ShapeMismatchError(
                    f"line {lineno}: expected {k} scores, got {scores.shape}")
            if not np.isfinite(scores).all() or (scores < 0).any():
                raise NotAProbabilityError(f"line {lineno}: scores must be finite and nonnegative")
            total = scores.sum()
            if abs(total - 1.0) > tolerance:
                raise NotAProbabilityError(
                    f"line {lineno}: scores sum to {total}, beyond tolerance {tolerance}")
            predictions[pid] = scores / total
    return predictions

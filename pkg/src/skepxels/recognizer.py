"""Desk-scale feature extraction and classification harness.

The baseline extractor (average pooling + seeded Gaussian random
projection) stands in for a CNN's penultimate layer so the encoding
pipeline can be verified end to end without any network.  Classifiers
are cosine k-NN and one-vs-rest ridge regression.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codec import SkeletalImage
from .errors import ValidationError
from .skeleton import (
    DatasetManifest,
    ManifestEntry,
    SkeletonLayout,
    SkeletonSequence,
)


@dataclass(frozen=True)
class BaselineExtractorConfig:
    pool_size: tuple[int, int] = (12, 12)
    out_dim: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.pool_size[0] < 1 or self.pool_size[1] < 1:
            raise ValidationError(f"pool_size must be >= 1x1, got {self.pool_size}")
        if self.out_dim < 1:
            raise ValidationError(f"out_dim must be >= 1, got {self.out_dim}")


@lru_cache(maxsize=16)
def _projection_matrix(seed: int, in_dim: int, out_dim: int) -> np.ndarray:
    """Seeded Gaussian projection, scaled to preserve inner products in
    expectation."""
    rng = np.random.default_rng([seed, in_dim, out_dim])
    return rng.standard_normal((in_dim, out_dim)) / np.sqrt(out_dim)


def _pool(channel: np.ndarray, ph: int, pw: int) -> np.ndarray:
    """[ph, pw] average pooling of a 2-D array via near-equal blocks."""
    rows = np.array_split(channel, ph, axis=0)
    return np.array(
        [[block.mean() for block in np.array_split(r, pw, axis=1)] for r in rows]
    )


def baseline_extract(img: SkeletalImage, cfg: BaselineExtractorConfig) -> np.ndarray:
    """Deterministic per-image feature: pool, project, L2-normalize.

    An all-zero image yields the (degenerate) zero vector rather than
    dividing by zero.
    """
    ph, pw = cfg.pool_size
    pooled = np.stack(
        [_pool(img.data[..., c], ph, pw) for c in range(img.channels)], axis=-1
    ).ravel()
    proj = pooled @ _projection_matrix(cfg.seed, pooled.size, cfg.out_dim)
    norm = np.linalg.norm(proj)
    if norm == 0.0:
        return proj
    return proj / norm


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return X / norms


@dataclass(frozen=True, eq=False)
class KnnModel:
    descriptors: np.ndarray  # [N, D], L2-normalized rows
    labels: tuple[str, ...]
    k: int = 1

    def __post_init__(self):
        if self.descriptors.shape[0] == 0:
            raise ValidationError("k-NN model needs at least one sample")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))


def knn_train(descriptors: np.ndarray, labels: list[str], k: int = 1) -> KnnModel:
    X = _unit_rows(np.asarray(descriptors, dtype=np.float64))
    return KnnModel(descriptors=X, labels=tuple(labels), k=k)


def knn_predict(model: KnnModel, descriptor: np.ndarray) -> str:
    """Majority label among the k nearest by cosine distance.

    Vote ties break by smallest mean distance, then lexicographically.
    """
    q = np.asarray(descriptor, dtype=np.float64)
    norm = np.linalg.norm(q)
    if norm > 0.0:
        q = q / norm
    dist = 1.0 - model.descriptors @ q
    k = min(model.k, dist.size)
    nearest = np.argsort(dist, kind="stable")[:k]
    votes: dict[str, list[float]] = {}
    for idx in nearest:
        votes.setdefault(model.labels[idx], []).append(dist[idx])
    return min(
        votes.items(), key=lambda kv: (-len(kv[1]), np.mean(kv[1]), kv[0])
    )[0]


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray  # [D, K]
    classes: tuple[str, ...]
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValidationError(f"lambda must be > 0, got {self.lam}")


def ridge_train(descriptors: np.ndarray, labels: list[str], lam: float = 1.0) -> RidgeModel:
    """One-vs-rest regularized least squares on +/-1 targets."""
    if lam <= 0:
        raise ValidationError(f"lambda must be > 0, got {lam}")
    X = np.asarray(descriptors, dtype=np.float64)
    classes = tuple(sorted(set(labels)))
    if len(classes) < 1 or X.shape[0] != len(labels):
        raise ValidationError("descriptors and labels must align, with >= 1 class")
    Y = np.where(
        np.asarray(labels)[:, None] == np.asarray(classes)[None, :], 1.0, -1.0
    )
    D = X.shape[1]
    W = np.linalg.solve(X.T @ X + lam * np.eye(D), X.T @ Y)
    return RidgeModel(weights=W, classes=classes, lam=lam)


def ridge_predict(model: RidgeModel, descriptor: np.ndarray) -> str:
    scores = np.asarray(descriptor, dtype=np.float64) @ model.weights
    best = scores.max()
    # argmax with lexicographic tie-break over class names
    candidates = [c for c, s in zip(model.classes, scores) if s == best]
    return min(candidates)


def predict(model, descriptor: np.ndarray) -> str:
    if isinstance(model, KnnModel):
        return knn_predict(model, descriptor)
    if isinstance(model, RidgeModel):
        return ridge_predict(model, descriptor)
    raise ValidationError(f"unknown model type {type(model).__name__}")


@dataclass(frozen=True, eq=False)
class EvalReport:
    classes: tuple[str, ...]
    confusion: np.ndarray  # [K, K] counts, rows = true class
    accuracy: float
    per_class_recall: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "per_class_recall": self.per_class_recall,
        }

    def to_table(self) -> str:
        width = max(len(c) for c in self.classes) + 2
        lines = [
            " " * width + "".join(f"{c:>{width}}" for c in self.classes),
        ]
        for i, c in enumerate(self.classes):
            row = "".join(f"{int(v):>{width}}" for v in self.confusion[i])
            lines.append(f"{c:>{width}}" + row)
        lines.append(f"accuracy: {self.accuracy:.4f}")
        return "\n".join(lines)


def evaluate(model, descriptors: np.ndarray, labels: list[str]) -> EvalReport:
    """Confusion matrix, accuracy and per-class recall on a test set.

    Test labels outside the model's class set get their own confusion
    rows and count as errors.
    """
    if len(labels) == 0:
        raise ValidationError("empty test set")
    model_classes = model.classes if isinstance(model, (KnnModel, RidgeModel)) else ()
    classes = tuple(sorted(set(labels) | set(model_classes)))
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for descriptor, true in zip(descriptors, labels):
        predicted = predict(model, descriptor)
        confusion[index[true], index[predicted]] += 1
    accuracy = float(np.trace(confusion)) / len(labels)
    recall = {}
    for c in classes:
        total = confusion[index[c]].sum()
        if total > 0:
            recall[c] = float(confusion[index[c], index[c]]) / float(total)
    return EvalReport(
        classes=classes,
        confusion=confusion,
        accuracy=accuracy,
        per_class_recall=recall,
    )


def _encode_f32(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype=np.float32).tobytes()).decode()


def _decode_f32(text: str, shape: tuple[int, ...]) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype=np.float32).reshape(shape).astype(np.float64)


def save_model(model, path) -> None:
    if isinstance(model, KnnModel):
        doc = {
            "kind": "knn",
            "k": model.k,
            "shape": list(model.descriptors.shape),
            "descriptors": _encode_f32(model.descriptors),
            "labels": list(model.labels),
        }
    elif isinstance(model, RidgeModel):
        doc = {
            "kind": "ridge",
            "lambda": model.lam,
            "shape": list(model.weights.shape),
            "weights": _encode_f32(model.weights),
            "classes": list(model.classes),
        }
    else:
        raise ValidationError(f"unknown model type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") == "knn":
        return KnnModel(
            descriptors=_decode_f32(doc["descriptors"], tuple(doc["shape"])),
            labels=tuple(doc["labels"]),
            k=int(doc["k"]),
        )
    if doc.get("kind") == "ridge":
        return RidgeModel(
            weights=_decode_f32(doc["weights"], tuple(doc["shape"])),
            classes=tuple(doc["classes"]),
            lam=float(doc["lambda"]),
        )
    raise ValidationError(f"unknown model kind {doc.get('kind')!r}")


@dataclass(frozen=True)
class SynthConfig:
    classes: int = 5
    per_class: int = 12
    train_per_class: int = 8
    frames: int = 90
    joints: int = 25
    fps: float = 30.0
    seed: int = 0
    jitter_sigma: float = 0.005

    def __post_init__(self):
        if self.classes < 2 or self.per_class < 2:
            raise ValidationError("need >= 2 classes and >= 2 samples per class")
        if not 0 < self.train_per_class < self.per_class:
            raise ValidationError("train_per_class must split each class")


def _rest_pose(joints: int, layout: SkeletonLayout, rng: np.random.Generator) -> np.ndarray:
    """Fixed rest pose with well-separated shoulder anchors."""
    pose = rng.uniform(-0.5, 0.5, size=(joints, 3))
    pose[layout.hip_index] = 0.0
    pose[layout.left_shoulder_index] = (-0.2, 0.5, 0.0)
    pose[layout.right_shoulder_index] = (0.2, 0.5, 0.0)
    return pose


def synth_actions(cfg: SynthConfig) -> tuple[DatasetManifest, dict[str, SkeletonSequence]]:
    """Deterministic synthetic action dataset.

    Each class moves a class-specific joint subset sinusoidally with its
    own frequencies, amplitudes and phases over a shared rest pose;
    samples add seeded phase offsets and coordinate jitter.  Returns a
    manifest (with synthetic paths and train/test splits) plus the
    sequences keyed by path.
    """
    layout = SkeletonLayout(joint_count=cfg.joints) if cfg.joints >= 9 else SkeletonLayout(
        joint_count=cfg.joints, hip_index=0, left_shoulder_index=1, right_shoulder_index=2
    )
    base_rng = np.random.default_rng([cfg.seed, 0])
    rest = _rest_pose(cfg.joints, layout, base_rng)
    anchors = {layout.hip_index, layout.left_shoulder_index, layout.right_shoulder_index}
    movable = np.array([j for j in range(cfg.joints) if j not in anchors])

    t = np.arange(cfg.frames) / cfg.fps
    entries = []
    sequences = {}
    for c in range(cfg.classes):
        crng = np.random.default_rng([cfg.seed, 1, c])
        active = crng.choice(movable, size=max(3, len(movable) // 3), replace=False)
        freq = 0.5 + 0.4 * c + crng.uniform(0.0, 0.1)
        amp = crng.uniform(0.1, 0.3, size=(len(active), 3))
        phase = crng.uniform(0.0, 2 * np.pi, size=(len(active), 3))
        label = f"class{c}"
        for s in range(cfg.per_class):
            srng = np.random.default_rng([cfg.seed, 2, c, s])
            sample_phase = srng.uniform(0.0, 2 * np.pi)
            joints = np.tile(rest, (cfg.frames, 1, 1))
            wave = np.sin(
                2 * np.pi * freq * t[:, None, None] + phase[None] + sample_phase
            )
            joints[:, active, :] += amp[None] * wave
            joints += srng.normal(0.0, cfg.jitter_sigma, size=joints.shape)
            path = f"synth/{label}/sample{s:03d}.json"
            split = "train" if s < cfg.train_per_class else "test"
            entries.append(ManifestEntry(path=path, label=label, split=split))
            sequences[path] = SkeletonSequence(
                layout=layout,
                joints=joints,
                fps=cfg.fps,
                label=label,
                source_id=path,
            )
    return DatasetManifest(entries=tuple(entries), layout=layout), sequences

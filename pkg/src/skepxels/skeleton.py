"""Skeleton sequence data model, file parsing and dataset manifests.

Sequences hold their frames as a single float array shaped [F, J, 3]
(frames, joints, xyz).  All types are immutable after construction and
safe to share between workers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, ValidationError

NTU_JOINT_COUNT = 25

# Public NTU RGB+D 25-joint layout, 0-based: spine base doubles as the hip
# anchor, shoulders sit at 4 (left) and 8 (right).
NTU_HIP = 0
NTU_LEFT_SHOULDER = 4
NTU_RIGHT_SHOULDER = 8


@dataclass(frozen=True)
class SkeletonLayout:
    """Joint-count and anatomical-anchor metadata for one skeleton type."""

    joint_count: int
    hip_index: int = NTU_HIP
    left_shoulder_index: int = NTU_LEFT_SHOULDER
    right_shoulder_index: int = NTU_RIGHT_SHOULDER
    name: str = "ntu25"

    def __post_init__(self):
        if self.joint_count < 4:
            raise ValidationError(f"joint_count must be >= 4, got {self.joint_count}")
        anchors = (self.hip_index, self.left_shoulder_index, self.right_shoulder_index)
        if len(set(anchors)) != 3:
            raise ValidationError(f"anatomical indices must be distinct, got {anchors}")
        for idx in anchors:
            if not 0 <= idx < self.joint_count:
                raise ValidationError(
                    f"anatomical index {idx} out of range for {self.joint_count} joints"
                )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joints": self.joint_count,
            "hip": self.hip_index,
            "left_shoulder": self.left_shoulder_index,
            "right_shoulder": self.right_shoulder_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonLayout":
        return cls(
            joint_count=int(d["joints"]),
            hip_index=int(d.get("hip", NTU_HIP)),
            left_shoulder_index=int(d.get("left_shoulder", NTU_LEFT_SHOULDER)),
            right_shoulder_index=int(d.get("right_shoulder", NTU_RIGHT_SHOULDER)),
            name=str(d.get("name", "custom")),
        )


def ntu_layout() -> SkeletonLayout:
    return SkeletonLayout(joint_count=NTU_JOINT_COUNT)


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    """One body track: joints shaped [F, J, 3], plus layout and metadata."""

    layout: SkeletonLayout
    joints: np.ndarray
    fps: float = 30.0
    label: str | None = None
    source_id: str = ""

    def __post_init__(self):
        joints = np.array(self.joints, dtype=np.float64)
        if joints.ndim != 3 or joints.shape[2] != 3:
            raise ValidationError(f"joints must be [F, J, 3], got shape {joints.shape}")
        if joints.shape[0] < 1:
            raise ValidationError("sequence must contain at least one frame")
        if joints.shape[1] != self.layout.joint_count:
            raise ValidationError(
                f"frame has {joints.shape[1]} joints, layout expects "
                f"{self.layout.joint_count}"
            )
        if not np.isfinite(joints).all():
            raise ValidationError("non-finite joint coordinates")
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        joints.setflags(write=False)
        object.__setattr__(self, "joints", joints)

    @property
    def frame_count(self) -> int:
        return self.joints.shape[0]

    @property
    def joint_count(self) -> int:
        return self.joints.shape[1]

    def with_joints(self, joints: np.ndarray) -> "SkeletonSequence":
        return replace(self, joints=joints)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str

    def __post_init__(self):
        if self.split not in ("train", "test", "val"):
            raise ValidationError(f"split must be train/test/val, got {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    layout: SkeletonLayout

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValidationError("manifest paths must be unique")

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.to_dict(),
            "entries": [
                {"path": e.path, "label": e.label, "split": e.split}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            entries=tuple(
                ManifestEntry(path=e["path"], label=str(e["label"]), split=e["split"])
                for e in d["entries"]
            ),
            layout=SkeletonLayout.from_dict(d["layout"]),
        )


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return DatasetManifest.from_dict(json.load(fh))


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)


def parse_ntu_skeleton(
    text: str,
    layout: SkeletonLayout | None = None,
    fps: float = 30.0,
    source_id: str = "",
) -> list[SkeletonSequence]:
    """Parse an NTU RGB+D ``.skeleton`` text file into per-body sequences.

    Returns one sequence per distinct body ID, in order of first
    appearance.  Only x, y, z (fields 1-3 of each 12-field joint line)
    are consumed.
    """
    if layout is None:
        layout = ntu_layout()
    if layout.joint_count != NTU_JOINT_COUNT:
        raise ValidationError(
            f"NTU parser requires a 25-joint layout, got {layout.joint_count}"
        )

    lines = text.splitlines()
    pos = 0

    def next_line(what):
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file while reading {what}", line=pos + 1)
        pos += 1
        return lines[pos - 1].strip(), pos

    def read_int(what):
        raw, lineno = next_line(what)
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"expected integer {what}, got {raw!r}", line=lineno) from None

    frame_count = read_int("frame count")
    if frame_count <= 0:
        raise ParseError(f"file declares {frame_count} frames", line=1)

    # body id -> list of (frame index, [25, 3] array)
    tracks: dict[int, list[tuple[int, np.ndarray]]] = {}

    for f in range(frame_count):
        try:
            body_count = read_int("body count")
        except ParseError as exc:
            raise ParseError(
                f"file declares {frame_count} frames but ends after {f}", line=exc.line
            ) from None
        for _ in range(body_count):
            info, lineno = next_line("body info")
            fields = info.split()
            if len(fields) < 10:
                raise ParseError(
                    f"body info line has {len(fields)} fields, expected 10", line=lineno
                )
            body_id = int(float(fields[0]))
            joint_count = read_int("joint count")
            if joint_count != NTU_JOINT_COUNT:
                raise ParseError(
                    f"joint count {joint_count} != {NTU_JOINT_COUNT}", line=pos
                )
            coords = np.empty((NTU_JOINT_COUNT, 3), dtype=np.float64)
            for j in range(NTU_JOINT_COUNT):
                raw, lineno = next_line("joint line")
                parts = raw.split()
                if len(parts) < 3:
                    raise ParseError(
                        f"joint line has {len(parts)} numeric fields, expected >= 3",
                        line=lineno,
                    )
                try:
                    coords[j] = [float(parts[0]), float(parts[1]), float(parts[2])]
                except ValueError:
                    raise ParseError(f"non-numeric joint coordinates: {raw!r}", line=lineno) from None
            tracks.setdefault(body_id, []).append((f, coords))

    if not tracks:
        raise ParseError("file contains no body data")

    sequences = []
    for body_id, frames in tracks.items():
        joints = np.stack([c for _, c in frames])
        sequences.append(
            SkeletonSequence(
                layout=layout,
                joints=joints,
                fps=fps,
                source_id=f"{source_id}#b{body_id}" if source_id else f"b{body_id}",
            )
        )
    return sequences


def parse_generic_json(text: str, source_id: str = "") -> SkeletonSequence:
    """Parse the generic JSON interchange format into a sequence."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    for key in ("joints", "fps", "frames"):
        if key not in doc:
            raise ParseError(f"missing required key {key!r}")

    joint_count = int(doc["joints"])
    layout_block = doc.get("layout") or {}
    layout_block = {"joints": joint_count, **layout_block}
    if "hip" not in layout_block and joint_count <= max(NTU_LEFT_SHOULDER, NTU_RIGHT_SHOULDER):
        # small skeletons cannot use the NTU anchor defaults
        layout_block.setdefault("hip", 0)
        layout_block.setdefault("left_shoulder", 1)
        layout_block.setdefault("right_shoulder", 2)
    layout = SkeletonLayout.from_dict(layout_block)

    frames = doc["frames"]
    if not isinstance(frames, list) or not frames:
        raise ParseError("frames must be a non-empty list")
    for i, frame in enumerate(frames):
        if len(frame) != joint_count:
            raise ValidationError(
                f"frame {i} has {len(frame)} joints, expected {joint_count}"
            )
        for triple in frame:
            if len(triple) != 3:
                raise ValidationError(f"frame {i} contains a non-triple joint entry")

    joints = np.asarray(frames, dtype=np.float64)
    label = doc.get("label")
    return SkeletonSequence(
        layout=layout,
        joints=joints,
        fps=float(doc["fps"]),
        label=str(label) if label is not None else None,
        source_id=source_id,
    )


def serialize_generic_json(seq: SkeletonSequence) -> str:
    """Serialize a sequence to the generic JSON format (parse roundtrips)."""
    doc = {
        "joints": seq.joint_count,
        "fps": seq.fps,
        "layout": {
            "hip": seq.layout.hip_index,
            "left_shoulder": seq.layout.left_shoulder_index,
            "right_shoulder": seq.layout.right_shoulder_index,
            "name": seq.layout.name,
        },
        "frames": seq.joints.tolist(),
    }
    if seq.label is not None:
        doc["label"] = seq.label
    return json.dumps(doc)


def interleave_bodies(a: SkeletonSequence, b: SkeletonSequence) -> SkeletonSequence:
    """Merge two body tracks into one sequence with alternating frames.

    The shorter track is extended by repeating its final frame; the
    output runs at twice the input frame rate.
    """
    if a.layout != b.layout:
        raise ValidationError(
            f"layout mismatch: {a.layout.joint_count} vs {b.layout.joint_count} joints"
        )
    length = max(a.frame_count, b.frame_count)

    def extend(joints, n):
        if joints.shape[0] >= n:
            return joints
        pad = np.repeat(joints[-1:], n - joints.shape[0], axis=0)
        return np.concatenate([joints, pad], axis=0)

    ja = extend(a.joints, length)
    jb = extend(b.joints, length)
    out = np.empty((2 * length,) + ja.shape[1:], dtype=np.float64)
    out[0::2] = ja
    out[1::2] = jb
    return SkeletonSequence(
        layout=a.layout,
        joints=out,
        fps=2.0 * a.fps,
        label=a.label,
        source_id=a.source_id or b.source_id,
    )


def pair_longest_tracks(tracks: list[SkeletonSequence]) -> SkeletonSequence:
    """Reduce multi-body tracks to one sequence.

    Single track passes through; otherwise the two longest tracks are
    interleaved (tracking noise beyond two bodies is dropped).
    """
    if not tracks:
        raise ValidationError("no body tracks to pair")
    if len(tracks) == 1:
        return tracks[0]
    ranked = sorted(tracks, key=lambda s: s.frame_count, reverse=True)
    return interleave_bodies(ranked[0], ranked[1])

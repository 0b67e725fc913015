"""Assembly of skeletal images from arrangement sets, plus file export.

A single frame becomes an [m*h, w, 3] frame tensor (one h x w patch per
arrangement, stacked vertically).  A window of n frames becomes an
[m*h, n*w, 3] location image; velocity images apply the same layout to
consecutive-frame differences, and the two can be composed into a
6-channel tensor.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .arrangement import Arrangement, ArrangementSet
from .errors import ValidationError
from .normalize import scale_channels
from .skeleton import SkeletonSequence

RAW_MAGIC = b"SKPX"

KIND_LOCATION = "location"
KIND_VELOCITY = "velocity"
KIND_LOCVEL = "location+velocity"


@dataclass(frozen=True, eq=False)
class SkeletalImage:
    """[H, W, C] float tensor with its origin metadata."""

    data: np.ndarray
    window: tuple[float, int]  # (start frame, n)
    arrangement_set_id: str = ""
    kind: str = KIND_LOCATION
    source_id: str = ""
    label: str | None = None
    fps: float = 30.0
    scale_params: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] not in (3, 6):
            raise ValidationError(f"image must be [H, W, 3|6], got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class WindowPlan:
    """Sample positions of every window over one sequence.

    Each window is an array of n frame positions; fractional positions
    mark linear interpolation between neighbouring frames.
    """

    windows: tuple[np.ndarray, ...]
    n: int
    stride: int


def build_skepxel(frame: np.ndarray, arr: Arrangement) -> np.ndarray:
    """[h, w, 3] patch: cell (r, c) holds the coordinates of grid[r][c]."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (arr.joint_count, 3):
        raise ValidationError(
            f"frame shape {frame.shape} incompatible with {arr.joint_count} joints"
        )
    return frame[arr.grid]


def build_frame_tensor(frame: np.ndarray, aset: ArrangementSet) -> np.ndarray:
    """[m*h, w, 3] vertical stack of one Skepxel per arrangement."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (aset.h * aset.w, 3):
        raise ValidationError(
            f"frame shape {frame.shape} incompatible with {aset.h * aset.w} joints"
        )
    return frame[aset.grids()].reshape(aset.m * aset.h, aset.w, 3)


def plan_windows(seq_len: int, n: int, stride: int) -> WindowPlan:
    """Windows of n sample positions covering a seq_len-frame sequence.

    Sequences of >= n frames get integer windows every ``stride`` frames,
    with the final window right-aligned to the sequence end.  Shorter
    sequences get a single window of n positions spread uniformly over
    the available frames (fractional, i.e. interpolated).
    """
    if seq_len == 0:
        raise ValidationError("cannot plan windows over an empty sequence")
    if n < 2:
        raise ValidationError(f"window length must be >= 2, got {n}")
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")

    if seq_len < n:
        positions = np.linspace(0.0, seq_len - 1, n)
        return WindowPlan(windows=(positions,), n=n, stride=stride)

    starts = list(range(0, seq_len - n + 1, stride))
    if starts[-1] != seq_len - n:
        starts.append(seq_len - n)
    windows = tuple(np.arange(s, s + n, dtype=np.float64) for s in starts)
    return WindowPlan(windows=windows, n=n, stride=stride)


def sample_frames(seq: SkeletonSequence, positions: np.ndarray) -> np.ndarray:
    """[n, J, 3] frames at (possibly fractional) positions, linearly
    interpolated between integer neighbours."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.min() < 0 or positions.max() > seq.frame_count - 1:
        raise ValidationError(
            f"window positions [{positions.min()}, {positions.max()}] outside "
            f"sequence of {seq.frame_count} frames"
        )
    lo = np.floor(positions).astype(np.int64)
    hi = np.ceil(positions).astype(np.int64)
    t = (positions - lo)[:, None, None]
    return (1.0 - t) * seq.joints[lo] + t * seq.joints[hi]


def _assemble(frames: np.ndarray, aset: ArrangementSet) -> np.ndarray:
    """[m*h, n*w, 3] image from [n, J, 3] frames: frame tensors side by side."""
    n = frames.shape[0]
    blocks = frames[:, aset.grids(), :]  # [n, m, h, w, 3]
    return blocks.transpose(1, 2, 0, 3, 4).reshape(
        aset.m * aset.h, n * aset.w, 3
    )


def build_location_image(
    seq: SkeletonSequence, aset: ArrangementSet, positions: np.ndarray
) -> SkeletalImage:
    """Location image for one window: n frame tensors concatenated
    column-wise."""
    frames = sample_frames(seq, positions)
    return SkeletalImage(
        data=_assemble(frames, aset),
        window=(float(positions[0]), len(positions)),
        arrangement_set_id=aset.set_id(),
        kind=KIND_LOCATION,
        source_id=seq.source_id,
        label=seq.label,
        fps=seq.fps,
    )


def build_velocity_image(
    seq: SkeletonSequence, aset: ArrangementSet, positions: np.ndarray
) -> SkeletalImage:
    """Velocity image: same layout over consecutive-frame differences.

    The last difference is repeated so the image keeps n column blocks.
    Units are coordinate units per frame interval.
    """
    if len(positions) < 2:
        raise ValidationError("velocity image needs a window of >= 2 frames")
    frames = sample_frames(seq, positions)
    vel = np.empty_like(frames)
    vel[:-1] = frames[1:] - frames[:-1]
    vel[-1] = vel[-2]
    return SkeletalImage(
        data=_assemble(vel, aset),
        window=(float(positions[0]), len(positions)),
        arrangement_set_id=aset.set_id(),
        kind=KIND_VELOCITY,
        source_id=seq.source_id,
        label=seq.label,
        fps=seq.fps,
    )


def compose_locvel(loc: SkeletalImage, vel: SkeletalImage) -> SkeletalImage:
    """Stack location channels 0-2 with velocity channels 3-5."""
    if loc.data.shape != vel.data.shape:
        raise ValidationError(
            f"shape mismatch: {loc.data.shape} vs {vel.data.shape}"
        )
    if loc.window != vel.window or loc.arrangement_set_id != vel.arrangement_set_id:
        raise ValidationError("location and velocity images must share window and set")
    return replace(
        loc,
        data=np.concatenate([loc.data, vel.data], axis=2),
        kind=KIND_LOCVEL,
    )


def pad_joints(
    seq: SkeletonSequence, target_joints: int, recipe: list[tuple[int, int]]
) -> SkeletonSequence:
    """Append midpoint joints so a skeleton reaches ``target_joints``.

    ``recipe`` names one joint-index pair per appended joint; each new
    joint is the per-frame midpoint of its pair.  The layout keeps its
    anatomical anchors.
    """
    J = seq.joint_count
    if target_joints < J:
        raise ValidationError(f"target {target_joints} < current {J} joints")
    if len(recipe) != target_joints - J:
        raise ValidationError(
            f"recipe has {len(recipe)} pairs, need {target_joints - J}"
        )
    extra = [0.5 * (seq.joints[:, a] + seq.joints[:, b]) for a, b in recipe]
    joints = np.concatenate([seq.joints] + [e[:, None, :] for e in extra], axis=1)
    layout = replace(seq.layout, joint_count=target_joints, name=seq.layout.name + "+pad")
    return replace(seq, joints=joints, layout=layout)


def image_metadata(img: SkeletalImage, stride: int | None = None) -> dict:
    meta = {
        "source": img.source_id,
        "label": img.label,
        "window": [img.window[0], img.window[1]],
        "arrangement_set": img.arrangement_set_id,
        "kind": img.kind,
        "fps": img.fps,
    }
    if stride is not None:
        meta["stride"] = stride
    if img.scale_params is not None:
        meta["scale"] = np.asarray(img.scale_params).tolist()
    return meta


def write_raw(img: SkeletalImage) -> bytes:
    """Lossless container: 16-byte header + f32 row-major tensor."""
    H, W, C = img.data.shape
    header = RAW_MAGIC + struct.pack("<III", H, W, C)
    return header + np.ascontiguousarray(img.data, dtype=np.float32).tobytes()


def read_raw(blob: bytes) -> np.ndarray:
    """Tensor from a raw container; metadata lives in the JSON sidecar."""
    if len(blob) < 16 or blob[:4] != RAW_MAGIC:
        raise ValidationError("not a raw skeletal-image container")
    H, W, C = struct.unpack("<III", blob[4:16])
    expected = 16 + H * W * C * 4
    if len(blob) != expected:
        raise ValidationError(f"container is {len(blob)} bytes, expected {expected}")
    return np.frombuffer(blob[16:], dtype=np.float32).reshape(H, W, C).astype(np.float64)


def export_image(img: SkeletalImage, path, mode: str = "raw", stride: int | None = None) -> list[Path]:
    """Write an image plus its metadata sidecar; returns written paths.

    ``raw`` writes the exact tensor; ``png8`` min-max quantizes each
    channel and writes one RGB PNG per 3-channel group (two for C=6),
    recording the scale parameters in the sidecar.
    """
    path = Path(path)
    written = []
    if mode == "raw":
        out = path.with_suffix(".skpx")
        out.write_bytes(write_raw(img))
        written.append(out)
        meta = image_metadata(img, stride=stride)
    elif mode == "png8":
        scaled, params = scale_channels(img.data)
        for g in range(img.channels // 3):
            out = path.with_suffix(f".{g}.png") if img.channels > 3 else path.with_suffix(".png")
            Image.fromarray(scaled[..., 3 * g : 3 * g + 3], mode="RGB").save(out)
            written.append(out)
        meta = image_metadata(replace(img, scale_params=params), stride=stride)
    else:
        raise ValidationError(f"unknown export mode {mode!r}")
    sidecar = path.with_suffix(".json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(meta, fh)
    written.append(sidecar)
    return written


def import_raw(path) -> SkeletalImage:
    """Load a raw container and its sidecar back into a SkeletalImage."""
    path = Path(path)
    data = read_raw(path.read_bytes())
    sidecar = path.with_suffix(".json")
    meta = json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else {}
    return SkeletalImage(
        data=data,
        window=tuple(meta.get("window", (0.0, data.shape[1]))),
        arrangement_set_id=meta.get("arrangement_set", ""),
        kind=meta.get("kind", KIND_LOCATION),
        source_id=meta.get("source", ""),
        label=meta.get("label"),
        fps=meta.get("fps", 30.0),
    )

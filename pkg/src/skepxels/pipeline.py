"""End-to-end orchestration: sequences to images to video descriptors.

Encoding order is normalize -> (augment, train only) -> window ->
build -> export.  Dataset-level helpers parallelize over videos with a
process pool; results are collected in submission order, so outputs are
byte-identical regardless of worker count.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .arrangement import ArrangementSet
from .codec import (
    KIND_LOCATION,
    KIND_LOCVEL,
    KIND_VELOCITY,
    SkeletalImage,
    build_location_image,
    build_velocity_image,
    compose_locvel,
    plan_windows,
)
from .errors import ValidationError
from .ftp import FeatureSeries, FtpDescriptor, PyramidConfig, ftp_encode
from .normalize import normalize_pose
from .recognizer import BaselineExtractorConfig, baseline_extract
from .skeleton import SkeletonSequence


@dataclass(frozen=True)
class EncodeOptions:
    n: int = 36
    stride: int | None = None  # default n // 2
    kind: str = KIND_LOCVEL
    normalize: bool = True

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.n // 2)


def encode_windows(
    seq: SkeletonSequence, aset: ArrangementSet, opts: EncodeOptions
) -> list[SkeletalImage]:
    """All skeletal images (one per planned window) of one sequence."""
    if seq.joint_count != aset.h * aset.w:
        raise ValidationError(
            f"sequence has {seq.joint_count} joints, arrangement set covers "
            f"{aset.h * aset.w}"
        )
    if opts.normalize:
        seq = normalize_pose(seq)
    plan = plan_windows(seq.frame_count, opts.n, opts.effective_stride)
    images = []
    for positions in plan.windows:
        if opts.kind == KIND_LOCATION:
            images.append(build_location_image(seq, aset, positions))
        elif opts.kind == KIND_VELOCITY:
            images.append(build_velocity_image(seq, aset, positions))
        elif opts.kind == KIND_LOCVEL:
            loc = build_location_image(seq, aset, positions)
            vel = build_velocity_image(seq, aset, positions)
            images.append(compose_locvel(loc, vel))
        else:
            raise ValidationError(f"unknown image kind {opts.kind!r}")
    return images


def video_feature_series(
    seq: SkeletonSequence,
    aset: ArrangementSet,
    opts: EncodeOptions,
    extractor: BaselineExtractorConfig,
) -> FeatureSeries:
    """Per-image baseline features of one video, in window order."""
    images = encode_windows(seq, aset, opts)
    vectors = np.stack([baseline_extract(img, extractor) for img in images])
    return FeatureSeries(vectors=vectors, video_id=seq.source_id, label=seq.label)


def video_descriptor(
    seq: SkeletonSequence,
    aset: ArrangementSet,
    opts: EncodeOptions,
    extractor: BaselineExtractorConfig,
    pyramid: PyramidConfig,
) -> FtpDescriptor:
    return ftp_encode(video_feature_series(seq, aset, opts, extractor), pyramid)


def _descriptor_task(args) -> np.ndarray:
    seq, aset, opts, extractor, pyramid = args
    return video_descriptor(seq, aset, opts, extractor, pyramid).values


def dataset_descriptors(
    sequences: list[SkeletonSequence],
    aset: ArrangementSet,
    opts: EncodeOptions,
    extractor: BaselineExtractorConfig,
    pyramid: PyramidConfig,
    workers: int = 1,
) -> np.ndarray:
    """[N, D_ftp] descriptor per video, independent of ``workers``."""
    tasks = [(seq, aset, opts, extractor, pyramid) for seq in sequences]
    if workers <= 1:
        rows = [_descriptor_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_descriptor_task, tasks))
    return np.stack(rows)


def _encode_task(args) -> int:
    seq, aset, opts = args
    return len(encode_windows(seq, aset, opts))


def encode_dataset_count(
    sequences: list[SkeletonSequence],
    aset: ArrangementSet,
    opts: EncodeOptions,
    workers: int = 1,
) -> int:
    """Encode every sequence, returning the total image count.

    Benchmark helper: exercises the full encode path without keeping the
    images.
    """
    tasks = [(seq, aset, opts) for seq in sequences]
    if workers <= 1:
        counts = [_encode_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_encode_task, tasks))
    return sum(counts)

"""Pose normalization, Gaussian augmentation and pixel-range scaling.

Normalization anchors the hip joint at the origin and rotates each frame
so the left-to-right shoulder vector lies along +x.  All functions are
pure; augmentation randomness is owned by the caller-supplied seed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .skeleton import SkeletonSequence

log = logging.getLogger(__name__)

DEGENERATE_SHOULDER_NORM = 1e-8


@dataclass(frozen=True)
class AugmentationConfig:
    sigma: float = 0.02
    copies: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if self.copies < 0:
            raise ValidationError(f"copies must be >= 0, got {self.copies}")


def _rotation_to_x(v: np.ndarray) -> np.ndarray:
    """Minimal rotation matrix mapping direction ``v`` onto +x (Rodrigues).

    For v anti-parallel to x the rotation axis is ambiguous; z is used.
    """
    u = v / np.linalg.norm(v)
    c = u[0]  # cos(angle) = u . x_hat
    if c <= -1.0 + 1e-12:
        # 180 degrees about z
        return np.diag([-1.0, -1.0, 1.0])
    axis = np.array([0.0, u[2], -u[1]])  # u x x_hat, norm = sin(angle)
    K = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + K + (K @ K) / (1.0 + c)


def normalize_pose(seq: SkeletonSequence) -> SkeletonSequence:
    """Hip-anchor and shoulder-align every frame independently.

    Frames with a degenerate shoulder vector reuse the previous frame's
    rotation; a degenerate first frame keeps the identity rotation and
    logs a warning.
    """
    lay = seq.layout
    out = seq.joints - seq.joints[:, lay.hip_index : lay.hip_index + 1, :]
    rot = np.eye(3)
    for f in range(out.shape[0]):
        v = out[f, lay.right_shoulder_index] - out[f, lay.left_shoulder_index]
        norm = np.linalg.norm(v)
        if norm > DEGENERATE_SHOULDER_NORM:
            rot = _rotation_to_x(v)
        elif f == 0:
            log.warning(
                "%s: degenerate shoulder vector in first frame, using identity",
                seq.source_id,
            )
        out[f] = out[f] @ rot.T
    return seq.with_joints(out)


def augment_gaussian(
    seq: SkeletonSequence, cfg: AugmentationConfig
) -> list[SkeletonSequence]:
    """Return ``cfg.copies`` jittered copies of ``seq``.

    Every coordinate is perturbed by i.i.d. N(0, sigma^2); labels and
    layout are preserved, and a fixed seed reproduces outputs bitwise.
    """
    rng = np.random.default_rng(cfg.seed)
    copies = []
    for i in range(cfg.copies):
        noise = rng.normal(0.0, cfg.sigma, size=seq.joints.shape)
        copies.append(seq.with_joints(seq.joints + noise))
    return copies


def scale_channels(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min-max scale each channel of an [H, W, C] tensor into [0, 255].

    Returns the uint8 tensor and the per-channel (min, max) affine
    parameters, shaped [C, 2].  A constant channel maps to all zeros
    (its parameters then satisfy min == max, flagging it degenerate).
    """
    image = np.asarray(image, dtype=np.float64)
    if not np.isfinite(image).all():
        raise ValidationError("non-finite values in image tensor")
    C = image.shape[-1]
    params = np.empty((C, 2), dtype=np.float64)
    out = np.zeros(image.shape, dtype=np.uint8)
    for c in range(C):
        lo = image[..., c].min()
        hi = image[..., c].max()
        params[c] = (lo, hi)
        if hi > lo:
            out[..., c] = np.rint(255.0 * (image[..., c] - lo) / (hi - lo)).astype(np.uint8)
    return out, params


def unscale_channels(image: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Invert :func:`scale_channels` up to quantization error."""
    image = np.asarray(image, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    out = np.empty(image.shape, dtype=np.float64)
    for c in range(image.shape[-1]):
        lo, hi = params[c]
        out[..., c] = lo + image[..., c] * (hi - lo) / 255.0
    return out

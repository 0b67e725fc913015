"""Fourier temporal pyramid over per-image feature series.

One video yields Q feature vectors (one per skeletal image).  The
pyramid recursively halves the temporal axis and keeps the magnitudes of
the z lowest-frequency DFT coefficients of every segment, concatenated
over (level, segment, feature dimension, frequency).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

FSER_MAGIC = b"FSER"


@dataclass(frozen=True, eq=False)
class FeatureSeries:
    """[Q, D] matrix of per-image features for one video."""

    vectors: np.ndarray
    video_id: str = ""
    label: str | None = None

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise ValidationError(f"vectors must be [Q>=1, D>=1], got {vectors.shape}")
        if not np.isfinite(vectors).all():
            raise ValidationError("non-finite feature values")
        object.__setattr__(self, "vectors", vectors)

    @property
    def q(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class PyramidConfig:
    levels: int = 3
    z: int = 4
    min_series_len: int = 8

    def __post_init__(self):
        if self.levels < 1:
            raise ValidationError(f"levels must be >= 1, got {self.levels}")
        if self.z < 1:
            raise ValidationError(f"z must be >= 1, got {self.z}")
        if self.min_series_len < 2 ** (self.levels - 1):
            raise ValidationError(
                f"min_series_len {self.min_series_len} leaves empty segments "
                f"at {self.levels} levels"
            )

    def descriptor_length(self, dim: int) -> int:
        return dim * (2**self.levels - 1) * self.z


@dataclass(frozen=True, eq=False)
class FtpDescriptor:
    """Flat macro-temporal descriptor of length D * (2^levels - 1) * z."""

    values: np.ndarray
    config: PyramidConfig
    video_id: str = ""
    label: str | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or not np.isfinite(values).all():
            raise ValidationError("descriptor must be a finite 1-D vector")
        object.__setattr__(self, "values", values)


def dft_low_freq(series: np.ndarray, z: int) -> np.ndarray:
    """Magnitudes of the z lowest-frequency DFT coefficients (k = 0..z-1).

    Series shorter than z are zero-padded in frequency.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or series.size < 1:
        raise ValidationError("series must be a non-empty 1-D vector")
    if z < 1:
        raise ValidationError(f"z must be >= 1, got {z}")
    mags = np.abs(np.fft.fft(series))
    out = np.zeros(z)
    keep = min(z, series.size)
    out[:keep] = mags[:keep]
    return out


def _resample_rows(vectors: np.ndarray, length: int) -> np.ndarray:
    """Linearly interpolate a [Q, D] series to [length, D] rows."""
    q = vectors.shape[0]
    if q >= length:
        return vectors
    positions = np.linspace(0.0, q - 1, length)
    lo = np.floor(positions).astype(np.int64)
    hi = np.ceil(positions).astype(np.int64)
    t = (positions - lo)[:, None]
    return (1.0 - t) * vectors[lo] + t * vectors[hi]


def ftp_encode(series: FeatureSeries, cfg: PyramidConfig) -> FtpDescriptor:
    """Pyramid descriptor of one video's feature series.

    Level k splits the temporal axis into 2^(k-1) contiguous near-equal
    segments; each segment contributes z low-frequency magnitudes per
    feature dimension, concatenated dimension-major within the segment.
    """
    vectors = _resample_rows(series.vectors, cfg.min_series_len)
    parts = []
    for level in range(1, cfg.levels + 1):
        for segment in np.array_split(vectors, 2 ** (level - 1), axis=0):
            mags = np.abs(np.fft.fft(segment, axis=0))  # [L_seg, D]
            keep = min(cfg.z, segment.shape[0])
            block = np.zeros((cfg.z, segment.shape[1]))
            block[:keep] = mags[:keep]
            parts.append(block.T.ravel())  # dimension-major, frequency-minor
    values = np.concatenate(parts)
    assert values.size == cfg.descriptor_length(series.dim)
    return FtpDescriptor(
        values=values, config=cfg, video_id=series.video_id, label=series.label
    )


def write_feature_series(series: FeatureSeries, path) -> list[Path]:
    """FSER container (header + f32 rows) plus a JSON sidecar."""
    path = Path(path)
    header = FSER_MAGIC + struct.pack("<III", series.q, series.dim, 0)
    body = np.ascontiguousarray(series.vectors, dtype=np.float32).tobytes()
    out = path.with_suffix(".fser")
    out.write_bytes(header + body)
    sidecar = path.with_suffix(".json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump({"video": series.video_id, "label": series.label}, fh)
    return [out, sidecar]


def load_external_features(path) -> FeatureSeries:
    """Read a feature-series container written by any external extractor."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != FSER_MAGIC:
        raise ValidationError(f"{path}: not a feature-series container")
    q, dim, _ = struct.unpack("<III", blob[4:16])
    expected = 16 + q * dim * 4
    if len(blob) != expected:
        raise ValidationError(
            f"{path}: container is {len(blob)} bytes, header implies {expected}"
        )
    vectors = np.frombuffer(blob[16:], dtype=np.float32).reshape(q, dim).astype(np.float64)
    sidecar = path.with_suffix(".json")
    meta = json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else {}
    return FeatureSeries(
        vectors=vectors,
        video_id=meta.get("video", path.stem),
        label=meta.get("label"),
    )

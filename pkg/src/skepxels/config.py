"""Pipeline configuration: TOML or JSON file with CLI flag overrides."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .ftp import PyramidConfig
from .normalize import AugmentationConfig
from .recognizer import BaselineExtractorConfig
from .skeleton import SkeletonLayout


@dataclass(frozen=True)
class ArrangementConfig:
    h: int = 5
    w: int = 5
    m: int = 36
    gamma_t: float | str = "auto"
    seed: int = 0
    max_attempts: int = 10000


@dataclass(frozen=True)
class CodecConfig:
    n: int = 36
    stride: int | None = None
    kind: str = "location+velocity"
    export: str = "raw"
    image_height: int | None = None
    image_width: int | None = None


@dataclass(frozen=True)
class RecognizerConfig:
    classifier: str = "knn"
    k: int = 1
    lam: float = 1.0
    extractor: BaselineExtractorConfig = field(default_factory=BaselineExtractorConfig)


@dataclass(frozen=True)
class PipelineConfig:
    layout: SkeletonLayout = field(default_factory=lambda: SkeletonLayout(25))
    arrangement: ArrangementConfig = field(default_factory=ArrangementConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    augment: AugmentationConfig = field(default_factory=AugmentationConfig)
    pyramid: PyramidConfig = field(default_factory=PyramidConfig)
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)

    def validate(self) -> "PipelineConfig":
        arr = self.arrangement
        if arr.h * arr.w != self.layout.joint_count:
            raise ValidationError(
                f"h*w = {arr.h * arr.w} must equal joint count "
                f"{self.layout.joint_count}"
            )
        if self.codec.image_height is not None and arr.m * arr.h != self.codec.image_height:
            raise ValidationError(
                f"m*h = {arr.m * arr.h} != configured image height "
                f"{self.codec.image_height}"
            )
        if self.codec.image_width is not None and self.codec.n * arr.w != self.codec.image_width:
            raise ValidationError(
                f"n*w = {self.codec.n * arr.w} != configured image width "
                f"{self.codec.image_width}"
            )
        if self.codec.kind not in ("location", "velocity", "location+velocity"):
            raise ValidationError(f"unknown image kind {self.codec.kind!r}")
        if self.codec.export not in ("raw", "png8"):
            raise ValidationError(f"unknown export mode {self.codec.export!r}")
        if self.recognizer.classifier not in ("knn", "ridge"):
            raise ValidationError(f"unknown classifier {self.recognizer.classifier!r}")
        return self


def _from_dict(doc: dict) -> PipelineConfig:
    cfg = PipelineConfig()
    if "layout" in doc:
        cfg = replace(cfg, layout=SkeletonLayout.from_dict(doc["layout"]))
    if "arrangement" in doc:
        a = doc["arrangement"]
        cfg = replace(
            cfg,
            arrangement=ArrangementConfig(
                h=int(a.get("h", 5)),
                w=int(a.get("w", 5)),
                m=int(a.get("m", 36)),
                gamma_t=a.get("gamma_t", "auto"),
                seed=int(a.get("seed", 0)),
                max_attempts=int(a.get("max_attempts", 10000)),
            ),
        )
    if "codec" in doc:
        c = doc["codec"]
        cfg = replace(
            cfg,
            codec=CodecConfig(
                n=int(c.get("n", 36)),
                stride=int(c["stride"]) if "stride" in c else None,
                kind=c.get("kind", "location+velocity"),
                export=c.get("export", "raw"),
                image_height=int(c["image_height"]) if "image_height" in c else None,
                image_width=int(c["image_width"]) if "image_width" in c else None,
            ),
        )
    if "augment" in doc:
        g = doc["augment"]
        cfg = replace(
            cfg,
            augment=AugmentationConfig(
                sigma=float(g.get("sigma", 0.02)),
                copies=int(g.get("copies", 1)),
                seed=int(g.get("seed", 0)),
            ),
        )
    if "ftp" in doc:
        f = doc["ftp"]
        cfg = replace(
            cfg,
            pyramid=PyramidConfig(
                levels=int(f.get("levels", 3)),
                z=int(f.get("z", 4)),
                min_series_len=int(f.get("min_series_len", 8)),
            ),
        )
    if "recognizer" in doc:
        r = doc["recognizer"]
        pool = r.get("pool", (12, 12))
        cfg = replace(
            cfg,
            recognizer=RecognizerConfig(
                classifier=r.get("classifier", "knn"),
                k=int(r.get("k", 1)),
                lam=float(r.get("lambda", 1.0)),
                extractor=BaselineExtractorConfig(
                    pool_size=(int(pool[0]), int(pool[1])),
                    out_dim=int(r.get("feature_dim", 256)),
                    seed=int(r.get("seed", 0)),
                ),
            ),
        )
    return cfg.validate()


def load_config(path) -> PipelineConfig:
    """Read a TOML or JSON config (decided by extension)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
    else:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    return _from_dict(doc)

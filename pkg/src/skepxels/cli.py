"""Command-line surface tying the encoding pipeline together.

Stages write their artifacts into directories keyed by split
(``train``/``test``/``val``) so downstream stages can consume them
without re-reading the manifest:

    encode   images/<split>/<video>__w<start>.skpx (+ .json sidecar)
    features features/<split>/<video>.fser
    ftp      ftp/<split>/<video>.fser  (Q = 1 row = the descriptor)
"""
from __future__ import annotations

import json
import logging
import struct
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import arrangement as arr_mod
from . import codec, ftp as ftp_mod, pipeline, recognizer
from .config import PipelineConfig, load_config
from .errors import SamplingError, SkepxelsError
from .normalize import augment_gaussian, normalize_pose
from .skeleton import (
    SkeletonSequence,
    load_manifest,
    pair_longest_tracks,
    parse_generic_json,
    parse_ntu_skeleton,
    save_manifest,
    serialize_generic_json,
)

log = logging.getLogger("skepxels")


def _config_from(path: str | None) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig().validate()


def _video_id(entry_path: str) -> str:
    stem = str(Path(entry_path).with_suffix(""))
    return stem.replace("/", "_").replace("\\", "_").replace("#", "_")


def _load_entry_sequence(root: Path, entry, layout) -> SkeletonSequence:
    path = root / entry.path
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".skeleton":
        tracks = parse_ntu_skeleton(text, layout, source_id=entry.path)
        seq = pair_longest_tracks(tracks)
    else:
        seq = parse_generic_json(text, source_id=entry.path)
    return replace(seq, label=entry.label, source_id=_video_id(entry.path))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose):
    """Skeletal image encoding and action-descriptor pipeline."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--h", "grid_h", type=int, default=None)
@click.option("--w", "grid_w", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--gamma-t", default=None, help='Threshold value or "auto".')
@click.option("--seed", type=int, default=None)
@click.option("--max-attempts", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
def arrange(config_path, grid_h, grid_w, m, gamma_t, seed, max_attempts, out):
    """Generate and persist an arrangement set."""
    cfg = _config_from(config_path).arrangement
    h = grid_h if grid_h is not None else cfg.h
    w = grid_w if grid_w is not None else cfg.w
    m = m if m is not None else cfg.m
    seed = seed if seed is not None else cfg.seed
    max_attempts = max_attempts if max_attempts is not None else cfg.max_attempts
    if gamma_t is None:
        gamma_t = cfg.gamma_t
    elif gamma_t != "auto":
        gamma_t = float(gamma_t)
    try:
        aset = arr_mod.generate_set(h, w, m, gamma_t, seed, max_attempts)
    except SamplingError as exc:
        raise click.ClickException(str(exc)) from None
    Path(out).write_text(aset.to_json(), encoding="utf-8")
    log.info("accepted set with gamma=%s after %d attempts", aset.gamma, aset.attempts)


@main.command()
@click.option("--classes", type=int, default=5)
@click.option("--per-class", type=int, default=12)
@click.option("--train-per-class", type=int, default=8)
@click.option("--frames", type=int, default=90)
@click.option("--joints", type=int, default=25)
@click.option("--fps", type=float, default=30.0)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
def synth(classes, per_class, train_per_class, frames, joints, fps, seed, out):
    """Write a deterministic synthetic action dataset."""
    cfg = recognizer.SynthConfig(
        classes=classes,
        per_class=per_class,
        train_per_class=train_per_class,
        frames=frames,
        joints=joints,
        fps=fps,
        seed=seed,
    )
    manifest, sequences = recognizer.synth_actions(cfg)
    root = Path(out)
    for path, seq in sequences.items():
        target = root / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(serialize_generic_json(seq), encoding="utf-8")
    save_manifest(manifest, root / "manifest.json")
    log.info("wrote %d sequences to %s", len(sequences), root)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--set", "set_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def encode(config_path, manifest_path, set_path, out):
    """Encode every manifest entry into skeletal image files."""
    cfg = _config_from(config_path)
    manifest = load_manifest(Path(manifest_path))
    aset = arr_mod.ArrangementSet.from_json(Path(set_path).read_text(encoding="utf-8"))
    root = Path(manifest_path).parent
    out_root = Path(out)
    opts = pipeline.EncodeOptions(
        n=cfg.codec.n, stride=cfg.codec.stride, kind=cfg.codec.kind
    )
    summary = {"videos": {}, "failures": []}
    for entry in manifest.entries:
        try:
            seq = _load_entry_sequence(root, entry, manifest.layout)
            seq = normalize_pose(seq)
            variants = [seq]
            if entry.split == "train" and cfg.augment.copies > 0:
                variants += augment_gaussian(seq, cfg.augment)
            total = 0
            for i, variant in enumerate(variants):
                vid = seq.source_id if i == 0 else f"{seq.source_id}~a{i - 1}"
                variant = replace(variant, source_id=vid)
                images = pipeline.encode_windows(
                    variant, aset, replace(opts, normalize=False)
                )
                target_dir = out_root / entry.split
                target_dir.mkdir(parents=True, exist_ok=True)
                for img in images:
                    name = f"{vid}__w{img.window[0]:g}"
                    codec.export_image(
                        img,
                        target_dir / name,
                        mode=cfg.codec.export,
                        stride=opts.effective_stride,
                    )
                total += len(images)
            summary["videos"][seq.source_id] = total
        except (SkepxelsError, OSError) as exc:
            log.error("%s: %s", entry.path, exc)
            summary["failures"].append({"path": entry.path, "error": str(exc)})
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    if summary["failures"]:
        raise click.ClickException(f"{len(summary['failures'])} entries failed")
    log.info("encoded %d videos", len(summary["videos"]))


def _image_groups(split_dir: Path) -> dict[str, list[Path]]:
    """Raw image files per video, ordered by window start."""
    groups: dict[str, list[tuple[float, Path]]] = {}
    for path in sorted(split_dir.glob("*.skpx")):
        vid, _, start = path.stem.rpartition("__w")
        groups.setdefault(vid, []).append((float(start), path))
    return {vid: [p for _, p in sorted(items)] for vid, items in groups.items()}


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def features(config_path, images_dir, out):
    """Extract one baseline feature series per encoded video."""
    cfg = _config_from(config_path)
    extractor = cfg.recognizer.extractor
    images_root = Path(images_dir)
    out_root = Path(out)
    count = 0
    for split_dir in sorted(p for p in images_root.iterdir() if p.is_dir()):
        target_dir = out_root / split_dir.name
        target_dir.mkdir(parents=True, exist_ok=True)
        for vid, paths in _image_groups(split_dir).items():
            imgs = [codec.import_raw(p) for p in paths]
            vectors = np.stack([recognizer.baseline_extract(im, extractor) for im in imgs])
            series = ftp_mod.FeatureSeries(
                vectors=vectors, video_id=vid, label=imgs[0].label
            )
            ftp_mod.write_feature_series(series, target_dir / vid)
            count += 1
    log.info("wrote %d feature series", count)


@main.command("ftp")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def ftp_cmd(config_path, features_dir, out):
    """Fourier-temporal-pyramid descriptor per video."""
    cfg = _config_from(config_path)
    features_root = Path(features_dir)
    out_root = Path(out)
    count = 0
    for path in sorted(features_root.rglob("*.fser")):
        series = ftp_mod.load_external_features(path)
        descriptor = ftp_mod.ftp_encode(series, cfg.pyramid)
        rel = path.relative_to(features_root)
        target = out_root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        ftp_mod.write_feature_series(
            ftp_mod.FeatureSeries(
                vectors=descriptor.values[None, :],
                video_id=series.video_id,
                label=series.label,
            ),
            target,
        )
        count += 1
    log.info("wrote %d descriptors", count)


def _read_descriptor_dir(path: Path) -> tuple[np.ndarray, list[str]]:
    rows, labels = [], []
    for fser in sorted(path.glob("*.fser")):
        series = ftp_mod.load_external_features(fser)
        if series.label is None:
            raise click.ClickException(f"{fser}: descriptor has no label")
        rows.append(series.vectors[0])
        labels.append(series.label)
    if not rows:
        raise click.ClickException(f"no descriptors found in {path}")
    return np.stack(rows), labels


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--descriptors", "descriptors_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def train(config_path, descriptors_dir, out):
    """Fit a classifier on labelled descriptors (e.g. ftp/train)."""
    cfg = _config_from(config_path).recognizer
    X, labels = _read_descriptor_dir(Path(descriptors_dir))
    if cfg.classifier == "knn":
        model = recognizer.knn_train(X, labels, k=cfg.k)
    else:
        model = recognizer.ridge_train(X, labels, lam=cfg.lam)
    recognizer.save_model(model, out)
    log.info("trained %s on %d descriptors", cfg.classifier, len(labels))


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--descriptors", "descriptors_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def eval_cmd(model_path, descriptors_dir, out):
    """Evaluate a trained model; prints accuracy and writes the report."""
    model = recognizer.load_model(model_path)
    X, labels = _read_descriptor_dir(Path(descriptors_dir))
    report = recognizer.evaluate(model, X, labels)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    click.echo(report.to_table())
    click.echo(f"accuracy: {report.accuracy:.4f}")


@main.command()
@click.argument("path", type=click.Path(exists=True))
def inspect(path):
    """Pretty-print the header/metadata of any pipeline artifact."""
    path = Path(path)
    if path.suffix == ".skpx":
        blob = path.read_bytes()[:16]
        H, W, C = struct.unpack("<III", blob[4:16])
        click.echo(f"raw skeletal image: {H} x {W} x {C} (f32)")
    elif path.suffix == ".fser":
        blob = path.read_bytes()[:16]
        q, d, _ = struct.unpack("<III", blob[4:16])
        click.echo(f"feature series: Q={q} D={d} (f32)")
    elif path.suffix == ".json":
        click.echo(json.dumps(json.loads(path.read_text(encoding="utf-8")), indent=2))
    else:
        raise click.ClickException(f"unrecognized artifact type: {path.suffix}")
    sidecar = path.with_suffix(".json")
    if path.suffix != ".json" and sidecar.exists():
        click.echo(json.dumps(json.loads(sidecar.read_text(encoding="utf-8")), indent=2))


if __name__ == "__main__":
    main()

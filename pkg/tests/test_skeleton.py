import json

import numpy as np
import pytest

from skepxels import (
    DatasetManifest,
    ManifestEntry,
    ParseError,
    SkeletonLayout,
    SkeletonSequence,
    ValidationError,
    interleave_bodies,
    ntu_layout,
    parse_generic_json,
    parse_ntu_skeleton,
    serialize_generic_json,
)
from skepxels.skeleton import load_manifest, pair_longest_tracks, save_manifest


def make_ntu_text(frames, body_ids=(1,)):
    """Build an NTU .skeleton file for the given per-frame coordinates.

    ``frames``: list of dicts {body_id: [25, 3] array}.
    """
    lines = [str(len(frames))]
    for frame in frames:
        lines.append(str(len(frame)))
        for body_id, coords in frame.items():
            lines.append(" ".join([str(body_id)] + ["0"] * 9))
            lines.append("25")
            for x, y, z in coords:
                lines.append(f"{x} {y} {z} " + " ".join(["0"] * 9))
    return "\n".join(lines) + "\n"


def random_coords(rng):
    return rng.normal(size=(25, 3)).round(4)


class TestNtuParser:
    def test_single_body_roundtrip(self):
        rng = np.random.default_rng(1)
        c0, c1 = random_coords(rng), random_coords(rng)
        text = make_ntu_text([{1: c0}, {1: c1}])
        seqs = parse_ntu_skeleton(text)
        assert len(seqs) == 1
        assert seqs[0].frame_count == 2
        np.testing.assert_array_equal(seqs[0].joints, np.stack([c0, c1]))

    def test_two_bodies(self):
        rng = np.random.default_rng(2)
        frames = [
            {1: random_coords(rng), 2: random_coords(rng)},
            {1: random_coords(rng), 2: random_coords(rng)},
        ]
        seqs = parse_ntu_skeleton(make_ntu_text(frames))
        assert len(seqs) == 2
        assert all(s.frame_count == 2 for s in seqs)

    def test_frame_shortfall_reported(self):
        rng = np.random.default_rng(3)
        text = make_ntu_text([{1: random_coords(rng)}, {1: random_coords(rng)}])
        text = "3\n" + text.split("\n", 1)[1]  # claim 3 frames, provide 2
        with pytest.raises(ParseError, match="3 frames but ends after 2"):
            parse_ntu_skeleton(text)

    def test_malformed_count_line_names_line(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_ntu_skeleton("not-a-number\n")

    def test_short_joint_line(self):
        rng = np.random.default_rng(4)
        text = make_ntu_text([{1: random_coords(rng)}])
        lines = text.splitlines()
        lines[4] = "0.1 0.2"  # first joint line, only 2 fields
        with pytest.raises(ParseError, match="2 numeric fields"):
            parse_ntu_skeleton("\n".join(lines))

    def test_zero_frames_rejected(self):
        with pytest.raises(ParseError):
            parse_ntu_skeleton("0\n")

    def test_nan_rejected(self):
        rng = np.random.default_rng(5)
        coords = random_coords(rng).astype(object)
        coords[3][0] = "nan"
        with pytest.raises((ParseError, ValidationError)):
            parse_ntu_skeleton(make_ntu_text([{1: coords}]))


class TestGenericJson:
    def test_minimal_document(self):
        doc = '{"joints":4, "fps":30, "frames":[[[0,0,0],[1,0,0],[0,1,0],[0,0,1]]]}'
        seq = parse_generic_json(doc)
        assert seq.frame_count == 1
        assert seq.joint_count == 4
        np.testing.assert_array_equal(seq.joints[0, 3], [0, 0, 1])

    def test_joint_count_mismatch(self):
        doc = '{"joints":4, "fps":30, "frames":[[[0,0,0],[1,0,0],[0,1,0]]]}'
        with pytest.raises(ValidationError, match="3 joints"):
            parse_generic_json(doc)

    def test_missing_key(self):
        with pytest.raises(ParseError, match="frames"):
            parse_generic_json('{"joints":4, "fps":30}')

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(6)
        seq = SkeletonSequence(
            layout=ntu_layout(),
            joints=rng.normal(size=(5, 25, 3)),
            fps=25.0,
            label="wave",
            source_id="s1",
        )
        back = parse_generic_json(serialize_generic_json(seq), source_id="s1")
        np.testing.assert_array_equal(back.joints, seq.joints)
        assert back.label == seq.label
        assert back.fps == seq.fps
        assert back.layout.hip_index == seq.layout.hip_index

    def test_inf_rejected(self):
        doc = '{"joints":4, "fps":30, "frames":[[[0,0,0],[1,0,0],[0,1,0],[0,0,"Infinity"]]]}'
        with pytest.raises((ParseError, ValidationError)):
            parse_generic_json(doc)


class TestInterleave:
    def layout(self):
        return SkeletonLayout(4, 0, 1, 2, name="t4")

    def seq(self, marks):
        joints = np.stack([np.full((4, 3), m, dtype=float) for m in marks])
        return SkeletonSequence(self.layout(), joints, fps=30.0)

    def test_equal_lengths(self):
        out = interleave_bodies(self.seq([1, 2]), self.seq([10, 20]))
        assert out.frame_count == 4
        assert [out.joints[i, 0, 0] for i in range(4)] == [1, 10, 2, 20]
        assert out.fps == 60.0

    def test_shorter_repeats_last_frame(self):
        out = interleave_bodies(self.seq([1, 2]), self.seq([10]))
        assert [out.joints[i, 0, 0] for i in range(4)] == [1, 10, 2, 10]

    def test_length_is_twice_max(self):
        out = interleave_bodies(self.seq([1, 2, 3]), self.seq([10]))
        assert out.frame_count == 2 * 3

    def test_layout_mismatch(self):
        other = SkeletonSequence(
            SkeletonLayout(5, 0, 1, 2, name="t5"), np.zeros((1, 5, 3)), fps=30.0
        )
        with pytest.raises(ValidationError, match="layout mismatch"):
            interleave_bodies(self.seq([1]), other)

    def test_pair_longest_tracks_picks_two_longest(self):
        tracks = [self.seq([1]), self.seq([2, 2, 2]), self.seq([3, 3])]
        out = pair_longest_tracks(tracks)
        assert out.frame_count == 6
        assert out.joints[0, 0, 0] == 2  # longest track leads


class TestManifest:
    def test_roundtrip(self, tmp_path):
        manifest = DatasetManifest(
            entries=(
                ManifestEntry("a.json", "wave", "train"),
                ManifestEntry("b.json", "jump", "test"),
            ),
            layout=ntu_layout(),
        )
        save_manifest(manifest, tmp_path / "m.json")
        assert load_manifest(tmp_path / "m.json") == manifest

    def test_duplicate_paths_rejected(self):
        with pytest.raises(ValidationError, match="unique"):
            DatasetManifest(
                entries=(
                    ManifestEntry("a.json", "x", "train"),
                    ManifestEntry("a.json", "y", "test"),
                ),
                layout=ntu_layout(),
            )

    def test_bad_split_rejected(self):
        with pytest.raises(ValidationError, match="split"):
            ManifestEntry("a.json", "x", "validation")


class TestLayout:
    def test_anchor_bounds(self):
        with pytest.raises(ValidationError):
            SkeletonLayout(4, 0, 1, 9)

    def test_anchors_distinct(self):
        with pytest.raises(ValidationError):
            SkeletonLayout(4, 0, 0, 1)

    def test_minimum_joint_count(self):
        with pytest.raises(ValidationError):
            SkeletonLayout(3, 0, 1, 2)

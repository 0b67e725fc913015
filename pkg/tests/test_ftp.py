import numpy as np
import pytest

from skepxels import (
    FeatureSeries,
    FtpDescriptor,
    PyramidConfig,
    ValidationError,
    dft_low_freq,
    ftp_encode,
    load_external_features,
    write_feature_series,
)


def naive_dft_mags(series, z):
    """O(L^2) direct evaluation of low-frequency DFT magnitudes."""
    L = len(series)
    out = np.zeros(z)
    for k in range(min(z, L)):
        acc = 0.0 + 0.0j
        for t in range(L):
            acc += series[t] * np.exp(-2j * np.pi * k * t / L)
        out[k] = abs(acc)
    return out


class TestDftLowFreq:
    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            L = int(rng.integers(1, 24))
            z = int(rng.integers(1, 9))
            series = rng.normal(size=L) * rng.uniform(0.1, 10)
            np.testing.assert_allclose(
                dft_low_freq(series, z), naive_dft_mags(series, z), atol=1e-9, rtol=1e-9
            )

    def test_constant_series_spectrum(self):
        # k = 0 carries L * c, every other bin is exactly zero
        out = dft_low_freq(np.full(8, 2.5), 4)
        np.testing.assert_allclose(out, [20.0, 0, 0, 0], atol=1e-9)

    def test_impulse_flat_spectrum(self):
        out = dft_low_freq(np.eye(1, 8, 0).ravel() * 3.0, 5)
        np.testing.assert_allclose(out, 3.0, atol=1e-12)

    def test_short_series_zero_padded(self):
        out = dft_low_freq(np.array([1.0, 2.0]), 5)
        assert out[2:].tolist() == [0.0, 0.0, 0.0]
        np.testing.assert_allclose(out[:2], [3.0, 1.0])

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(1)
        s = rng.normal(size=12)
        np.testing.assert_allclose(
            dft_low_freq(3.0 * s, 4), 3.0 * dft_low_freq(s, 4), atol=1e-12
        )

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            dft_low_freq(np.array([]), 3)


class TestPyramidConfig:
    @pytest.mark.parametrize(
        "levels,z,dim,expected",
        [(1, 1, 1, 1), (3, 4, 8, 224), (3, 4, 1792, 50176), (3, 4, 256, 7168)],
    )
    def test_descriptor_length(self, levels, z, dim, expected):
        cfg = PyramidConfig(levels=levels, z=z, min_series_len=8)
        assert cfg.descriptor_length(dim) == expected

    def test_min_series_len_guard(self):
        with pytest.raises(ValidationError):
            PyramidConfig(levels=4, z=1, min_series_len=4)

    def test_bad_levels(self):
        with pytest.raises(ValidationError):
            PyramidConfig(levels=0)


class TestFtpEncode:
    def test_dc_only_pyramid_values(self):
        # D=1, Q=8, levels=3, z=1: seven DC magnitudes, one per segment
        series = FeatureSeries(np.arange(1.0, 9.0)[:, None])
        cfg = PyramidConfig(levels=3, z=1, min_series_len=8)
        desc = ftp_encode(series, cfg)
        # segment sums: [1..8], [1..4], [5..8], [1,2], [3,4], [5,6], [7,8]
        np.testing.assert_allclose(desc.values, [36, 10, 26, 3, 7, 11, 15], atol=1e-9)

    def test_level1_equals_whole_series_dft(self):
        rng = np.random.default_rng(2)
        vectors = rng.normal(size=(10, 3))
        series = FeatureSeries(vectors)
        cfg = PyramidConfig(levels=1, z=4, min_series_len=8)
        desc = ftp_encode(series, cfg)
        expected = np.concatenate([dft_low_freq(vectors[:, d], 4) for d in range(3)])
        np.testing.assert_allclose(desc.values, expected, atol=1e-9)

    def test_lengths_match_config(self):
        rng = np.random.default_rng(3)
        for dim in (1, 5, 256):
            series = FeatureSeries(rng.normal(size=(12, dim)))
            cfg = PyramidConfig(levels=3, z=4, min_series_len=8)
            assert ftp_encode(series, cfg).values.size == cfg.descriptor_length(dim)

    def test_constant_series_descriptor(self):
        # magnitudes are segment_len * c at k=0 and zero elsewhere
        cfg = PyramidConfig(levels=2, z=2, min_series_len=8)
        desc = ftp_encode(FeatureSeries(np.full((8, 1), 2.0)), cfg)
        np.testing.assert_allclose(desc.values, [16, 0, 8, 0, 8, 0], atol=1e-9)

    def test_level1_circular_shift_invariance(self):
        # DFT magnitudes ignore circular shifts when Q is untouched by resampling
        rng = np.random.default_rng(4)
        vectors = rng.normal(size=(8, 2))
        cfg = PyramidConfig(levels=1, z=4, min_series_len=8)
        a = ftp_encode(FeatureSeries(vectors), cfg)
        b = ftp_encode(FeatureSeries(np.roll(vectors, 3, axis=0)), cfg)
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(5)
        vectors = rng.normal(size=(9, 4))
        cfg = PyramidConfig()
        a = ftp_encode(FeatureSeries(vectors), cfg)
        b = ftp_encode(FeatureSeries(2.5 * vectors), cfg)
        np.testing.assert_allclose(b.values, 2.5 * a.values, atol=1e-9)

    def test_short_series_interpolated(self):
        # Q=2 is stretched to min_series_len rows before the pyramid
        cfg = PyramidConfig(levels=3, z=4, min_series_len=8)
        desc = ftp_encode(FeatureSeries(np.array([[0.0], [7.0]])), cfg)
        stretched = np.linspace(0.0, 7.0, 8)
        np.testing.assert_allclose(desc.values[:4], dft_low_freq(stretched, 4), atol=1e-9)

    def test_metadata_carried(self):
        series = FeatureSeries(np.ones((8, 1)), video_id="v7", label="jump")
        desc = ftp_encode(series, PyramidConfig())
        assert desc.video_id == "v7"
        assert desc.label == "jump"

    def test_nan_series_rejected(self):
        with pytest.raises(ValidationError):
            FeatureSeries(np.array([[np.nan]]))


class TestFeatureSeriesIo:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        series = FeatureSeries(
            rng.normal(size=(5, 7)).astype(np.float32).astype(np.float64),
            video_id="vid1",
            label="wave",
        )
        write_feature_series(series, tmp_path / "vid1")
        back = load_external_features(tmp_path / "vid1.fser")
        np.testing.assert_array_equal(back.vectors, series.vectors)
        assert back.video_id == "vid1"
        assert back.label == "wave"

    def test_truncated_container_rejected(self, tmp_path):
        series = FeatureSeries(np.ones((3, 4)))
        out, _ = write_feature_series(series, tmp_path / "x")
        out.write_bytes(out.read_bytes()[:-4])
        with pytest.raises(ValidationError, match="bytes"):
            load_external_features(out)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "x.fser"
        p.write_bytes(b"JUNK" + b"\0" * 16)
        with pytest.raises(ValidationError, match="container"):
            load_external_features(p)

    def test_missing_sidecar_uses_stem(self, tmp_path):
        series = FeatureSeries(np.ones((2, 2)), video_id="named")
        out, sidecar = write_feature_series(series, tmp_path / "stemid")
        sidecar.unlink()
        assert load_external_features(out).video_id == "stemid"


class TestDescriptor:
    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            FtpDescriptor(np.array([1.0, np.inf]), PyramidConfig())

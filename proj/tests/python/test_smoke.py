# Copyright 2026  The subcm Authors
# Licensed under the Apache License, Version 2.0 (the "License").

import numpy as np
import pytest

import subcm


def tone(n=30000, freq=1000.0):
    t = np.arange(n) / subcm.SAMPLE_RATE
    return (0.5 * np.cos(2 * np.pi * freq * t)).astype(np.float32)


def test_features_shape_and_normalization():
    feats = subcm.extract_features(tone())
    assert feats.shape == (300, 257)
    assert np.abs(feats.mean(axis=0)).max() < 1e-4


def test_standardize_tiles_short_input():
    x = np.arange(1, 11, dtype=np.float32)
    y = subcm.standardize_duration(x, 25)
    assert list(y[:12]) == [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 1, 2]


def test_trim_zeros_keeps_interior():
    x = np.array([0, 0, 1, 0, 2, 0], dtype=np.float32)
    assert list(subcm.trim_zeros(x)) == [1, 0, 2]


def test_split_widths_and_concat():
    feats = np.random.default_rng(0).standard_normal((300, 257)).astype(np.float32)
    for n in (1, 2, 4, 8):
        bands = subcm.split(feats, n)
        assert [b.shape[1] for b in bands] == subcm.subband_widths(n)
        assert np.array_equal(np.concatenate(bands, axis=1), feats)
    assert subcm.subband_widths(8) == [32] * 7 + [33]
    assert subcm.subband_labels(8)[7] == "7-8"
    with pytest.raises(subcm.ConfigError):
        subcm.split(feats, 3)


def test_eer_anchors():
    assert subcm.eer([1.0, 2.0], [-1.0, 0.0]) == 0.0
    assert subcm.eer([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.5)
    with pytest.raises(subcm.DataError):
        subcm.eer([], [1.0])


def test_min_tdcf_separable_is_zero():
    assert subcm.min_tdcf([2.0, 3.0], [0.0, 1.0], (0.05, 0.05, 0.5)) == pytest.approx(0.0)


def test_fusion():
    a = np.array([0.1, 0.2, 0.3])
    b = np.array([1.0, 2.0, 3.0])
    assert np.allclose(subcm.fuse_linear([a, b]), a + b)
    assert np.allclose(subcm.fuse_weighted([a, b], [2.0, -1.0], 0.5), 0.5 + 2 * a - b)

    rng = np.random.default_rng(1)
    y = np.repeat([1.0, 0.0], 200)
    s1 = rng.standard_normal(400) + 2 * y
    s2 = rng.standard_normal(400)
    weights, offset = subcm.fit_logistic_fusion([s1, s2], y)
    assert weights[0] > 1.0
    assert abs(weights[1]) < 0.5
    assert np.isfinite(offset)


def test_wave_round_trip(tmp_path):
    x = tone(1600)
    path = tmp_path / "a.wav"
    subcm.write_waveform(x, path)
    y = subcm.load_waveform(path)
    assert np.abs(x - y).max() <= 1.0 / 32768
    with pytest.raises(subcm.DataError):
        subcm.load_waveform(tmp_path / "missing.wav")


def test_synthetic_corpus(tmp_path):
    manifest = subcm.generate_synthetic(tmp_path / "c", n_per_class=[2, 2, 2])
    assert manifest["name"] == "synthetic"
    part = subcm.load_features(tmp_path / "c" / "corpus.json", "dev")
    assert len(part["ids"]) == 4
    assert part["features"][0].shape == (300, 257)
    assert sorted(set(part["labels"])) == ["bonafide", "spoof"]

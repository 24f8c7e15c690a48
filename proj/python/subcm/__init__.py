# Copyright 2026  The subcm Authors
# Licensed under the Apache License, Version 2.0 (the "License").

"""Joint subband CNN countermeasure for replay spoofing detection."""

import json

from . import _core
from ._core import (
    ConfigError,
    DataError,
    DivergenceError,
    Error,
    NUM_BINS,
    NUM_FRAMES,
    SAMPLE_RATE,
    STANDARD_SAMPLES,
    eer,
    error_curve,
    extract_features,
    fit_logistic_fusion,
    fuse_linear,
    fuse_weighted,
    load_features,
    load_waveform,
    log_power_spectrogram,
    mvn_normalize,
    read_scores,
    score_checkpoint,
    split,
    standardize_duration,
    subband_labels,
    subband_offsets,
    subband_widths,
    trim_zeros,
    write_scores,
    write_waveform,
)


def min_tdcf(bonafide, spoof, asv_rates, **overrides):
    """Minimum normalized t-DCF; asv_rates is (p_miss, p_fa, p_miss_spoof)."""
    params = json.loads(_core.tdcf_params(*asv_rates))
    params.update(overrides)
    return _core.min_tdcf(bonafide, spoof, json.dumps(params))


def asv_rates(path):
    return _core.asv_rates(path)


def generate_synthetic(out_dir, name="synthetic", **spec):
    """Writes a synthetic corpus and returns its manifest as a dict."""
    return json.loads(_core.generate_synthetic(str(out_dir), json.dumps(spec), name))


def checkpoint_manifest(path):
    return json.loads(_core.checkpoint_manifest(str(path)))


def run_experiment(config, stage):
    """Runs one stage ("pretrain", "joint" or "fuse") of an experiment config."""
    return json.loads(_core.run_experiment(json.dumps(config), stage))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]

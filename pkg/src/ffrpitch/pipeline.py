"""Recording-level pipeline: band-pass, align, track with one or more methods."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .acf import estimate_frames_acf
from .errors import InvalidParam
from .filterbank import HasConfig
from .has import bank_for, estimate_frames
from .preprocess import bandpass, bandpass_low_cutoff
from .signal_core import F0Contour, FrameSequence, SampledSignal, align_response

METHODS = ("has_pr", "has_ht", "acf")
METHOD_LABELS = {"has_pr": "HAS-PR", "has_ht": "HAS-HT", "acf": "ACF"}
_HAS_MODE = {"has_pr": "PR", "has_ht": "HT"}


@dataclass(frozen=True)
class PipelineConfig:
    has: HasConfig = field(default_factory=HasConfig)
    pre_stimulus_ms: float = 40.0
    neural_delay_ms: float = 10.0
    bp_low_margin_hz: float = 20.0
    bp_high_hz: float = 2000.0
    apply_bandpass: bool = True
    clamp_harmonics: bool = False


def prepare_frames(response: SampledSignal, stimulus: F0Contour, cfg: PipelineConfig) -> FrameSequence:
    """Band-pass (low cutoff tied to the stimulus F0 floor), then align to the stimulus frames."""
    if cfg.apply_bandpass:
        low = bandpass_low_cutoff(float(stimulus.f0_hz.min()), cfg.bp_low_margin_hz)
        response = bandpass(response, low, cfg.bp_high_hz)
    return align_response(
        response, cfg.pre_stimulus_ms, cfg.neural_delay_ms, len(stimulus),
        cfg.has.window_ms, cfg.has.hop_ms,
    )


def track_methods(
    response: SampledSignal,
    stimulus: F0Contour,
    cfg: PipelineConfig = PipelineConfig(),
    methods: Sequence[str] = ("has_pr",),
    diagnostics: Optional[dict] = None,
) -> dict[str, F0Contour]:
    """Response contours for each of ``methods`` (subset of :data:`METHODS`).

    The HAS spectra and scores are computed once and shared by PR and HT.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise InvalidParam(f"unknown method(s) {sorted(unknown)}; choose from {METHODS}")
    frames = prepare_frames(response, stimulus, cfg)
    return track_prepared(frames, stimulus, cfg, methods, diagnostics)


def track_prepared(
    frames: FrameSequence,
    stimulus: F0Contour,
    cfg: PipelineConfig,
    methods: Sequence[str],
    diagnostics: Optional[dict] = None,
) -> dict[str, F0Contour]:
    fs = frames.sample_rate_hz
    out: dict[str, F0Contour] = {}
    has_modes = [_HAS_MODE[m] for m in methods if m in _HAS_MODE]
    if has_modes:
        clamp = cfg.bp_high_hz if cfg.clamp_harmonics else None
        bank = bank_for(cfg.has, fs, clamp)
        diag = {} if diagnostics is not None else None
        ests = estimate_frames(frames, stimulus.f0_hz, cfg.has, bank, has_modes, diag)
        for m in methods:
            if m in _HAS_MODE:
                mode = _HAS_MODE[m]
                f0 = np.array([e.f0_hz for e in ests[mode]])
                out[m] = F0Contour(stimulus.times_s, f0, METHOD_LABELS[m])
                if diagnostics is not None:
                    diagnostics[m] = (diag[mode], bank.grid_hz)
    if "acf" in methods:
        ests = estimate_frames_acf(frames, stimulus.f0_hz, cfg.has.search_halfwidth_hz, fs)
        out["acf"] = F0Contour(stimulus.times_s, np.array([e.f0_hz for e in ests]), "ACF")
    return {m: out[m] for m in methods}

"""Autocorrelation baseline restricted to periods near the stimulus F0."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FrameTooShort, InvalidParam, SignalTooShort, WindowTooNarrow
from .has import PitchEstimate
from .signal_core import F0Contour, FrameSequence, SampledSignal, frame_signal


@dataclass(frozen=True)
class Correlogram:
    acf: np.ndarray
    sample_rate_hz: float

    def lags_s(self) -> np.ndarray:
        return np.arange(self.acf.size) / self.sample_rate_hz


def _acf_rows(frames: np.ndarray) -> np.ndarray:
    """Biased autocorrelation of each row, lags 0..L-1, via a zero-padded FFT."""
    L = frames.shape[-1]
    n = 1 << (2 * L - 1).bit_length()
    spec = np.fft.rfft(frames, n=n, axis=-1)
    r = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, n=n, axis=-1)[..., :L]
    return r / L


def autocorrelate(frame, sample_rate_hz: float) -> Correlogram:
    """``acf[k] = (1/L) * sum_n x[n] x[n+k]`` for ``k = 0 .. L-1``."""
    frame = np.asarray(frame, dtype=np.float64).ravel()
    if frame.size < 2:
        raise FrameTooShort("frame must hold at least 2 samples")
    return Correlogram(_acf_rows(frame[None, :])[0], float(sample_rate_hz))


def lag_window(stimulus_f0_hz: float, halfwidth_hz: float, sample_rate_hz: float, frame_len: int) -> tuple[int, int]:
    """Integer lags whose period falls within ``stimulus_f0 +/- halfwidth``.

    The upper lag is capped at ``frame_len - 2`` so a right neighbour exists
    for interpolation.
    """
    if not stimulus_f0_hz > 0:
        raise InvalidParam("stimulus_f0_hz must be > 0")
    lo = math.ceil(sample_rate_hz / (stimulus_f0_hz + halfwidth_hz) - 1e-9)
    f_low = stimulus_f0_hz - halfwidth_hz
    hi = frame_len - 2 if f_low <= 0 else math.floor(sample_rate_hz / f_low + 1e-9)
    lo, hi = max(lo, 1), min(hi, frame_len - 2)
    if hi - lo + 1 < 3:
        raise WindowTooNarrow(
            f"lag window [{lo}, {hi}] for {stimulus_f0_hz} +/- {halfwidth_hz} Hz "
            f"holds fewer than 3 integer lags"
        )
    return lo, hi


def parabolic_peak(values: np.ndarray, i: int) -> float:
    """Vertex offset of the parabola through ``values[i-1:i+2]``, clipped to +/-0.5."""
    a, b, c = values[i - 1], values[i], values[i + 1]
    denom = a - 2.0 * b + c
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))


def _pick(acf: np.ndarray, lo: int, hi: int, fs: float) -> PitchEstimate:
    k = lo + int(np.argmax(acf[lo:hi + 1]))
    lag = k + parabolic_peak(acf, k)
    return PitchEstimate(fs / lag, k, float(acf[k]), 0.0, False)


def acf_f0(frame, stimulus_f0_hz: float, halfwidth_hz: float, sample_rate_hz: float) -> PitchEstimate:
    """F0 from the highest autocorrelation lag inside the stimulus window.

    The integer lag is refined by 3-point parabolic interpolation; the
    returned ``peak_index`` is the integer lag.
    """
    frame = np.asarray(frame, dtype=np.float64).ravel()
    lo, hi = lag_window(stimulus_f0_hz, halfwidth_hz, sample_rate_hz, frame.size)
    return _pick(autocorrelate(frame, sample_rate_hz).acf, lo, hi, sample_rate_hz)


def estimate_frames_acf(
    frames: FrameSequence | np.ndarray,
    anchors_hz: Sequence[float],
    halfwidth_hz: float,
    sample_rate_hz: float,
) -> list[PitchEstimate]:
    data = frames.frames if isinstance(frames, FrameSequence) else np.atleast_2d(frames)
    if len(anchors_hz) != data.shape[0]:
        raise InvalidParam(f"{len(anchors_hz)} anchors for {data.shape[0]} frames")
    R = _acf_rows(data)
    out = []
    for r, f0 in zip(R, anchors_hz):
        lo, hi = lag_window(float(f0), halfwidth_hz, sample_rate_hz, data.shape[1])
        out.append(_pick(r, lo, hi, sample_rate_hz))
    return out


def track_contour_acf(
    response: SampledSignal,
    stimulus_contour: F0Contour,
    halfwidth_hz: float = 50.0,
    window_ms: float = 50.0,
    hop_ms: float = 10.0,
) -> F0Contour:
    """ACF counterpart of :func:`ffrpitch.has.track_contour` (response already aligned)."""
    frames = frame_signal(response, window_ms, hop_ms)
    n = len(stimulus_contour)
    if len(frames) < n:
        raise SignalTooShort(f"response yields {len(frames)} frames, stimulus contour has {n}")
    ests = estimate_frames_acf(frames.head(n), stimulus_contour.f0_hz, halfwidth_hz, response.sample_rate_hz)
    return F0Contour(stimulus_contour.times_s, np.array([e.f0_hz for e in ests]), "ACF")

"""Waveform and contour containers, framing, and stimulus/response alignment.

Framing is rectangular by default: frame ``i`` is the raw slice
``samples[i*hop : i*hop + L]`` with ``L = round(window_ms * fs / 1000)`` and
``hop = round(hop_ms * fs / 1000)``. At the 175 us sampling interval of the
reference recordings (fs = 5714.2857 Hz) this gives ``L = 286`` and
``hop = 57`` samples.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    FormatError,
    InvalidParam,
    ResponseTooShort,
    SignalTooShort,
)
from .fileio import atomic_write_text, comment_block, data_lines

CONTOUR_HEADER = "time_s,f0_hz"


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SampledSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = _readonly(np.ravel(self.samples))
        if not self.sample_rate_hz > 0:
            raise InvalidParam(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise InvalidParam("samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, L)
    window_ms: float
    hop_ms: float
    frame_start_times_s: np.ndarray
    sample_rate_hz: float
    hop_samples: int = 0

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64, ndmin=2)
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_start_times_s", _readonly(self.frame_start_times_s))

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.frames[i]

    @property
    def frame_len(self) -> int:
        return self.frames.shape[1]

    def head(self, n: int) -> "FrameSequence":
        return FrameSequence(
            self.frames[:n], self.window_ms, self.hop_ms,
            self.frame_start_times_s[:n], self.sample_rate_hz, self.hop_samples,
        )


@dataclass(frozen=True)
class F0Contour:
    times_s: np.ndarray
    f0_hz: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = _readonly(np.ravel(self.times_s))
        f = _readonly(np.ravel(self.f0_hz))
        if t.shape != f.shape:
            raise InvalidParam(f"times ({t.size}) and f0 ({f.size}) lengths differ")
        if not (np.all(np.isfinite(f)) and np.all(f > 0)):
            raise InvalidParam("f0 values must be finite and > 0")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise InvalidParam("times must be finite and strictly increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "f0_hz", f)

    def __len__(self) -> int:
        return self.f0_hz.shape[0]


def samples_for_ms(ms: float, sample_rate_hz: float) -> int:
    """Round a duration in ms to the nearest whole number of samples."""
    return int(round(ms * sample_rate_hz / 1000.0))


def frame_count(n_samples: int, frame_len: int, hop_samples: int) -> int:
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop_samples + 1


def frame_signal(
    signal: SampledSignal,
    window_ms: float = 50.0,
    hop_ms: float = 10.0,
    *,
    offset_s: float = 0.0,
    taper: Optional[str] = None,
) -> FrameSequence:
    """Cut ``signal`` into fixed-length frames.

    Parameters
    ----------
    signal : SampledSignal
    window_ms, hop_ms : float
        Frame length and step, in milliseconds.
    offset_s : float
        Time stamp of sample 0, added to every frame start time.
    taper : {None, 'hann'}
        Optional taper. The default leaves frames as exact slices of the input.

    Returns
    -------
    FrameSequence
        ``frame_start_times_s[i] = offset_s + i * hop_ms / 1000``.
    """
    if not (window_ms > 0 and hop_ms > 0):
        raise InvalidParam(f"window_ms and hop_ms must be > 0 (got {window_ms}, {hop_ms})")
    fs = signal.sample_rate_hz
    L = samples_for_ms(window_ms, fs)
    hop = samples_for_ms(hop_ms, fs)
    if L < 1 or hop < 1:
        raise InvalidParam("window or hop shorter than one sample")
    n = frame_count(len(signal), L, hop)
    if n == 0:
        raise SignalTooShort(
            f"signal has {len(signal)} samples, fewer than one {window_ms} ms window ({L})"
        )
    starts = np.arange(n) * hop
    frames = np.lib.stride_tricks.sliding_window_view(signal.samples, L)[::hop][:n]
    if taper is not None:
        if taper != "hann":
            raise InvalidParam(f"unknown taper {taper!r}")
        frames = frames * np.hanning(L)
    times = offset_s + np.arange(n) * (hop_ms / 1000.0)
    assert starts[-1] + L <= len(signal)
    return FrameSequence(frames, float(window_ms), float(hop_ms), times, fs, hop)


def align_response(
    response: SampledSignal,
    pre_stimulus_ms: float,
    neural_delay_ms: float,
    n_stimulus_frames: int,
    window_ms: float = 50.0,
    hop_ms: float = 10.0,
) -> FrameSequence:
    """Drop the lead-in of ``response`` and frame it on the stimulus grid.

    The first ``pre_stimulus_ms + neural_delay_ms`` are discarded, the rest is
    framed with the stimulus window/hop, and framing stops after
    ``n_stimulus_frames`` frames; any remaining post-stimulus recording is
    ignored. Frame start times are measured from the start of the recording.
    """
    if n_stimulus_frames < 1:
        raise InvalidParam("n_stimulus_frames must be >= 1")
    lead_ms = pre_stimulus_ms + neural_delay_ms
    if lead_ms < 0:
        raise InvalidParam("pre-stimulus + delay must be >= 0")
    fs = response.sample_rate_hz
    skip = samples_for_ms(lead_ms, fs)
    rest = response.samples[skip:]
    L = samples_for_ms(window_ms, fs)
    hop = samples_for_ms(hop_ms, fs)
    available = frame_count(rest.size, L, max(hop, 1))
    if available < n_stimulus_frames:
        raise ResponseTooShort(
            f"response yields {available} frames after discarding {lead_ms} ms; "
            f"{n_stimulus_frames} stimulus frames required"
        )
    framed = frame_signal(
        SampledSignal(rest, fs), window_ms, hop_ms, offset_s=lead_ms / 1000.0
    )
    return framed.head(n_stimulus_frames)


def frame_center_times(n_frames: int, window_ms: float = 50.0, hop_ms: float = 10.0) -> np.ndarray:
    return (np.arange(n_frames) * hop_ms + window_ms / 2.0) / 1000.0


def n_frames_for_duration(duration_ms: float, window_ms: float = 50.0, hop_ms: float = 10.0) -> int:
    """``floor((T - window) / hop) + 1``, or 0 when T < window."""
    if duration_ms + 1e-9 < window_ms:
        return 0
    return int(np.floor((duration_ms - window_ms) / hop_ms + 1e-9)) + 1


# -- contour CSV -----------------------------------------------------------

def format_contour_csv(contour: F0Contour, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(comment_block(meta))
    buf.write(CONTOUR_HEADER + "\n")
    for t, f in zip(contour.times_s, contour.f0_hz):
        buf.write(f"{t:.6f},{f:.6f}\n")
    return buf.getvalue()


def write_contour_csv(path, contour: F0Contour, meta: dict | None = None) -> None:
    atomic_write_text(path, format_contour_csv(contour, meta))


def read_contour_csv(path, label: str | None = None) -> F0Contour:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(data_lines(fh))
    if not rows:
        raise FormatError(path, "line 1", "empty contour file")
    lineno, header = rows[0]
    if [c.strip() for c in header.split(",")] != CONTOUR_HEADER.split(","):
        raise FormatError(path, f"line {lineno}", f"expected header {CONTOUR_HEADER!r}, got {header!r}")
    times, f0 = [], []
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(path, f"line {lineno}", f"expected 2 fields, got {len(parts)}")
        try:
            times.append(float(parts[0]))
            f0.append(float(parts[1]))
        except ValueError as exc:
            raise FormatError(path, f"line {lineno}", str(exc)) from None
    if not times:
        raise FormatError(path, f"line {lineno}", "no data rows")
    try:
        return F0Contour(np.array(times), np.array(f0), label if label is not None else path.stem)
    except InvalidParam as exc:
        raise FormatError(path, "data", str(exc)) from None

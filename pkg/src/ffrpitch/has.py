"""Harmonic amplitude summation (HAS) with prominence or height peak picking.

For every frame the zero-padded magnitude spectrum is scored against each
row of the filterbank (a dot product per candidate F0). Peaks of the score
vector are found from sign changes of its first difference, and the F0 is
picked among the peaks that lie within ``search_halfwidth_hz`` of the
time-aligned stimulus F0, either by topographic prominence (``"PR"``) or by
raw height (``"HT"``).
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import EmptyWindow, GeometryMismatch, InvalidParam, NotAPeak, SignalTooShort
from .filterbank import FilterBank, HasConfig, get_filterbank
from .fileio import atomic_write_text
from .signal_core import F0Contour, FrameSequence, SampledSignal, frame_signal, samples_for_ms
from .spectrum import MagnitudeSpectrum, choose_dft_length, magnitude_frames

Mode = Literal["PR", "HT"]


@dataclass(frozen=True)
class SummationVector:
    y: np.ndarray
    grid_hz: np.ndarray

    def __len__(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class PitchEstimate:
    f0_hz: float
    peak_index: int
    peak_value: float
    prominence: float
    fallback_used: bool = False


@dataclass
class FrameDiagnostics:
    """Per-frame intermediate values kept when diagnostics are requested."""

    y: np.ndarray
    peaks: np.ndarray
    prominences: np.ndarray
    window: tuple[float, float]
    estimate: PitchEstimate


def bank_for(config: HasConfig, sample_rate_hz: float, clamp_hz: Optional[float] = None) -> FilterBank:
    """Filterbank matching frames of ``config.window_ms`` at ``sample_rate_hz``."""
    L = samples_for_ms(config.window_ms, sample_rate_hz)
    geometry = choose_dft_length(sample_rate_hz, L)
    return get_filterbank(config, geometry, L, clamp_hz)


def harmonic_summation(spectrum: MagnitudeSpectrum, bank: FilterBank) -> SummationVector:
    """``y[i] = sum_f |X(f)| * H[i, f]``."""
    if spectrum.geometry != bank.geometry:
        raise GeometryMismatch(f"spectrum geometry {spectrum.geometry} != filterbank geometry {bank.geometry}")
    return SummationVector(bank.H @ spectrum.mags, bank.grid_hz)


def summation_matrix(frames: np.ndarray, bank: FilterBank) -> np.ndarray:
    """HAS scores for a stack of frames, shape ``(n_frames, M)``."""
    frames = np.atleast_2d(frames)
    if frames.shape[1] != bank.frame_len:
        raise GeometryMismatch(f"frame length {frames.shape[1]} != filterbank frame length {bank.frame_len}")
    mags = magnitude_frames(frames, bank.geometry)
    return mags @ bank.H.T


def detect_peaks(y) -> np.ndarray:
    """Indices where the first difference goes from positive to non-positive.

    A plateau reports its first index; the two endpoints are never peaks.
    """
    y = np.asarray(getattr(y, "y", y), dtype=np.float64)
    if y.size < 3:
        raise InvalidParam("need at least 3 points to detect peaks")
    d = np.diff(y)
    return np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0)) + 1


def prominence(y, peak: int) -> float:
    """Topographic prominence of ``y[peak]``.

    Each side is walked until a strictly higher value (or the array end);
    the lowest value seen on that side is its base. The prominence is the
    height above the higher of the two bases. A peak with nothing strictly
    higher anywhere (the global maximum) is measured from ``min(y)``.
    """
    y = np.asarray(getattr(y, "y", y), dtype=np.float64)
    p = int(peak)
    if not (0 < p < y.size - 1) or not (y[p] > y[p - 1] and y[p] >= y[p + 1]):
        raise NotAPeak(f"index {peak} is not a peak")
    return _prominence(y, p)


def _prominence(y: np.ndarray, p: int) -> float:
    h = y[p]
    higher_left = np.flatnonzero(y[:p] > h)
    higher_right = np.flatnonzero(y[p + 1:] > h)
    if higher_left.size == 0 and higher_right.size == 0:
        return float(h - y.min())
    lo = higher_left[-1] + 1 if higher_left.size else 0
    hi = p + 1 + higher_right[0] if higher_right.size else y.size
    left_base = y[lo:p].min()
    right_base = y[p + 1:hi].min()
    return float(h - max(left_base, right_base))


def prominences(y, peaks: Sequence[int]) -> np.ndarray:
    y = np.asarray(getattr(y, "y", y), dtype=np.float64)
    return np.array([_prominence(y, int(p)) for p in peaks], dtype=np.float64)


def search_window(grid_hz: np.ndarray, stimulus_f0_hz: float, halfwidth_hz: float) -> tuple[float, float]:
    lo = max(stimulus_f0_hz - halfwidth_hz, grid_hz[0])
    hi = min(stimulus_f0_hz + halfwidth_hz, grid_hz[-1])
    return lo, hi


def _best(scores: np.ndarray, freqs: np.ndarray, anchor: float) -> int:
    """Position of the max score; ties go to the frequency nearest ``anchor``, then the lower one."""
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1:
        return int(best[0])
    order = np.lexsort((freqs[best], np.abs(freqs[best] - anchor)))
    return int(best[order[0]])


def select_f0(
    y: SummationVector,
    peaks,
    stimulus_f0_hz: float,
    halfwidth_hz: float = 50.0,
    mode: Mode = "PR",
    proms: Optional[np.ndarray] = None,
) -> PitchEstimate:
    """Pick the F0 among ``peaks`` inside the window around the stimulus F0.

    Falls back to the highest grid point inside the window (flagged with
    ``fallback_used``) when no detected peak lies in it.
    """
    if not stimulus_f0_hz > 0:
        raise InvalidParam("stimulus_f0_hz must be > 0")
    if mode not in ("PR", "HT"):
        raise InvalidParam(f"mode must be 'PR' or 'HT', got {mode!r}")
    grid = y.grid_hz
    vals = y.y
    lo, hi = search_window(grid, stimulus_f0_hz, halfwidth_hz)
    in_window = (grid >= lo - 1e-9) & (grid <= hi + 1e-9)
    if not in_window.any():
        raise EmptyWindow(
            f"window {stimulus_f0_hz} +/- {halfwidth_hz} Hz does not meet the grid "
            f"[{grid[0]}, {grid[-1]}] Hz"
        )
    peaks = np.asarray(peaks, dtype=np.intp)
    if proms is None:
        proms = prominences(vals, peaks)
    keep = in_window[peaks] if peaks.size else np.zeros(0, bool)
    cand, cand_prom = peaks[keep], np.asarray(proms)[keep]
    if cand.size == 0:
        idx = np.flatnonzero(in_window)
        j = idx[_best(vals[idx], grid[idx], stimulus_f0_hz)]
        return PitchEstimate(float(grid[j]), int(j), float(vals[j]), 0.0, True)
    scores = cand_prom if mode == "PR" else vals[cand]
    k = _best(scores, grid[cand], stimulus_f0_hz)
    j = int(cand[k])
    return PitchEstimate(float(grid[j]), j, float(vals[j]), float(cand_prom[k]), False)


def estimate_frames(
    frames: FrameSequence | np.ndarray,
    anchors_hz: Sequence[float],
    config: HasConfig,
    bank: FilterBank,
    modes: Sequence[Mode] = ("PR",),
    diagnostics: Optional[dict] = None,
) -> dict[str, list[PitchEstimate]]:
    """Run HAS over every frame, returning estimates for each requested mode.

    The spectra and score vectors are shared between modes. When a dict is
    passed as ``diagnostics`` it is filled with ``{mode: [FrameDiagnostics]}``.
    """
    data = frames.frames if isinstance(frames, FrameSequence) else np.atleast_2d(frames)
    anchors = np.asarray(anchors_hz, dtype=np.float64)
    if anchors.size != data.shape[0]:
        raise InvalidParam(f"{anchors.size} anchors for {data.shape[0]} frames")
    Y = summation_matrix(data, bank)
    out: dict[str, list[PitchEstimate]] = {m: [] for m in modes}
    for i, y in enumerate(Y):
        sv = SummationVector(y, bank.grid_hz)
        peaks = detect_peaks(y)
        proms = prominences(y, peaks)
        for m in modes:
            est = select_f0(sv, peaks, anchors[i], config.search_halfwidth_hz, m, proms)
            out[m].append(est)
            if diagnostics is not None:
                diagnostics.setdefault(m, []).append(FrameDiagnostics(
                    y, peaks, proms, search_window(bank.grid_hz, anchors[i], config.search_halfwidth_hz), est,
                ))
    return out


def track_contour(
    response: SampledSignal,
    stimulus_contour: F0Contour,
    config: HasConfig = HasConfig(),
    bank: Optional[FilterBank] = None,
    mode: Mode = "PR",
    diagnostics: Optional[list] = None,
) -> F0Contour:
    """Frame an already aligned response and track it against the stimulus contour.

    ``response`` must start at the first stimulus frame (lead-in removed, see
    :func:`ffrpitch.signal_core.align_response`); exactly
    ``len(stimulus_contour)`` frames are used.
    """
    if bank is None:
        bank = bank_for(config, response.sample_rate_hz)
    frames = frame_signal(response, config.window_ms, config.hop_ms)
    n = len(stimulus_contour)
    if len(frames) < n:
        raise SignalTooShort(f"response yields {len(frames)} frames, stimulus contour has {n}")
    return track_frames(frames.head(n), stimulus_contour, config, bank, mode, diagnostics)


def track_frames(
    frames: FrameSequence,
    stimulus_contour: F0Contour,
    config: HasConfig,
    bank: FilterBank,
    mode: Mode = "PR",
    diagnostics: Optional[list] = None,
) -> F0Contour:
    if len(frames) != len(stimulus_contour):
        raise InvalidParam(f"{len(frames)} frames for a {len(stimulus_contour)}-frame stimulus contour")
    diag = {} if diagnostics is not None else None
    ests = estimate_frames(frames, stimulus_contour.f0_hz, config, bank, (mode,), diag)[mode]
    if diagnostics is not None:
        diagnostics.extend(diag[mode])
    f0 = np.array([e.f0_hz for e in ests])
    return F0Contour(stimulus_contour.times_s, f0, f"HAS-{mode}")


def format_diagnostics(diagnostics: Sequence[FrameDiagnostics], grid_hz: np.ndarray) -> tuple[str, str]:
    """Two plot-ready CSV tables: the score vectors and the peak tables."""
    ys = io.StringIO()
    ys.write("frame,f0_hz,y\n")
    pk = io.StringIO()
    pk.write("frame,f0_hz,value,prominence,in_window,selected,fallback\n")
    for i, d in enumerate(diagnostics):
        for f, v in zip(grid_hz, d.y):
            ys.write(f"{i},{f:g},{v:.9g}\n")
        lo, hi = d.window
        for p, pr in zip(d.peaks, d.prominences):
            f = grid_hz[p]
            inside = int(lo - 1e-9 <= f <= hi + 1e-9)
            sel = int(p == d.estimate.peak_index and not d.estimate.fallback_used)
            pk.write(f"{i},{f:g},{d.y[p]:.9g},{pr:.9g},{inside},{sel},0\n")
        if d.estimate.fallback_used:
            e = d.estimate
            pk.write(f"{i},{e.f0_hz:g},{e.peak_value:.9g},0,1,1,1\n")
    return ys.getvalue(), pk.getvalue()


def write_diagnostics(prefix, diagnostics: Sequence[FrameDiagnostics], grid_hz: np.ndarray) -> tuple[str, str]:
    y_csv, peaks_csv = format_diagnostics(diagnostics, grid_hz)
    y_path, peaks_path = f"{prefix}.y.csv", f"{prefix}.peaks.csv"
    atomic_write_text(y_path, y_csv)
    atomic_write_text(peaks_path, peaks_csv)
    return y_path, peaks_path

"""Zero-padded magnitude DFT shared by response frames and harmonic filters."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FrameTooLong, InvalidParam


@dataclass(frozen=True)
class DftGeometry:
    """DFT size and the kept bins (0 .. fft_len/2 - 1; Nyquist dropped)."""

    fft_len: int
    sample_rate_hz: float

    def __post_init__(self):
        if self.fft_len < 2 or self.fft_len % 2:
            raise InvalidParam(f"fft_len must be even and >= 2, got {self.fft_len}")
        if not self.sample_rate_hz > 0:
            raise InvalidParam("sample_rate_hz must be > 0")

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2

    @property
    def bin_hz(self) -> float:
        return self.sample_rate_hz / self.fft_len

    def freqs(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz

    def bin_of(self, freq_hz: float) -> int:
        return int(round(freq_hz / self.bin_hz))


def choose_dft_length(sample_rate_hz: float, frame_len: int) -> DftGeometry:
    """Smallest power of two >= max(2 * frame_len, ceil(fs)).

    This keeps bins at or below 1 Hz and leaves at least ``frame_len`` zeros
    of padding.
    """
    if frame_len < 1:
        raise InvalidParam("frame_len must be >= 1")
    need = max(2 * frame_len, math.ceil(sample_rate_hz))
    fft_len = 1 << (need - 1).bit_length()
    return DftGeometry(fft_len, float(sample_rate_hz))


@dataclass(frozen=True)
class MagnitudeSpectrum:
    mags: np.ndarray
    geometry: DftGeometry


def magnitude_frames(frames: np.ndarray, geometry: DftGeometry) -> np.ndarray:
    """Magnitudes of the kept bins for each row of ``frames`` (2-D in, 2-D out)."""
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[-1] > geometry.fft_len:
        raise FrameTooLong(f"frame length {frames.shape[-1]} exceeds fft_len {geometry.fft_len}")
    spec = np.fft.rfft(frames, n=geometry.fft_len, axis=-1)
    return np.abs(spec[:, : geometry.n_bins])


def magnitude_spectrum(frame, geometry: DftGeometry) -> MagnitudeSpectrum:
    frame = np.asarray(frame, dtype=np.float64).ravel()
    return MagnitudeSpectrum(magnitude_frames(frame, geometry)[0], geometry)

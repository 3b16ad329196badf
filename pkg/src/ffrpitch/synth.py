"""Synthetic FFR sweeps: harmonic tone with a time-varying F0 plus noise.

A sweep is laid out as ``[lead-in | stimulus-driven response | tail]``; the
harmonic signal is present only in the middle part, noise everywhere. The
per-sweep SNR compares the mean signal power over the response span with the
(stationary) noise power, and the noise realisation is scaled so the ratio
is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import AliasedHarmonic, InvalidSpec, InvalidParam
from .preprocess import SweepSet, alternating_polarity
from .signal_core import (
    F0Contour,
    SampledSignal,
    frame_center_times,
    n_frames_for_duration,
    samples_for_ms,
)

REFERENCE_FS = 1.0 / 175e-6  # 5714.2857 Hz
GRID_RANGE = (80.0, 500.0)


@dataclass(frozen=True)
class ContourSpec:
    breakpoints: tuple[tuple[float, float], ...]
    duration_s: float
    name: str = ""

    def __post_init__(self):
        bp = tuple((float(t), float(f)) for t, f in self.breakpoints)
        if len(bp) < 2:
            raise InvalidSpec("need at least 2 breakpoints")
        times = np.array([t for t, _ in bp])
        f0 = np.array([f for _, f in bp])
        if np.any(np.diff(times) <= 0):
            raise InvalidSpec("breakpoint times must be strictly increasing")
        if np.any(f0 < GRID_RANGE[0]) or np.any(f0 > GRID_RANGE[1]):
            raise InvalidSpec(f"breakpoint F0s must lie in [{GRID_RANGE[0]}, {GRID_RANGE[1]}] Hz")
        if not self.duration_s > 0 or not np.all(np.isfinite(times)):
            raise InvalidSpec("duration must be > 0 and times finite")
        object.__setattr__(self, "breakpoints", bp)

    def f0_at(self, t_s) -> np.ndarray:
        times = [t for t, _ in self.breakpoints]
        f0 = [f for _, f in self.breakpoints]
        return np.interp(t_s, times, f0)

    @property
    def f0_max(self) -> float:
        return max(f for _, f in self.breakpoints)

    @property
    def f0_min(self) -> float:
        return min(f for _, f in self.breakpoints)


# Male/female voice with sad/happy intonation of one spoken word. The F0
# landmarks are fixed; breakpoint timings and durations are illustrative.
PRESETS: dict[str, ContourSpec] = {
    "MS": ContourSpec(((0.0, 111.0), (0.56, 85.0)), 0.56, "MS"),
    "MH": ContourSpec(((0.0, 110.0), (0.30, 181.0), (0.66, 164.0)), 0.66, "MH"),
    "FS": ContourSpec(((0.0, 280.0), (0.20, 331.0), (0.60, 191.0)), 0.60, "FS"),
    "FH": ContourSpec(((0.0, 304.0), (0.20, 437.0), (0.50, 180.0)), 0.50, "FH"),
}
# Harmonic count used by HAS for each preset (4 for the low-F0 male sad contour).
PRESET_K = {"MS": 4, "MH": 2, "FS": 2, "FH": 2}


@dataclass(frozen=True)
class SynthConfig:
    K_signal: int = 4
    harmonic_rolloff: float = 0.5
    harmonic_phases: Optional[tuple[float, ...]] = None
    snr_db_per_sweep: float = float("inf")
    noise_kind: Literal["white", "pink"] = "white"
    sample_rate_hz: float = REFERENCE_FS
    seed: int = 0
    lead_in_ms: float = 0.0
    tail_ms: float = 0.0

    def __post_init__(self):
        if int(self.K_signal) != self.K_signal or self.K_signal < 1:
            raise InvalidParam("K_signal must be an integer >= 1")
        if not 0 < self.harmonic_rolloff <= 1:
            raise InvalidParam("harmonic_rolloff must lie in (0, 1]")
        if self.noise_kind not in ("white", "pink"):
            raise InvalidParam(f"unknown noise kind {self.noise_kind!r}")
        if not (self.sample_rate_hz > 0 and np.isfinite(self.sample_rate_hz)):
            raise InvalidParam("sample_rate_hz must be finite and > 0")
        if np.isnan(self.snr_db_per_sweep) or self.snr_db_per_sweep == -np.inf:
            raise InvalidParam("snr_db_per_sweep must be a number or +inf")
        if self.lead_in_ms < 0 or self.tail_ms < 0:
            raise InvalidParam("lead_in_ms and tail_ms must be >= 0")
        if self.harmonic_phases is not None:
            phases = tuple(float(p) for p in self.harmonic_phases)
            if len(phases) != self.K_signal or not np.all(np.isfinite(phases)):
                raise InvalidParam("harmonic_phases needs K_signal finite values")
            object.__setattr__(self, "harmonic_phases", phases)

    def amplitudes(self) -> np.ndarray:
        return self.harmonic_rolloff ** np.arange(self.K_signal)

    def phases(self) -> np.ndarray:
        if self.harmonic_phases is None:
            return np.zeros(self.K_signal)
        return np.asarray(self.harmonic_phases)


def contour_from_spec(spec: ContourSpec, window_ms: float = 50.0, hop_ms: float = 10.0) -> F0Contour:
    """Ground-truth contour sampled at the frame centres of the stimulus framing grid."""
    n = n_frames_for_duration(spec.duration_s * 1000.0, window_ms, hop_ms)
    if n < 1:
        raise InvalidSpec(f"duration {spec.duration_s} s is shorter than one {window_ms} ms frame")
    t = frame_center_times(n, window_ms, hop_ms)
    return F0Contour(t, spec.f0_at(t), spec.name)


def _layout(spec: ContourSpec, cfg: SynthConfig) -> tuple[int, int, int]:
    fs = cfg.sample_rate_hz
    lead = samples_for_ms(cfg.lead_in_ms, fs)
    body = int(round(spec.duration_s * fs))
    tail = samples_for_ms(cfg.tail_ms, fs)
    return lead, body, tail


def clean_signal(spec: ContourSpec, cfg: SynthConfig) -> np.ndarray:
    """Noise-free sweep with phase-continuous harmonics."""
    fs = cfg.sample_rate_hz
    if cfg.K_signal * spec.f0_max >= fs / 2:
        raise AliasedHarmonic(
            f"harmonic {cfg.K_signal} of {spec.f0_max} Hz reaches Nyquist ({fs / 2} Hz)"
        )
    lead, body, tail = _layout(spec, cfg)
    t = np.arange(body) / fs
    f0 = spec.f0_at(t)
    # phase integral of F0, starting at 0 at stimulus onset
    cycles = np.concatenate(([0.0], np.cumsum(f0[:-1]) / fs))
    ks = np.arange(1, cfg.K_signal + 1)[:, None]
    harm = cfg.amplitudes()[:, None] * np.cos(2 * np.pi * ks * cycles + cfg.phases()[:, None])
    out = np.zeros(lead + body + tail)
    out[lead:lead + body] = harm.sum(axis=0)
    return out


def pink_shape(white: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """Shape white noise (last axis) to a 1/f power spectrum; DC is removed."""
    n = white.shape[-1]
    spec = np.fft.rfft(white, axis=-1)
    f = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    gain = np.zeros_like(f)
    gain[1:] = 1.0 / np.sqrt(f[1:])
    return np.fft.irfft(spec * gain, n=n, axis=-1)


def sweep_rng(seed: int, sweep_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(sweep_index)])


def _noise(n_samples: int, cfg: SynthConfig, sweep_indices: Sequence[int], power: float) -> np.ndarray:
    rows = np.empty((len(sweep_indices), n_samples))
    for r, idx in enumerate(sweep_indices):
        rows[r] = sweep_rng(cfg.seed, idx).standard_normal(n_samples)
    if cfg.noise_kind == "pink":
        rows = pink_shape(rows, cfg.sample_rate_hz)
    rows *= np.sqrt(power / np.mean(rows ** 2, axis=1, keepdims=True))
    return rows


def _noise_power(clean: np.ndarray, spec: ContourSpec, cfg: SynthConfig) -> float:
    lead, body, _ = _layout(spec, cfg)
    p_sig = float(np.mean(clean[lead:lead + body] ** 2))
    return p_sig / 10.0 ** (cfg.snr_db_per_sweep / 10.0)


def synth_sweep(spec: ContourSpec, cfg: SynthConfig, sweep_index: int = 0) -> SampledSignal:
    clean = clean_signal(spec, cfg)
    if np.isposinf(cfg.snr_db_per_sweep):
        return SampledSignal(clean, cfg.sample_rate_hz)
    noise = _noise(clean.size, cfg, [sweep_index], _noise_power(clean, spec, cfg))[0]
    return SampledSignal(clean + noise, cfg.sample_rate_hz)


def synth_session(spec: ContourSpec, cfg: SynthConfig, n_sweeps: int, chunk: int = 500) -> SweepSet:
    """``n_sweeps`` sweeps sharing the clean signal, each with independent noise.

    Sweep ``i`` draws its noise from a generator seeded by ``(cfg.seed, i)``,
    so any sweep can be regenerated on its own. Polarity flags alternate.
    """
    if n_sweeps < 1:
        raise InvalidParam("n_sweeps must be >= 1")
    clean = clean_signal(spec, cfg)
    sweeps = np.tile(clean, (n_sweeps, 1))
    if not np.isposinf(cfg.snr_db_per_sweep):
        power = _noise_power(clean, spec, cfg)
        for start in range(0, n_sweeps, chunk):
            idx = range(start, min(start + chunk, n_sweeps))
            sweeps[start:start + len(idx)] += _noise(clean.size, cfg, idx, power)
    return SweepSet(sweeps, cfg.sample_rate_hz, alternating_polarity(n_sweeps))


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, seed=int(seed))

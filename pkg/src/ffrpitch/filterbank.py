"""Harmonic comb filters and the magnitude filterbank matrix.

Each candidate F0 on a linear grid gets a filter that is a plain sum of
``K`` unit cosines at the candidate and its harmonics. The filterbank matrix
stacks the zero-padded DFT magnitudes of those filters, one row per
candidate, on the same DFT geometry used for the response frames.

Cache file layout (little-endian)::

    offset  type      field
    0       8 bytes   magic b"FFRHASFB"
    8       uint16    format version (1)
    10      uint16    clamp flag (0/1)
    12      float64   sample_rate_hz
    20      uint32    frame_len
    24      uint32    fft_len
    28      float64   f0_min_hz
    36      float64   f0_max_hz
    44      float64   grid_step_hz
    52      uint32    K
    56      float64   clamp ceiling hz (0 when clamp is off)
    64      uint32    M (rows)
    68      uint32    N (columns)
    72      float64[M*N]  H, row-major
"""
from __future__ import annotations

import logging
import math
import struct
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FormatError, HarmonicAboveNyquist, InvalidParam
from .fileio import atomic_write_bytes
from .spectrum import DftGeometry, magnitude_frames

log = logging.getLogger(__name__)

CACHE_MAGIC = b"FFRHASFB"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<8sHHdIIdddIdII")


@dataclass(frozen=True)
class HasConfig:
    f0_min_hz: float = 80.0
    f0_max_hz: float = 500.0
    grid_step_hz: float = 1.0
    K: int = 2
    search_halfwidth_hz: float = 50.0
    window_ms: float = 50.0
    hop_ms: float = 10.0

    def __post_init__(self):
        if not self.f0_min_hz < self.f0_max_hz:
            raise InvalidParam("f0_min_hz must be < f0_max_hz")
        if not self.grid_step_hz > 0:
            raise InvalidParam("grid_step_hz must be > 0")
        if int(self.K) != self.K or self.K < 1:
            raise InvalidParam("K must be an integer >= 1")
        if not self.search_halfwidth_hz > 0:
            raise InvalidParam("search_halfwidth_hz must be > 0")
        if not (self.window_ms > 0 and self.hop_ms > 0):
            raise InvalidParam("window_ms and hop_ms must be > 0")

    @property
    def n_candidates(self) -> int:
        return int(math.floor((self.f0_max_hz - self.f0_min_hz) / self.grid_step_hz + 1e-9)) + 1

    def grid(self) -> np.ndarray:
        return self.f0_min_hz + np.arange(self.n_candidates) * self.grid_step_hz

    def with_k(self, K: int) -> "HasConfig":
        return replace(self, K=K)


@dataclass(frozen=True, eq=False)
class FilterBank:
    H: np.ndarray  # (M, N)
    grid_hz: np.ndarray
    K: int
    geometry: DftGeometry
    frame_len: int

    @property
    def shape(self):
        return self.H.shape


def _harmonics(f0_hz: float, K: int, sample_rate_hz: float, clamp_hz: Optional[float]) -> np.ndarray:
    ks = np.arange(1, K + 1)
    nyq = sample_rate_hz / 2.0
    if clamp_hz is None:
        if K * f0_hz >= nyq:
            raise HarmonicAboveNyquist(
                f"harmonic {K} of {f0_hz} Hz ({K * f0_hz} Hz) is at or above Nyquist ({nyq} Hz)"
            )
        return ks
    limit = min(nyq, clamp_hz)
    keep = ks[ks * f0_hz < limit]
    if keep.size < K:
        log.warning("%g Hz filter: dropping harmonics %s at/above %g Hz",
                    f0_hz, ks[keep.size:].tolist(), limit)
    return keep


def build_filter(
    f0_hz: float,
    K: int,
    frame_len: int,
    sample_rate_hz: float,
    clamp_hz: Optional[float] = None,
) -> np.ndarray:
    """``h(n) = sum_k cos(2 pi k f0 n / fs)`` for ``n = 0 .. frame_len-1``.

    With ``clamp_hz`` set, harmonics at or above ``min(fs/2, clamp_hz)`` are
    dropped (with a warning) instead of raising :class:`HarmonicAboveNyquist`.
    """
    if frame_len < 1:
        raise InvalidParam("frame_len must be >= 1")
    ks = _harmonics(f0_hz, K, sample_rate_hz, clamp_hz)
    n = np.arange(frame_len)
    phase = 2.0 * np.pi * f0_hz / sample_rate_hz * np.outer(ks, n)
    return np.cos(phase).sum(axis=0)


def build_filterbank(
    config: HasConfig,
    geometry: DftGeometry,
    frame_len: int,
    clamp_hz: Optional[float] = None,
) -> FilterBank:
    if geometry.fft_len < 2 * frame_len:
        raise InvalidParam(f"fft_len {geometry.fft_len} < 2 * frame_len ({frame_len})")
    grid = config.grid()
    filters = np.stack([
        build_filter(f, config.K, frame_len, geometry.sample_rate_hz, clamp_hz) for f in grid
    ])
    H = magnitude_frames(filters, geometry)
    H.setflags(write=False)
    grid.setflags(write=False)
    return FilterBank(H, grid, int(config.K), geometry, int(frame_len))


_bank_cache: dict = {}
_bank_lock = threading.Lock()


def get_filterbank(
    config: HasConfig, geometry: DftGeometry, frame_len: int, clamp_hz: Optional[float] = None
) -> FilterBank:
    """Memoised :func:`build_filterbank`; banks are read-only and shareable."""
    key = (
        config.f0_min_hz, config.f0_max_hz, config.grid_step_hz, config.K,
        geometry.fft_len, geometry.sample_rate_hz, frame_len, clamp_hz,
    )
    with _bank_lock:
        bank = _bank_cache.get(key)
    if bank is None:
        bank = build_filterbank(config, geometry, frame_len, clamp_hz)
        with _bank_lock:
            bank = _bank_cache.setdefault(key, bank)
    return bank


# -- cache file ---------------------------------------------------------------

def save_filterbank(path, bank: FilterBank, config: HasConfig, clamp_hz: Optional[float] = None) -> None:
    M, N = bank.H.shape
    head = _CACHE_HEADER.pack(
        CACHE_MAGIC, CACHE_VERSION, int(clamp_hz is not None),
        bank.geometry.sample_rate_hz, bank.frame_len, bank.geometry.fft_len,
        config.f0_min_hz, config.f0_max_hz, config.grid_step_hz, bank.K,
        float(clamp_hz or 0.0), M, N,
    )
    atomic_write_bytes(path, head + np.ascontiguousarray(bank.H, dtype="<f8").tobytes())


def load_filterbank(path) -> tuple[FilterBank, HasConfig, Optional[float]]:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _CACHE_HEADER.size:
        raise FormatError(path, "byte 0", "file shorter than filterbank header")
    (magic, version, clamp_flag, fs, L, fft_len, fmin, fmax, step, K,
     clamp_hz, M, N) = _CACHE_HEADER.unpack_from(raw, 0)
    if magic != CACHE_MAGIC:
        raise FormatError(path, "byte 0", f"bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise FormatError(path, "byte 8", f"unsupported version {version}")
    expected = _CACHE_HEADER.size + 8 * M * N
    if len(raw) != expected:
        raise FormatError(path, f"byte {_CACHE_HEADER.size}", f"expected {expected} bytes, got {len(raw)}")
    geometry = DftGeometry(fft_len, fs)
    if N != geometry.n_bins:
        raise FormatError(path, "byte 68", f"N={N} inconsistent with fft_len={fft_len}")
    config = HasConfig(f0_min_hz=fmin, f0_max_hz=fmax, grid_step_hz=step, K=K)
    if M != config.n_candidates:
        raise FormatError(path, "byte 64", f"M={M} inconsistent with grid ({config.n_candidates})")
    H = np.frombuffer(raw, dtype="<f8", offset=_CACHE_HEADER.size).reshape(M, N).astype(np.float64)
    H.setflags(write=False)
    grid = config.grid()
    grid.setflags(write=False)
    bank = FilterBank(H, grid, K, geometry, L)
    return bank, config, (clamp_hz if clamp_flag else None)


def cached_filterbank(
    cache_dir, config: HasConfig, geometry: DftGeometry, frame_len: int, clamp_hz: Optional[float] = None
) -> FilterBank:
    """Load a bank from ``cache_dir`` if a matching file exists, else build and store it."""
    cache_dir = Path(cache_dir)
    name = (
        f"hasfb_v{CACHE_VERSION}_fs{geometry.sample_rate_hz:.6f}_L{frame_len}_n{geometry.fft_len}"
        f"_{config.f0_min_hz:g}-{config.f0_max_hz:g}-{config.grid_step_hz:g}_K{config.K}"
        f"_c{clamp_hz or 0:g}.bin"
    )
    path = cache_dir / name
    if path.exists():
        try:
            bank, cfg, clamp = load_filterbank(path)
            if (bank.frame_len == frame_len and bank.geometry == geometry and clamp == clamp_hz
                    and cfg.grid_step_hz == config.grid_step_hz and bank.K == config.K
                    and cfg.f0_min_hz == config.f0_min_hz and cfg.f0_max_hz == config.f0_max_hz):
                return bank
        except FormatError as exc:
            log.warning("ignoring unreadable filterbank cache %s (%s)", path, exc)
    bank = get_filterbank(config, geometry, frame_len, clamp_hz)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_filterbank(path, bank, config, clamp_hz)
    return bank

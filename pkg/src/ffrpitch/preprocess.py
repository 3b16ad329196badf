"""Sweep averaging and zero-phase band-pass filtering.

Sweep matrix files
------------------
CSV (``.csv``)::

    n_sweeps,samples_per_sweep,sample_rate_hz
    3000,3771,5714.285714
    <sweep 0 samples, comma separated>
    <sweep 1 samples, comma separated>
    ...

Lines starting with ``#`` are ignored. Binary (any other suffix) is a
little-endian stream: ``uint32 n_sweeps``, ``uint32 samples_per_sweep``,
``float64 sample_rate_hz``, then ``n_sweeps * samples_per_sweep`` float64
samples in row-major order. In both formats sweep polarity is not stored;
it alternates +1, -1, +1, ... starting with the first sweep.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy import signal as sps

from .errors import FormatError, InvalidBand, InvalidCount, InvalidParam
from .fileio import atomic_write_bytes, atomic_write_text, comment_block, data_lines
from .signal_core import SampledSignal
from .wavio import read_wav

AverageMode = Literal["add_all", "polarity_add", "polarity_subtract"]

BUTTER_ORDER = 4
_BIN_HEADER = struct.Struct("<IId")


@dataclass(frozen=True)
class SweepSet:
    sweeps: np.ndarray  # (n_sweeps, samples_per_sweep)
    sample_rate_hz: float
    polarity: np.ndarray | None = None

    def __post_init__(self):
        sweeps = np.array(self.sweeps, dtype=np.float64, ndmin=2)
        if sweeps.ndim != 2 or sweeps.shape[0] < 1 or sweeps.shape[1] < 1:
            raise InvalidParam(f"sweeps must be a non-empty 2-D matrix, got shape {sweeps.shape}")
        if not self.sample_rate_hz > 0:
            raise InvalidParam("sample_rate_hz must be > 0")
        if self.polarity is None:
            pol = alternating_polarity(sweeps.shape[0])
        else:
            pol = np.asarray(self.polarity, dtype=np.int8).ravel()
            if pol.size != sweeps.shape[0] or not np.all(np.isin(pol, (-1, 1))):
                raise InvalidParam("polarity must hold one +1/-1 flag per sweep")
        sweeps.setflags(write=False)
        pol = pol.copy()
        pol.setflags(write=False)
        object.__setattr__(self, "sweeps", sweeps)
        object.__setattr__(self, "polarity", pol)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_sweeps(self) -> int:
        return self.sweeps.shape[0]

    @property
    def samples_per_sweep(self) -> int:
        return self.sweeps.shape[1]


def alternating_polarity(n: int) -> np.ndarray:
    pol = np.ones(n, dtype=np.int8)
    pol[1::2] = -1
    return pol


def average_sweeps(sweeps: SweepSet, n: int | None = None, mode: AverageMode = "add_all") -> SampledSignal:
    """Element-wise mean of the first ``n`` sweeps.

    ``add_all`` and ``polarity_add`` both take the raw mean (the latter name
    just makes the envelope-emphasis intent explicit); ``polarity_subtract``
    negates the -1 polarity sweeps first.
    """
    if n is None:
        n = sweeps.n_sweeps
    if not 1 <= n <= sweeps.n_sweeps:
        raise InvalidCount(f"n must be in [1, {sweeps.n_sweeps}], got {n}")
    block = sweeps.sweeps[:n]
    if mode in ("add_all", "polarity_add"):
        avg = block.mean(axis=0)
    elif mode == "polarity_subtract":
        avg = (block * sweeps.polarity[:n, None]).mean(axis=0)
    else:
        raise InvalidParam(f"unknown averaging mode {mode!r}")
    return SampledSignal(avg, sweeps.sample_rate_hz)


def cumulative_averages(sweeps: SweepSet, counts: Sequence[int]) -> dict[int, SampledSignal]:
    """Raw means of the first ``n`` sweeps for each ``n`` in ``counts``, in one pass."""
    counts = sorted(set(int(c) for c in counts))
    if counts and not (1 <= counts[0] and counts[-1] <= sweeps.n_sweeps):
        raise InvalidCount(f"counts must lie in [1, {sweeps.n_sweeps}]")
    out = {}
    acc = np.zeros(sweeps.samples_per_sweep)
    done = 0
    for c in counts:
        acc += sweeps.sweeps[done:c].sum(axis=0)
        done = c
        out[c] = SampledSignal(acc / c, sweeps.sample_rate_hz)
    return out


def design_bandpass(low_hz: float, high_hz: float, sample_rate_hz: float, order: int = BUTTER_ORDER) -> np.ndarray:
    if not (0 < low_hz < high_hz < sample_rate_hz / 2):
        raise InvalidBand(
            f"need 0 < low ({low_hz}) < high ({high_hz}) < Nyquist ({sample_rate_hz / 2})"
        )
    return sps.butter(order, [low_hz, high_hz], btype="bandpass", output="sos", fs=sample_rate_hz)


def bandpass(signal: SampledSignal, low_hz: float, high_hz: float, order: int = BUTTER_ORDER) -> SampledSignal:
    """Zero-phase Butterworth band-pass (forward-backward).

    Edges are reflect-padded by three times the number of filter poles.
    """
    sos = design_bandpass(low_hz, high_hz, signal.sample_rate_hz, order)
    n_poles = 2 * order
    padlen = min(3 * n_poles, len(signal) - 1)
    out = sps.sosfiltfilt(sos, signal.samples, padtype="even", padlen=padlen)
    return SampledSignal(out, signal.sample_rate_hz)


def bandpass_low_cutoff(min_stimulus_f0_hz: float, margin_hz: float = 20.0) -> float:
    return min_stimulus_f0_hz - margin_hz


# -- sweep files -------------------------------------------------------------

def write_sweeps(path, sweeps: SweepSet, meta: dict | None = None) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        buf = io.StringIO()
        buf.write(comment_block(meta))
        buf.write("n_sweeps,samples_per_sweep,sample_rate_hz\n")
        buf.write(f"{sweeps.n_sweeps},{sweeps.samples_per_sweep},{sweeps.sample_rate_hz!r}\n")
        for row in sweeps.sweeps:
            buf.write(",".join(repr(float(v)) for v in row))
            buf.write("\n")
        atomic_write_text(path, buf.getvalue())
    else:
        head = _BIN_HEADER.pack(sweeps.n_sweeps, sweeps.samples_per_sweep, sweeps.sample_rate_hz)
        atomic_write_bytes(path, head + sweeps.sweeps.astype("<f8").tobytes())


def read_sweeps(path) -> SweepSet:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return read_wav_sweeps([path])
    if path.suffix.lower() == ".csv":
        return _read_sweeps_csv(path)
    return _read_sweeps_bin(path)


def _read_sweeps_csv(path: Path) -> SweepSet:
    with open(path, "r", encoding="utf-8") as fh:
        rows = data_lines(fh)
        try:
            lineno, header = next(rows)
            if header.replace(" ", "") != "n_sweeps,samples_per_sweep,sample_rate_hz":
                raise FormatError(path, f"line {lineno}", f"unexpected header {header!r}")
            lineno, dims = next(rows)
        except StopIteration:
            raise FormatError(path, "line 1", "missing header lines") from None
        try:
            n_s, n_t, fs = dims.split(",")
            n_s, n_t, fs = int(n_s), int(n_t), float(fs)
        except ValueError:
            raise FormatError(path, f"line {lineno}", f"bad dimension line {dims!r}") from None
        data = np.empty((n_s, n_t))
        i = 0
        for lineno, line in rows:
            if i >= n_s:
                raise FormatError(path, f"line {lineno}", f"more than {n_s} sweep rows")
            try:
                row = np.array([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise FormatError(path, f"line {lineno}", str(exc)) from None
            if row.size != n_t:
                raise FormatError(path, f"line {lineno}", f"expected {n_t} samples, got {row.size}")
            data[i] = row
            i += 1
    if i != n_s:
        raise FormatError(path, "end of file", f"expected {n_s} sweep rows, got {i}")
    return SweepSet(data, fs)


def _read_sweeps_bin(path: Path) -> SweepSet:
    raw = path.read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise FormatError(path, "byte 0", f"file shorter than the {_BIN_HEADER.size}-byte header")
    n_s, n_t, fs = _BIN_HEADER.unpack_from(raw, 0)
    expected = _BIN_HEADER.size + 8 * n_s * n_t
    if len(raw) != expected:
        raise FormatError(
            path, f"byte {min(len(raw), expected)}",
            f"size {len(raw)} does not match header ({n_s} x {n_t} samples -> {expected} bytes)",
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size).reshape(n_s, n_t)
    return SweepSet(data, fs)


def read_wav_sweeps(paths: Sequence) -> SweepSet:
    """One mono WAV file per sweep; all files must share rate and length."""
    rows, fs = [], None
    for p in paths:
        sig = read_wav(p)
        if fs is None:
            fs = sig.sample_rate_hz
        elif sig.sample_rate_hz != fs:
            raise FormatError(p, "fmt chunk", f"sample rate {sig.sample_rate_hz} differs from {fs}")
        if rows and len(sig) != rows[0].size:
            raise FormatError(p, "data chunk", f"{len(sig)} samples, expected {rows[0].size}")
        rows.append(sig.samples)
    if not rows:
        raise InvalidParam("no sweep files given")
    return SweepSet(np.vstack(rows), fs)

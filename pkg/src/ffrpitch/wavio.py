"""Mono WAV ingestion: integer PCM 16/24/32-bit and 32-bit float.

Decoding is delegated to :mod:`scipy.io.wavfile`; a light RIFF walk runs
first so malformed files are reported with a byte offset.
"""
from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import FormatError
from .fileio import atomic_write_bytes

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE


def _check_riff(path: Path, raw: bytes) -> None:
    if len(raw) < 12:
        raise FormatError(path, "byte 0", "file too short for a RIFF header")
    if raw[0:4] not in (b"RIFF", b"RIFX"):
        raise FormatError(path, "byte 0", f"expected 'RIFF', found {raw[0:4]!r}")
    if raw[8:12] != b"WAVE":
        raise FormatError(path, "byte 8", f"expected 'WAVE', found {raw[8:12]!r}")
    pos, fmt, have_data = 12, None, False
    while pos + 8 <= len(raw):
        cid, size = raw[pos:pos + 4], struct.unpack_from("<I", raw, pos + 4)[0]
        if cid == b"fmt ":
            if size < 16 or pos + 8 + 16 > len(raw):
                raise FormatError(path, f"byte {pos}", "truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", raw, pos + 8)
        elif cid == b"data":
            have_data = True
            if fmt is None:
                raise FormatError(path, f"byte {pos}", "data chunk before fmt chunk")
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise FormatError(path, "byte 12", "no fmt chunk")
    if not have_data:
        raise FormatError(path, f"byte {len(raw)}", "no data chunk")
    tag, channels, _, _, _, bits = fmt
    if channels != 1:
        raise FormatError(
            path, "fmt chunk",
            f"{channels} channels; only mono is supported (extract one channel, e.g. the Cz-A1/A2 derivation, first)",
        )
    ok = (tag in (_PCM, _EXTENSIBLE) and bits in (16, 24, 32)) or (tag in (_FLOAT, _EXTENSIBLE) and bits == 32)
    if not ok:
        raise FormatError(path, "fmt chunk", f"unsupported encoding (format tag {tag}, {bits} bits)")


def read_wav(path):
    """Read a mono WAV file as a float :class:`SampledSignal` scaled to [-1, 1)."""
    from .signal_core import SampledSignal

    path = Path(path)
    raw = path.read_bytes()
    _check_riff(path, raw)
    try:
        fs, data = wavfile.read(io.BytesIO(raw))
    except ValueError as exc:
        raise FormatError(path, "data chunk", str(exc)) from None
    if data.ndim != 1:
        raise FormatError(path, "fmt chunk", "only mono WAV is supported")
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        # 24-bit data comes back left-justified in int32
        x = data / 2147483648.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        x = data.astype(np.float64)
    else:
        raise FormatError(path, "fmt chunk", f"unsupported sample type {data.dtype}")
    return SampledSignal(x, float(fs))


def write_wav(path, signal, sample_rate_hz: int | None = None) -> None:
    """Write a signal as 32-bit float mono WAV (rate rounded to integer Hz)."""
    fs = int(round(sample_rate_hz if sample_rate_hz is not None else signal.sample_rate_hz))
    buf = io.BytesIO()
    wavfile.write(buf, fs, np.asarray(signal.samples, dtype=np.float32))
    atomic_write_bytes(path, buf.getvalue())

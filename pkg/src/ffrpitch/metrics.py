"""Contour-pair error metrics and the paired t-test.

A frame counts as a gross pitch error when the estimate deviates from the
reference by strictly more than ``threshold * reference`` (20% by default).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import stats

from .errors import DegenerateVariance, InvalidParam, LengthMismatch, TimeMismatch
from .fileio import atomic_write_text, comment_block
from .signal_core import F0Contour

TIME_TOL_S = 1e-6
METRICS_HEADER = "condition,method,n_sweeps,rmse_hz,rmse20_hz,gpe_percent"


@dataclass(frozen=True)
class MetricsReport:
    rmse_hz: float
    rmse20_hz: Optional[float]  # None when every frame is gross
    gpe_percent: float
    n_frames: int
    n_gross: int


def _pair(est: F0Contour, ref: F0Contour) -> tuple[np.ndarray, np.ndarray]:
    if len(est) != len(ref):
        raise LengthMismatch(f"estimate has {len(est)} frames, reference {len(ref)}")
    if len(est) == 0:
        raise LengthMismatch("empty contours")
    dt = np.abs(est.times_s - ref.times_s)
    if np.any(dt > TIME_TOL_S):
        i = int(np.argmax(dt))
        raise TimeMismatch(f"frame {i}: estimate at {est.times_s[i]} s, reference at {ref.times_s[i]} s")
    return est.f0_hz, ref.f0_hz


def rmse(est: F0Contour, ref: F0Contour) -> float:
    e, r = _pair(est, ref)
    return float(np.sqrt(np.mean((e - r) ** 2)))


def gpe_and_rmse20(est: F0Contour, ref: F0Contour, threshold: float = 0.20) -> MetricsReport:
    e, r = _pair(est, ref)
    err = e - r
    gross = np.abs(err) > threshold * r
    n, n_gross = err.size, int(gross.sum())
    total = float(np.sqrt(np.mean(err ** 2)))
    if n_gross == 0:
        r20 = total
    elif n_gross == n:
        r20 = None
    else:
        r20 = float(np.sqrt(np.mean(err[~gross] ** 2)))
    return MetricsReport(total, r20, 100.0 * n_gross / n, n, n_gross)


def paired_t_test(a, b) -> tuple[float, float, int]:
    """Two-sided paired t-test on ``d = a - b``. Returns ``(t, p, df)``."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.size} vs {b.size} samples")
    if a.size < 2:
        raise InvalidParam("need at least 2 pairs")
    d = a - b
    sd = d.std(ddof=1)
    if not sd > 1e-12 * max(1.0, float(np.abs(d).max())):
        raise DegenerateVariance("all paired differences are identical")
    df = d.size - 1
    t = float(d.mean() / (sd / math.sqrt(d.size)))
    p = float(2.0 * stats.t.sf(abs(t), df))
    return t, p, df


def format_metrics_row(condition: str, method: str, n_sweeps: int, rep: MetricsReport) -> str:
    r20 = "" if rep.rmse20_hz is None else f"{rep.rmse20_hz:.6f}"
    return f"{condition},{method},{n_sweeps},{rep.rmse_hz:.6f},{r20},{rep.gpe_percent:.6f}"


def format_metrics_csv(rows: Iterable[tuple[str, str, int, MetricsReport]], meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(comment_block(meta))
    buf.write(METRICS_HEADER + "\n")
    for row in rows:
        buf.write(format_metrics_row(*row) + "\n")
    return buf.getvalue()


def write_metrics_csv(path, rows, meta: dict | None = None) -> None:
    atomic_write_text(path, format_metrics_csv(rows, meta))

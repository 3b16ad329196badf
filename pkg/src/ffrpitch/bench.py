"""RMSE-versus-sweep-count benchmark on synthetic sessions.

Each trial synthesises one session with the largest requested sweep count
and evaluates every method on the running averages of its first ``n``
sweeps, mirroring how recorded sessions are analysed at increasing
averaging depth.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateVariance
from .fileio import comment_block
from .metrics import MetricsReport, format_metrics_row, gpe_and_rmse20, paired_t_test, METRICS_HEADER
from .pipeline import METHODS, PipelineConfig, track_methods
from .preprocess import cumulative_averages
from .synth import ContourSpec, SynthConfig, contour_from_spec, synth_session

DEFAULT_SWEEP_COUNTS = (100, 300, 500, 1000, 2000, 3000)
T_TEST_PAIRS = (("has_pr", "acf"), ("has_pr", "has_ht"), ("has_ht", "acf"))


@dataclass(frozen=True)
class BenchSetup:
    spec: ContourSpec
    synth: SynthConfig
    pipeline: PipelineConfig
    sweep_counts: tuple[int, ...] = DEFAULT_SWEEP_COUNTS
    methods: tuple[str, ...] = METHODS
    condition: str = ""


@dataclass
class BenchResult:
    setup: BenchSetup
    # reports[trial][n_sweeps][method]
    reports: list[dict[int, dict[str, MetricsReport]]]

    def rmse(self, method: str, n_sweeps: int) -> np.ndarray:
        return np.array([t[n_sweeps][method].rmse_hz for t in self.reports])

    def mean_report(self, method: str, n_sweeps: int) -> MetricsReport:
        reps = [t[n_sweeps][method] for t in self.reports]
        r20 = [r.rmse20_hz for r in reps if r.rmse20_hz is not None]
        return MetricsReport(
            float(np.mean([r.rmse_hz for r in reps])),
            float(np.mean(r20)) if r20 else None,
            float(np.mean([r.gpe_percent for r in reps])),
            int(round(np.mean([r.n_frames for r in reps]))),
            int(round(np.mean([r.n_gross for r in reps]))),
        )

    def t_tests(self, pairs=T_TEST_PAIRS) -> list[tuple[int, str, str, float, float, int]]:
        rows = []
        if len(self.reports) < 2:
            return rows
        for n in self.setup.sweep_counts:
            for a, b in pairs:
                if a not in self.setup.methods or b not in self.setup.methods:
                    continue
                try:
                    t, p, df = paired_t_test(self.rmse(a, n), self.rmse(b, n))
                except DegenerateVariance:
                    t, p, df = math.nan, math.nan, len(self.reports) - 1
                rows.append((n, a, b, t, p, df))
        return rows


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


def run_trial(setup: BenchSetup, seed: int, trial: int) -> dict[int, dict[str, MetricsReport]]:
    cfg = replace(setup.synth, seed=trial_seed(seed, trial))
    truth = contour_from_spec(setup.spec, setup.pipeline.has.window_ms, setup.pipeline.has.hop_ms)
    session = synth_session(setup.spec, cfg, max(setup.sweep_counts))
    averages = cumulative_averages(session, setup.sweep_counts)
    del session
    out = {}
    for n in setup.sweep_counts:
        contours = track_methods(averages[n], truth, setup.pipeline, setup.methods)
        out[n] = {m: gpe_and_rmse20(c, truth) for m, c in contours.items()}
    return out


def _run_trial_args(args):
    return run_trial(*args)


def run_benchmark(setup: BenchSetup, trials: int, seed: int = 0, workers: int = 1) -> BenchResult:
    """Run ``trials`` independent synthetic sessions; results are ordered by trial index."""
    jobs = [(setup, seed, t) for t in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_trial_args, jobs))
    else:
        reports = [run_trial(*j) for j in jobs]
    return BenchResult(setup, reports)


def format_bench_metrics(result: BenchResult, meta: dict | None = None) -> str:
    """Mean metrics over trials, one row per (sweep count, method)."""
    buf = io.StringIO()
    buf.write(comment_block(meta))
    buf.write(METRICS_HEADER + "\n")
    s = result.setup
    for n in s.sweep_counts:
        for m in s.methods:
            buf.write(format_metrics_row(s.condition, m, n, result.mean_report(m, n)) + "\n")
    return buf.getvalue()


def format_bench_trials(result: BenchResult, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(comment_block(meta))
    buf.write("trial," + METRICS_HEADER + "\n")
    s = result.setup
    for t, rep in enumerate(result.reports):
        for n in s.sweep_counts:
            for m in s.methods:
                buf.write(f"{t}," + format_metrics_row(s.condition, m, n, rep[n][m]) + "\n")
    return buf.getvalue()


def format_bench_ttests(result: BenchResult, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(comment_block(meta))
    buf.write("condition,n_sweeps,method_a,method_b,mean_rmse_a,mean_rmse_b,t,p_two_sided,df\n")
    for n, a, b, t, p, df in result.t_tests():
        ma, mb = result.rmse(a, n).mean(), result.rmse(b, n).mean()
        buf.write(f"{result.setup.condition},{n},{a},{b},{ma:.6f},{mb:.6f},{t:.6f},{p:.6g},{df}\n")
    return buf.getvalue()

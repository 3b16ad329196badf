"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the report lines.
"""
import math
import time

import numpy as np
import pytest

from ffrpitch.acf import acf_f0
from ffrpitch.bench import BenchSetup, run_benchmark
from ffrpitch.cli import main
from ffrpitch.filterbank import HasConfig
from ffrpitch.has import (
    SummationVector,
    bank_for,
    detect_peaks,
    estimate_frames,
    harmonic_summation,
    prominences,
    select_f0,
)
from ffrpitch.metrics import gpe_and_rmse20, paired_t_test, rmse
from ffrpitch.pipeline import PipelineConfig
from ffrpitch.preprocess import cumulative_averages
from ffrpitch.signal_core import F0Contour
from ffrpitch.spectrum import MagnitudeSpectrum
from ffrpitch.synth import PRESETS, REFERENCE_FS, SynthConfig, clean_signal, synth_session

from oracles import longdouble_harmonic_summation

FS = REFERENCE_FS
L = 286


def report(n, ok, detail, t0):
    print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail} ({time.perf_counter() - t0:.1f} s)")
    assert ok, detail


@pytest.fixture(scope="module")
def bank():
    return bank_for(HasConfig(), FS)


# 1 ---------------------------------------------------------------------------

def test_c1_summation_matches_oracle(bank):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    N = bank.geometry.n_bins
    spectra = rng.random((100, N)) * rng.choice([1e-3, 1.0, 1e3], size=(100, 1))
    got = np.stack([harmonic_summation(MagnitudeSpectrum(s, bank.geometry), bank).y for s in spectra])
    ref = longdouble_harmonic_summation(spectra, bank.H)
    rel = float(np.max(np.abs(got - ref) / np.abs(ref)))
    elapsed = time.perf_counter() - t0
    report(1, bank.H.shape == (421, 4096) and rel <= 1e-9 and elapsed < 10,
           f"100 spectra, M=421, N=4096, max rel err {rel:.2e}", t0)


# 2 ---------------------------------------------------------------------------

def test_c2_clean_signal_recovery(bank):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    f0s = rng.integers(90, 451, 60).astype(float)
    n = np.arange(L) / FS
    frames = np.array([sum(0.7 ** k * np.cos(2 * np.pi * (k + 1) * f0 * n + ph)
                           for k, ph in enumerate(rng.uniform(0, 2 * np.pi, 3))) for f0 in f0s])
    anchors = f0s  # clean scenario: the stimulus F0 is the true F0
    has = estimate_frames(frames, anchors, HasConfig(), bank, ("PR",))["PR"]
    err_has = max(abs(e.f0_hz - f) for e, f in zip(has, f0s))
    err_acf = max(abs(acf_f0(x, a, 50, FS).f0_hz - f) for x, a, f in zip(frames, anchors, f0s))
    report(2, err_has <= 1 and err_acf <= 2 and time.perf_counter() - t0 < 10,
           f"60 F0s: HAS-PR max err {err_has:.3f} Hz, ACF max err {err_acf:.3f} Hz", t0)


# 3 ---------------------------------------------------------------------------

def test_c3_prominence_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(1000):
        # dyadic values keep offsets and scalings exact in floating point
        y = rng.integers(0, 4096, 80) / 1024.0
        peaks = detect_peaks(y)
        if peaks.size == 0:
            continue
        base = prominences(y, peaks)
        ok &= np.array_equal(prominences(y + 3.5, peaks), base)
        ok &= np.argmax(prominences(4.0 * y, peaks)) == np.argmax(base)
        ok &= np.argmax(prominences(0.37 * y, peaks)) == np.argmax(base)
    hand = prominences(np.array([0, 3, 1, 2, 0.0]), np.array([1, 3])).tolist()
    report(3, bool(ok) and hand == [3, 1] and time.perf_counter() - t0 < 1,
           f"1000 vectors invariant={bool(ok)}, hand example {hand}", t0)


# 4 ---------------------------------------------------------------------------

def test_c4_two_peak_scenario():
    t0 = time.perf_counter()
    grid = np.arange(80.0, 501.0)
    knots = [(80, 3.8), (88, 5.0), (115, 1.8), (140, 4.8), (200, 1.0), (300, 10.0), (500, 0.5)]
    xs, ys = zip(*knots)
    y = SummationVector(np.interp(grid, xs, ys), grid)
    peaks = detect_peaks(y)
    pr = select_f0(y, peaks, 120, 50, "PR").f0_hz
    ht = select_f0(y, peaks, 120, 50, "HT").f0_hz
    report(4, pr == 140 and ht == 88, f"PR -> {pr:g} Hz, HT -> {ht:g} Hz", t0)


# 5 and 9 ---------------------------------------------------------------------

C5_COUNTS = (100, 500, 1000, 3000)
C5_ARGV = ["bench", "--preset", "FH", "--noise", "pink", "--snr-db", "-20", "--trials", "20",
           "--sweep-counts", ",".join(map(str, C5_COUNTS)), "--seed", "2024"]


@pytest.fixture(scope="module")
def fh_bench(tmp_path_factory):
    t0 = time.perf_counter()
    a = tmp_path_factory.mktemp("bench_a")
    assert main(C5_ARGV + ["--out-dir", str(a)]) == 0
    t_first = time.perf_counter() - t0
    b = tmp_path_factory.mktemp("bench_b")
    assert main(C5_ARGV + ["--out-dir", str(b)]) == 0
    return a, b, t_first


def _trial_means(path):
    rows = [l.split(",") for l in path.read_text().splitlines() if l and not l.startswith("#")][1:]
    acc = {}
    for trial, _cond, method, n, r, *_ in rows:
        acc.setdefault((method, int(n)), []).append(float(r))
    assert all(len(v) == 20 for v in acc.values())
    return {k: float(np.mean(v)) for k, v in acc.items()}


@pytest.mark.slow
def test_c5_rmse_vs_sweeps_trend(fh_bench):
    t0 = time.perf_counter()
    a, _, t_run = fh_bench
    m = _trial_means(a / "bench_trials.csv")
    decreasing = all(m[(meth, 100)] > m[(meth, 3000)] for meth in ("has_pr", "has_ht", "acf"))
    pr_le_acf = all(m[("has_pr", n)] <= m[("acf", n)] for n in C5_COUNTS)
    pr_le_ht = m[("has_pr", 100)] <= m[("has_ht", 100)]
    table = "; ".join(f"n={n}: PR {m[('has_pr', n)]:.3f} HT {m[('has_ht', n)]:.3f} ACF {m[('acf', n)]:.3f}"
                      for n in C5_COUNTS)
    report(5, decreasing and pr_le_acf and pr_le_ht and t_run < 300,
           f"(a) {decreasing} (b) {pr_le_acf} (c) {pr_le_ht}; {table}; bench {t_run:.0f} s", t0)


@pytest.mark.slow
def test_c9_bench_is_deterministic(fh_bench):
    t0 = time.perf_counter()
    a, b, _ = fh_bench
    names = ("bench_metrics.csv", "bench_trials.csv", "bench_ttests.csv")
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    report(9, same, f"two seeded runs byte-identical across {len(names)} CSVs", t0)


# 6 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_c6_more_harmonics_help_low_f0():
    t0 = time.perf_counter()
    synth = SynthConfig(K_signal=4, snr_db_per_sweep=-20.0, noise_kind="pink", lead_in_ms=50.0, tail_ms=50.0)
    rm = {}
    for K in (4, 1):
        setup = BenchSetup(PRESETS["MS"], synth, PipelineConfig(has=HasConfig(K=K)), (100,), ("has_pr",), "MS")
        rm[K] = run_benchmark(setup, 20, seed=6).rmse("has_pr", 100)
    t, p, _ = paired_t_test(rm[4], rm[1])
    elapsed = time.perf_counter() - t0
    ok = rm[4].mean() <= rm[1].mean() and p < 0.05 and elapsed < 120
    report(6, ok, f"MS, 100 sweeps: K=4 {rm[4].mean():.3f} Hz vs K=1 {rm[1].mean():.3f} Hz, "
                  f"t={t:.2f}, p={p:.2g}", t0)


# 7 ---------------------------------------------------------------------------

def _c(values):
    values = np.asarray(values, dtype=float)
    return F0Contour(0.025 + 0.01 * np.arange(values.size), values)


def test_c7_metrics_exactness():
    t0 = time.perf_counter()
    r1 = rmse(_c([103, 204]), _c([100, 200]))
    rep = gpe_and_rmse20(_c([110, 300]), _c([100, 100]))
    rng = np.random.default_rng(7)
    prop = True
    for _ in range(500):
        ref = rng.uniform(80, 500, 30)
        est = ref * (1 + rng.uniform(-0.2, 0.2, 30) * 0.99)
        r = gpe_and_rmse20(_c(est), _c(ref))
        prop &= r.gpe_percent == 0 and r.rmse20_hz == r.rmse_hz
    ok = (abs(r1 - 3.5355) <= 1e-3 and rep.gpe_percent == 50 and abs(rep.rmse20_hz - 10) <= 1e-3
          and abs(rep.rmse_hz - math.sqrt((100 + 40000) / 2)) <= 1e-3 and prop
          and time.perf_counter() - t0 < 1)
    report(7, ok, f"rmse {r1:.4f}; GPE {rep.gpe_percent:g}%, RMSE20 {rep.rmse20_hz:.4f}, "
                  f"RMSE {rep.rmse_hz:.4f} (= sqrt(20050)); rmse20==rmse when GPE=0: {prop}", t0)


@pytest.mark.xfail(strict=True, reason="sqrt((100 + 40000) / 2) is 141.598, not the quoted 141.77")
def test_c7_quoted_rmse_literal():
    rep = gpe_and_rmse20(_c([110, 300]), _c([100, 100]))
    assert abs(rep.rmse_hz - 141.77) <= 1e-3


# 8 ---------------------------------------------------------------------------

def test_c8_averaging_gain():
    t0 = time.perf_counter()
    spec = PRESETS["MH"]
    counts = (4, 16, 100)
    gains = {n: [] for n in counts}
    for trial in range(20):
        cfg = SynthConfig(snr_db_per_sweep=-20.0, noise_kind="pink", seed=800 + trial)
        clean = clean_signal(spec, cfg)
        p_sig = np.mean(clean ** 2)
        session = synth_session(spec, cfg, max(counts))
        single = 10 * np.log10(p_sig / np.mean((session.sweeps[0] - clean) ** 2))
        for n, avg in cumulative_averages(session, counts).items():
            gains[n].append(10 * np.log10(p_sig / np.mean((avg.samples - clean) ** 2)) - single)
    dev = {n: float(np.mean(g)) - 10 * np.log10(n) for n, g in gains.items()}
    ok = all(abs(d) <= 1 for d in dev.values()) and time.perf_counter() - t0 < 30
    report(8, ok, "gain minus 10*log10(n): " + ", ".join(f"n={n} {d:+.2f} dB" for n, d in dev.items()), t0)

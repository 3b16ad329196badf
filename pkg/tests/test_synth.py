import time

import numpy as np
import pytest
from scipy import signal as sps

from ffrpitch.errors import AliasedHarmonic, InvalidSpec
from ffrpitch.preprocess import average_sweeps
from ffrpitch.spectrum import choose_dft_length, magnitude_spectrum
from ffrpitch.synth import (
    PRESETS,
    REFERENCE_FS,
    ContourSpec,
    SynthConfig,
    clean_signal,
    contour_from_spec,
    pink_shape,
    synth_session,
    synth_sweep,
)

FS = REFERENCE_FS


def _snr_db(sig, noise):
    return 10 * np.log10(np.mean(sig ** 2) / np.mean(noise ** 2))


def test_linear_interpolation_at_frame_centre():
    spec = ContourSpec(((0, 100.0), (1, 200.0)), 1.0)
    assert spec.f0_at(0.5) == pytest.approx(150.0)
    # a 50 ms window with 10 ms hop centres frames at 0.025 + 0.01 i
    c = contour_from_spec(spec)
    np.testing.assert_allclose(c.f0_hz, 100 + 100 * c.times_s, rtol=1e-12)


def test_constant_and_falling_contours():
    c = contour_from_spec(ContourSpec(((0, 111.0), (0.3, 111.0)), 0.3))
    assert np.all(c.f0_hz == 111.0)
    ms = contour_from_spec(PRESETS["MS"])
    assert np.all(np.diff(ms.f0_hz) < 0)
    assert 85 <= ms.f0_hz.min() and ms.f0_hz.max() <= 111


def test_invalid_specs():
    with pytest.raises(InvalidSpec):
        ContourSpec(((0, 100.0),), 1.0)
    with pytest.raises(InvalidSpec):
        ContourSpec(((0, 100.0), (0, 120.0)), 1.0)
    with pytest.raises(InvalidSpec):
        ContourSpec(((0, 60.0), (1, 120.0)), 1.0)
    with pytest.raises(InvalidSpec):
        contour_from_spec(ContourSpec(((0, 100.0), (0.01, 100.0)), 0.01))


def test_aliased_harmonic():
    with pytest.raises(AliasedHarmonic):
        clean_signal(PRESETS["FH"], SynthConfig(K_signal=7))


def test_pure_cosine_spectrum_peak():
    spec = ContourSpec(((0, 100.0), (0.2, 100.0)), 0.2)
    x = synth_sweep(spec, SynthConfig(K_signal=1)).samples
    np.testing.assert_allclose(x, np.cos(2 * np.pi * 100 * np.arange(x.size) / FS), atol=1e-9)
    g = choose_dft_length(FS, x.size)
    mags = magnitude_spectrum(x, g).mags
    assert np.argmax(mags) == g.bin_of(100.0)


@pytest.mark.parametrize("kind", ["white", "pink"])
def test_per_sweep_snr(kind):
    spec = PRESETS["MH"]
    cfg = SynthConfig(snr_db_per_sweep=-20.0, noise_kind=kind, seed=4)
    clean = clean_signal(spec, cfg)
    for i in range(5):
        noisy = synth_sweep(spec, cfg, i).samples
        assert abs(_snr_db(clean, noisy - clean) + 20) <= 0.5


def test_determinism_and_independence():
    spec = PRESETS["FS"]
    cfg = SynthConfig(snr_db_per_sweep=-10.0, seed=7)
    a = synth_session(spec, cfg, 6)
    b = synth_session(spec, cfg, 6, chunk=4)
    assert a.sweeps.tobytes() == b.sweeps.tobytes()
    assert synth_sweep(spec, cfg, 3).samples.tobytes() == a.sweeps[3].tobytes()
    assert not np.array_equal(a.sweeps[0], a.sweeps[1])
    np.testing.assert_array_equal(a.polarity, [1, -1, 1, -1, 1, -1])


def test_noiseless_session_sweeps_identical():
    s = synth_session(PRESETS["MS"], SynthConfig(), 2)
    np.testing.assert_array_equal(s.sweeps[0], s.sweeps[1])


def test_hundred_sweep_average_reaches_0db():
    spec = PRESETS["MH"]
    cfg = SynthConfig(snr_db_per_sweep=-20.0, seed=11)
    clean = clean_signal(spec, cfg)
    avg = average_sweeps(synth_session(spec, cfg, 100)).samples
    assert abs(_snr_db(clean, avg - clean)) <= 1.0


@pytest.mark.slow
def test_3000_sweeps_under_30s():
    spec = ContourSpec(((0, 200.0), (0.6, 300.0)), 0.6)
    t0 = time.perf_counter()
    s = synth_session(spec, SynthConfig(snr_db_per_sweep=-20.0, noise_kind="pink"), 3000)
    assert time.perf_counter() - t0 < 30
    assert s.sweeps.shape == (3000, round(0.6 * FS))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_phase_continuity_slope_bound(name):
    spec = PRESETS[name]
    cfg = SynthConfig()
    x = clean_signal(spec, cfg)
    ks = np.arange(1, cfg.K_signal + 1)
    bound = np.sum(cfg.amplitudes() * 2 * np.pi * ks * spec.f0_max / FS)
    assert np.abs(np.diff(x)).max() <= bound


def test_lead_in_and_tail_are_silent():
    cfg = SynthConfig(lead_in_ms=40, tail_ms=20)
    x = clean_signal(PRESETS["MS"], cfg)
    lead = round(0.04 * FS)
    assert x.size == lead + round(0.56 * FS) + round(0.02 * FS)
    assert not x[:lead].any() and not x[-round(0.02 * FS):].any()
    assert x[lead] == pytest.approx(cfg.amplitudes().sum())


def test_pink_noise_slope():
    rng = np.random.default_rng(0)
    x = pink_shape(rng.standard_normal((8, 2 ** 16)), FS)
    f, p = sps.welch(x, FS, nperseg=4096, axis=-1)
    p = p.mean(axis=0)
    band = (f >= 100) & (f <= 2000)
    slope = np.polyfit(np.log10(f[band]), np.log10(p[band]), 1)[0]
    assert abs(slope + 1) <= 0.2

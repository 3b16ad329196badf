import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffrpitch.errors import DegenerateVariance, LengthMismatch, TimeMismatch
from ffrpitch.metrics import (
    METRICS_HEADER,
    format_metrics_csv,
    gpe_and_rmse20,
    paired_t_test,
    rmse,
)
from ffrpitch.signal_core import F0Contour

from oracles import rmse_by_hand, t_two_sided_p_by_quadrature


def C(values, times=None):
    values = np.asarray(values, dtype=float)
    times = np.arange(values.size) * 0.01 + 0.025 if times is None else times
    return F0Contour(times, values)


def test_rmse_unit_value():
    assert rmse(C([103, 204]), C([100, 200])) == pytest.approx(math.sqrt(12.5))
    assert rmse(C([103, 204]), C([100, 200])) == pytest.approx(3.5355, abs=1e-3)


def test_gross_classification():
    rep = gpe_and_rmse20(C([150]), C([100]))
    assert rep.n_gross == 1 and rep.gpe_percent == 100 and rep.rmse20_hz is None
    # exactly 20% off is not gross (strict inequality)
    assert gpe_and_rmse20(C([120]), C([100])).n_gross == 0


def test_gross_errors_inflate_rmse():
    rep = gpe_and_rmse20(C([110, 300]), C([100, 100]))
    assert rep.gpe_percent == 50
    assert rep.rmse20_hz == pytest.approx(10.0)
    assert rep.rmse_hz == pytest.approx(math.sqrt((100 + 40000) / 2))
    assert rep.rmse_hz == pytest.approx(141.598, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(80, 500), min_size=1, max_size=30), st.integers(0, 2**32 - 1))
def test_rmse20_equals_rmse_without_gross(ref, seed):
    ref = np.array(ref)
    est = ref * (1 + np.random.default_rng(seed).uniform(-0.19, 0.19, ref.size))
    rep = gpe_and_rmse20(C(est), C(ref))
    assert rep.gpe_percent == 0
    assert rep.rmse20_hz == rep.rmse_hz
    assert rep.rmse_hz == pytest.approx(rmse_by_hand(est, ref), rel=1e-12)


def test_rmse_zero_iff_identical():
    assert rmse(C([100, 200]), C([100, 200])) == 0
    assert rmse(C([100, 200.001]), C([100, 200])) > 0


def test_pairing_errors():
    with pytest.raises(LengthMismatch):
        rmse(C([1, 2]), C([1]))
    with pytest.raises(TimeMismatch, match="frame 1"):
        rmse(C([1, 2], [0.0, 0.01]), C([1, 2], [0.0, 0.02]))


def test_paired_t_frozen_values():
    t, p, df = paired_t_test([1, 2, 3, 4], [0, 0, 0, 0])
    assert df == 3
    assert t == pytest.approx(3.872983346207417, rel=1e-12)
    assert p == pytest.approx(0.030466291662170988, rel=1e-9)
    assert p == pytest.approx(t_two_sided_p_by_quadrature(t, df), rel=1e-7)


def test_paired_t_antisymmetry():
    rng = np.random.default_rng(0)
    a, b = rng.random(12), rng.random(12)
    t1, p1, _ = paired_t_test(a, b)
    t2, p2, _ = paired_t_test(b, a)
    assert t1 == -t2 and p1 == p2


def test_paired_t_degenerate():
    with pytest.raises(DegenerateVariance):
        paired_t_test([1, 2, 3], [1, 2, 3])
    with pytest.raises(DegenerateVariance):
        paired_t_test([2, 3, 4], [1, 2, 3])


def test_metrics_csv_blank_rmse20():
    rep = gpe_and_rmse20(C([300]), C([100]))
    text = format_metrics_csv([("MH", "has_pr", 100, rep)], {"seed": 1})
    lines = text.splitlines()
    assert lines[0] == "# seed=1"
    assert lines[1] == METRICS_HEADER
    assert lines[2] == "MH,has_pr,100,200.000000,,100.000000"

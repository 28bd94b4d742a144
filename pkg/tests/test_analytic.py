import math

import numpy as np
import pytest

from ddmem import analytic, su2
from ddmem.broadening import BroadeningParams
from ddmem.sequences import SequenceSpec, sequence_unitary

PI = math.pi


@pytest.mark.parametrize("name", ["CP", "CPMG", "XY4", "XY8"])
def test_rotation_angle_vanishes_with_error(name):
    form = analytic.axis_angle_form(name)
    assert form(1.1, 1.0, 0.0).alpha == 0.0


def test_cp_row_values():
    a = analytic.approx_axis_angle("CP", 1.3, 1.0, 0.02)
    c1, s1 = math.cos(0.65), math.sin(0.65)
    assert a.alpha == pytest.approx(2 * c1 * 0.02)
    assert a.theta == pytest.approx(PI / 2 - 0.5 * s1 * 0.02)
    assert a.phi == 0.0


def test_xy4_row_values():
    a = analytic.approx_axis_angle("XY4", 0.9, 1.0, 0.05)
    c1, s1, c2 = math.cos(0.45), math.sin(0.45), math.cos(0.9)
    assert a.alpha == pytest.approx(c2 * 0.05**2)
    assert a.theta == pytest.approx((c1 + s1) * 0.05 / math.sqrt(2))
    assert a.phi == pytest.approx(PI / 4)


def test_composite_rows_are_scaling_records():
    rec = analytic.approx_axis_angle("U5a:CP", 1.0, 1.0, 0.05)
    assert isinstance(rec, analytic.LeadingOrderScaling)
    assert rec.alpha_power == 3
    assert analytic.approx_axis_angle("U5a:XY4", 1.0, 1.0, 0.05).alpha_power == 6
    with pytest.raises(ValueError):
        analytic.axis_angle_form("U5a:CP")


def test_cpmg_row_is_cp_row_at_shifted_detuning():
    # exact identity behind the stored CPMG entries: one CPMG repetition
    # equals one CP repetition at delta + pi/tau up to z rotations
    tau, eps, delta = 1.0, 0.01 * PI, 0.37
    cpmg = analytic.approx_axis_angle("CPMG", delta, tau, eps)
    cp_shifted = analytic.approx_axis_angle("CP", delta + PI / tau, tau, eps)
    assert abs(cpmg.alpha) == pytest.approx(abs(cp_shifted.alpha))
    assert cpmg.theta == pytest.approx(cp_shifted.theta)
    # and the exact unitaries confirm the angle
    t = sequence_unitary(SequenceSpec.preset("CPMG", tau), delta, eps)
    rep = su2.to_axis_angle(t)
    alpha = min(rep.alpha, 2 * PI - rep.alpha)
    assert alpha == pytest.approx(abs(cpmg.alpha), rel=3e-3)


def test_small_m_population_table():
    assert analytic.analytic_population("CP", 3, 0.05, "small_m") == pytest.approx(9 * 0.05**2)
    assert analytic.analytic_population("XY4", 2, 0.1, "small_m") == pytest.approx(0.5 * 0.1**6)
    value = analytic.analytic_population("U5a:XY4", 10, 0.1 * PI, "small_m")
    assert value == pytest.approx(0.67 * 100 * (0.1 * PI) ** 18, rel=1e-12)
    assert value == pytest.approx(5.95e-8, rel=0.01)
    assert analytic.analytic_population("CP", 0, 0.1, "small_m") == 0.0
    assert analytic.analytic_population("CP", 5, 0.0, "small_m") == 0.0


def test_small_m_coherence_table():
    assert analytic.analytic_coherence_loss("XY4", 2, 0.1, "small_m") == pytest.approx(
        0.5 * 4 * 0.1**4
    )
    assert analytic.analytic_coherence_loss("XY8", 3, 0.1, "small_m") == pytest.approx(
        0.25 * 9 * 0.1**6
    )
    assert analytic.analytic_coherence_loss("CP", 4, 0.0, "small_m") == 0.0


def test_large_m_entries():
    assert analytic.analytic_population("CP", 10**6, 0.1, "large_m") == 1.0
    assert analytic.analytic_population("XY4", 10**6, 0.1, "large_m") == pytest.approx(
        0.5 * 0.01
    )
    assert analytic.analytic_coherence_loss("XY4", 10**6, 0.1, "large_m") == 0.0
    assert analytic.analytic_coherence_loss("CP", 10**6, 0.1, "large_m") == 0.5
    assert analytic.analytic_coherence_loss("XY8", 10**6, 0.1, "large_m") == 0.5
    with pytest.raises(ValueError):
        analytic.analytic_population("U5a:CP", 10**6, 0.1, "large_m")


def test_unknown_regime_or_sequence():
    with pytest.raises(ValueError):
        analytic.analytic_population("CP", 2, 0.1, "mid_m")
    with pytest.raises(ValueError):
        analytic.analytic_population("Custom", 2, 0.1, "small_m")


def test_detuning_expectation_gaussian_characteristic_function():
    params = BroadeningParams(gamma=2 * PI * 27e3, seed=0)
    sigma = params.gamma / math.sqrt(8 * math.log(2))
    t = 20e-6
    got = analytic.detuning_expectation(lambda d: np.cos(d * t), params)
    assert got == pytest.approx(math.exp(-0.5 * (sigma * t) ** 2), abs=1e-8)
    # a fast-winding observable averages to zero within the rule's floor
    dephased = analytic.detuning_expectation(lambda d: np.cos(d * 100e-6), params)
    assert abs(dephased) < 5e-9


def test_detuning_expectation_lorentzian_characteristic_function():
    params = BroadeningParams(gamma=3e4, shape="lorentzian", seed=0)
    t = 2e-5
    got = analytic.detuning_expectation(lambda d: np.cos(d * t), params)
    assert got == pytest.approx(math.exp(-0.5 * params.gamma * t), rel=1e-7)


def test_ratio_limit_values():
    params = BroadeningParams(gamma=2 * PI * 27e3, seed=0)
    eps = 0.1 * PI
    r_cp = analytic.ratio_limit_large_m("CP", params, 100e-6, eps)
    assert 0.95 <= r_cp <= 1.0
    r_xy4 = analytic.ratio_limit_large_m("XY4", params, 100e-6, eps)
    assert r_xy4 == pytest.approx(0.5 * eps**2, rel=0.05)
    for name in ("CP", "CPMG", "XY4", "XY8", "U5a:CP", "U5a:XY4"):
        assert 0.0 <= analytic.ratio_limit_large_m(name, params, 100e-6, eps) <= 1.0

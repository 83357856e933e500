import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fspec.applications import (
    ORACLE_TOL,
    CurveAlgebra,
    convolution_improves,
    convolution_lower_bound,
    convolve_spectrum,
    distance_set_check,
    fourth_moment_check,
    iterated_convolution_limit,
    lambda_grid,
    sobolev_improving,
    sumset_bounds,
    synthetic_samples,
)
from fspec.estimate import SpectrumCurve
from fspec.measures import AtomicMeasure, CurveLiftMeasure, MeasureError
from fspec.oracle import (
    oracle_curve,
    oracle_embedded_cube,
    oracle_firstsharp,
    oracle_riesz,
)
from fspec.transforms import FrequencyGrid, default_grid

RIESZ = CurveAlgebra.from_oracle(oracle_riesz(0.8, 3))
THETAS = np.round(np.arange(1, 11) * 0.1, 2)


def linear(c):
    return CurveAlgebra.linear(c)


def test_curve_algebra_rejects_outside_unit_interval():
    with pytest.raises(MeasureError):
        RIESZ(1.2)
    with pytest.raises(MeasureError):
        RIESZ(-0.1)


def test_curve_algebra_interpolates_estimates():
    c = CurveAlgebra.from_points([0.0, 0.5, 1.0], [0.1, 0.4, 0.5], [0.01, 0.02, 0.03])
    assert c(0.25) == pytest.approx(0.25)
    assert c.tolerance() == pytest.approx(0.03)
    assert c.tolerance(0.25) == pytest.approx(0.015)
    assert c.kind(0.25) == "estimate"
    assert RIESZ.tolerance() == ORACLE_TOL


def test_curve_algebra_from_spectrum_curve():
    sc = SpectrumCurve(np.array([0.0, 0.5, 1.0]), np.array([0.0, np.nan, 0.6]), np.array([0.01, 0.1, 0.02]),
                       np.zeros(3), np.zeros(3), ["", "", ""], 1)
    c = CurveAlgebra.from_curve(sc)
    assert c(0.5) == pytest.approx(0.3)
    assert c.tolerance() == pytest.approx(0.02)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.floats(0, 1), st.floats(0, 1))
def test_interpolation_preserves_monotonicity(increments, a, b):
    th = np.linspace(0, 1, len(increments))
    vals = np.cumsum(increments)
    c = CurveAlgebra.from_points(th, vals)
    lo, hi = min(a, b), max(a, b)
    assert c(lo) <= c(hi) + 1e-12


def test_convolve_identity_and_fixed_points():
    one = convolve_spectrum(RIESZ, 1)
    for th in THETAS:
        assert one(th) == RIESZ(th)
    lin = convolve_spectrum(linear(0.7), 3)
    for th in THETAS:
        assert lin(th) == pytest.approx(0.7 * th, abs=1e-15)
    with pytest.raises(MeasureError):
        convolve_spectrum(RIESZ, 0)


def test_convolve_riesz_square():
    half = mpmath.mpf(1) / 2
    ref = 2 * float(half - half * mpmath.log(1 + mpmath.mpf("0.8") ** 4 * mpmath.mpf(2) ** -3) / mpmath.log(3))
    assert convolve_spectrum(RIESZ, 2)(1.0) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(0.9546, abs=1e-4)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0, 1))
def test_convolve_composition_is_exact(j, k, th):
    twice = convolve_spectrum(convolve_spectrum(RIESZ, j), k)
    once = convolve_spectrum(RIESZ, j * k)
    assert twice(th) == once(th)


def test_lower_bound_with_zero_curve():
    zero = linear(0.0)
    for th in THETAS:
        v, lam = convolution_lower_bound(RIESZ, zero, th)
        assert v == pytest.approx(RIESZ(th), abs=1e-15)
        assert lam == 1.0


def test_lower_bound_segments_in_common_line():
    seg = CurveAlgebra.from_oracle(oracle_embedded_cube(1, 2))
    for th in THETAS:
        v, _ = convolution_lower_bound(seg, seg, th)
        assert v == pytest.approx(th, abs=1e-12)


def test_lower_bound_concave_symmetric_optimum():
    for th in (0.4, 1.0):
        v, lam = convolution_lower_bound(RIESZ, RIESZ, th)
        assert lam == pytest.approx(0.5)
        assert v == pytest.approx(2 * RIESZ(th / 2), abs=1e-15)


def test_convolution_improves_decisions():
    assert not convolution_improves(linear(1.0), 1.0).result
    assert not convolution_improves(CurveAlgebra.from_oracle(oracle_embedded_cube(2, 3)), 0.7).result
    for th in THETAS:
        dec = convolution_improves(RIESZ, th)
        assert dec.result and dec.margin > 0 and 0 <= dec.witness < 1
    assert convolution_improves(RIESZ, 1.0).result
    with pytest.raises(MeasureError):
        convolution_improves(RIESZ, 0.0)


@given(st.floats(0, 3), st.floats(0.01, 1))
def test_linear_curves_never_improve(c, th):
    assert not convolution_improves(linear(c), th)


def test_iterated_convolution_limit():
    assert iterated_convolution_limit(CurveAlgebra.from_oracle(oracle_firstsharp(1))).limit == pytest.approx(1.0)
    assert iterated_convolution_limit(CurveAlgebra.from_oracle(oracle_firstsharp(2))).limit == pytest.approx(2.0)
    assert iterated_convolution_limit(linear(0.3)).limit == pytest.approx(0.3)
    rep = iterated_convolution_limit(CurveAlgebra.from_oracle(oracle_curve(4)))
    assert math.isinf(rep.limit) and rep.dim_f == pytest.approx(0.5)
    assert "k dim_F" in rep.regime


def test_sobolev_improving_threshold():
    assert sobolev_improving(CurveAlgebra.from_oracle(oracle_firstsharp(1))) == pytest.approx(1.0)
    assert sobolev_improving(linear(0.4)) == pytest.approx(0.4)
    assert sobolev_improving(RIESZ) == pytest.approx(1.0, abs=1e-6)


def test_sumset_classical_case_and_trivial_bound():
    cx = CurveAlgebra.from_points([0, 1], [0.3, 0.9])
    rep = sumset_bounds(cx, None, 0.5, 1)
    assert rep.classical == min(cx(0.0) + 0.5, 1)
    zero = sumset_bounds(linear(0.0), None, 0.6, 2)
    assert zero.dimension_bound == pytest.approx(0.6)
    assert not zero.positive_measure.result and not zero.interior.result


def test_sumset_self_sum_without_improvement():
    dimh = 0.7
    rep = sumset_bounds(linear(dimh), None, dimh, 1)
    assert rep.dimension_bound == pytest.approx(dimh, abs=1e-12)
    assert not rep.positive_measure.result


def test_sumset_positive_measure_and_interior():
    big = CurveAlgebra.from_points([0, 1], [0.8, 1.0])
    rep = sumset_bounds(big, None, 0.5, 1)
    assert rep.positive_measure.result and rep.positive_measure.margin > 0
    assert rep.conclusion == "positive Lebesgue measure"
    huge = CurveAlgebra.from_points([0, 1], [1.8, 2.0])
    assert sumset_bounds(huge, None, 0.5, 1).interior.result
    assert not sumset_bounds(huge, None, 0.5, 1, measure_level=False).interior.result


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_sumset_lambda_zero_reproduces_classical(f0, f1, dimh):
    lo, hi = min(f0, f1), max(f0, f1)
    cx = CurveAlgebra.from_points([0, 1], [lo, hi])
    rep = sumset_bounds(cx, None, dimh, 1)
    assert rep.classical == min(lo + dimh, 1)
    assert rep.dimension_bound >= min(lo + dimh, 1) - 1e-12


def test_distance_full_measure_curve():
    rep = distance_set_check(CurveAlgebra.from_points([0, 1], [2.0, 2.0]), 2)
    assert rep.decision == "positive_measure" and rep.margin > 0
    assert "caveat" in str(rep)


def test_distance_mattila_case():
    # dim_F = 1.1 and dim_H = 1.3 in the plane: the theta = 0 pair already exceeds d
    cx = CurveAlgebra.from_points([0, 1], [1.1, 1.3])
    rep = distance_set_check(cx, 2)
    assert rep.decision == "positive_measure"
    assert rep.statistic == pytest.approx(2.4)


def test_distance_curve_p4_gives_dimension_bound():
    # min(1/2 + 3t/4, 1) + min(1/2 + 3(1-t)/4, 1) peaks at 7/4 on [1/3, 2/3]
    rep = distance_set_check(CurveAlgebra.from_oracle(oracle_curve(4)), 2)
    assert rep.decision == "dimension_bound"
    assert rep.statistic == pytest.approx(1.75, abs=1e-12)
    assert rep.dimension_bound == pytest.approx(0.75, abs=1e-12)
    assert not rep.half_shortcut.result
    with pytest.raises(MeasureError):
        distance_set_check(RIESZ, 1)


@given(st.lists(st.floats(0, 0.5), min_size=2, max_size=8))
def test_distance_refinement_never_decreases(increments):
    th = np.linspace(0, 1, len(increments))
    c = CurveAlgebra.from_points(th, np.cumsum(increments))
    coarse = distance_set_check(c, 2, thetas=lambda_grid(0.1))
    fine = distance_set_check(c, 2, thetas=lambda_grid(0.01))
    assert fine.statistic >= coarse.statistic - 1e-12


def test_fourth_moment_atom_diverges():
    m = AtomicMeasure(np.zeros((1, 1)), np.ones(1))
    rep = fourth_moment_check(m, FrequencyGrid(1, 10))
    assert rep.decision == "diverges"
    assert rep.statistic == pytest.approx(1.0, abs=0.01)


def test_fourth_moment_decay_mock_converges():
    samples = synthetic_samples(FrequencyGrid(1, 16), lambda r: np.maximum(r, 1.0) ** -0.375)
    rep = fourth_moment_check(samples)
    assert rep.decision == "converges"
    assert rep.statistic == pytest.approx(-0.5, abs=0.01)


def test_fourth_moment_parabola_is_marginal():
    m = CurveLiftMeasure(2.0)
    rep = fourth_moment_check(m, default_grid(m, shells=7))
    assert rep.decision == "inconclusive"

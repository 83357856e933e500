import numpy as np
import pytest

from fspec.measures import (
    AtomicMeasure,
    ConvolutionMeasure,
    CurveLiftMeasure,
    DensityMeasure,
    EmbeddedMeasure,
    MeasureError,
    RieszProductMeasure,
    SelfSimilarMeasure,
    TrigSeries,
    cantor_measure,
    firstsharp_density,
    lebesgue_segment,
    riesz_geometric,
    validate,
)


def test_riesz_geometric_depth_and_exact_range():
    m = riesz_geometric(0.8, 3, 65536)
    assert m.depth == 10
    assert m.lam[:3] == (3, 9, 27)
    assert len(m.lam) == 11
    # lam_11 - sum_{j<=10} 3^j - 1
    assert m.exact_range == 3**11 - sum(3**j for j in range(1, 11)) - 1 == 88574
    assert validate(m).ok


def test_riesz_without_extra_frequency_uses_partial_sum():
    m = RieszProductMeasure((0.5, 0.5), (3, 9))
    assert m.exact_range == 12


def test_riesz_lacunarity_violation_names_index():
    rep = validate(RieszProductMeasure((0.5, 0.5), (3, 8)))
    assert not rep.ok
    assert "lambda_{j+1} >= 3 lambda_j fails at j=1" in str(rep)
    with pytest.raises(MeasureError):
        rep.raise_if_invalid()


def test_riesz_coefficient_bound():
    assert not validate(RieszProductMeasure((1.5,), (3,))).ok


def test_selfsimilar_weights_must_sum_to_one():
    assert not validate(SelfSimilarMeasure(1 / 3, (0.0, 2 / 3), (0.3, 0.6))).ok
    assert not validate(SelfSimilarMeasure(1.2, (0.0, 2 / 3), (0.5, 0.5))).ok
    assert validate(cantor_measure(0.3)).ok


def test_cantor_support_and_mass():
    m = cantor_measure(0.5)
    lo, hi = m.support_box
    assert lo[0] == pytest.approx(0.0)
    assert hi[0] == pytest.approx(1.0)
    assert m.mass == 1.0


def test_atomic_measure_checks():
    assert validate(AtomicMeasure(np.zeros((1, 2)), np.ones(1))).ok
    assert not validate(AtomicMeasure(np.zeros((2, 1)), np.array([1.0, -1.0]))).ok
    assert not validate(AtomicMeasure(np.zeros((2, 1)), np.ones(3))).ok


def test_segment_mass_and_box():
    m = lebesgue_segment(2.0)
    assert m.mass == pytest.approx(2.0)
    assert m.support_diameter == pytest.approx(2.0)


def test_density_rejects_negative_values():
    assert not validate(DensityMeasure(1, 0.5, np.array([1.0, -0.1]))).ok


def test_firstsharp_resolution_guard():
    with pytest.raises(MeasureError, match="aliases"):
        firstsharp_density(1, 4, resolution=64)
    m = firstsharp_density(1, 4, resolution=65)
    assert m.resolution == 65


def test_firstsharp_series_and_mass():
    m = firstsharp_density(1, 6)
    s = m.series[0]
    assert s.coefficient(0) == 2
    # sin(2 pi 2^n x) / n^2 has coefficient 1 / (2 i n^2) at 2^n
    assert s.coefficient(4) == pytest.approx(1 / (2j * 4))
    assert s.coefficient(-4) == pytest.approx(-1 / (2j * 4))
    assert m.mass == pytest.approx(2.0)
    x = np.linspace(0, 1, 257)
    direct = 2 + sum(np.sin(2 * np.pi * 2**n * x) / n**2 for n in range(1, 7))
    np.testing.assert_allclose(s(x), direct, atol=1e-12)
    assert np.all(direct > 0)


def test_firstsharp_dimension_limits():
    with pytest.raises(MeasureError):
        firstsharp_density(3, 4)


def test_trig_series_sorted_and_mean():
    s = TrigSeries(np.array([2, 0, -2]), np.array([0.5, 1.0, 0.5], dtype=complex))
    assert list(s.freqs) == [-2, 0, 2]
    assert s.mean == 1.0
    np.testing.assert_allclose(s(np.array([0.0, 0.25])), [2.0, 0.0], atol=1e-12)


def test_curve_validation_and_focus():
    assert not validate(CurveLiftMeasure(1.0)).ok
    m = CurveLiftMeasure(4.0)
    assert m.ambient_dim == 2
    assert m.angular_focus() == pytest.approx(np.pi / 2)


def test_embedded_frame_checks_and_focus():
    seg = lebesgue_segment()
    good = EmbeddedMeasure(seg, np.array([[1.0], [0.0]]))
    assert validate(good).ok
    assert good.angular_focus() == pytest.approx(np.pi / 2)
    assert not validate(EmbeddedMeasure(seg, np.array([[2.0], [0.0]]))).ok
    bad = EmbeddedMeasure(AtomicMeasure(np.zeros((1, 2)), np.ones(1)), np.array([[1.0], [0.0]]))
    assert not validate(bad).ok


def test_convolution_checks_nested_paths():
    bad = ConvolutionMeasure((cantor_measure(0.5), SelfSimilarMeasure(1 / 3, (0.0, 2 / 3), (0.2, 0.2))))
    rep = validate(bad)
    assert not rep.ok
    assert "factors[1]" in str(rep)
    mixed = ConvolutionMeasure((lebesgue_segment(), CurveLiftMeasure(2.0)))
    assert not validate(mixed).ok
    conv = ConvolutionMeasure((lebesgue_segment(), lebesgue_segment()))
    assert conv.support_diameter == pytest.approx(2.0)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fspec.energy import (
    ball_average,
    compute_energy_table,
    lattice_energy,
    lattice_partial_sums,
    lattice_ratio_band,
    partial_energy,
    sphere_area,
)
from fspec.measures import (
    AtomicMeasure,
    DensityMeasure,
    MeasureError,
    RieszProductMeasure,
    cantor_measure,
    firstsharp_density,
    lebesgue_segment,
)
from fspec.transforms import FrequencyGrid, default_grid, sample_grid, transform


def atom(d, weight=1.0):
    return AtomicMeasure(np.zeros((1, d)), np.array([weight]))


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("d,shells", [(1, 10), (2, 6)])
@pytest.mark.parametrize("theta,s", [(1.0, 0.5), (0.5, 0.25), (0.25, 0.2)])
def test_atom_partial_energy_closed_form(d, shells, theta, s):
    # |mu_hat| = 1: J = (sigma_{d-1} R^(s/theta) / (s/theta))^theta
    samples = sample_grid(atom(d), FrequencyGrid(d, shells))
    # the d=1 rectangle rule integrates over |z| <= R + h/2
    radii = samples.grid.radii + (samples.grid.spacing / 2 if d == 1 else 0.0)
    got = partial_energy(samples, theta, s)
    ref = (sphere_area(d) * radii ** (s / theta) / (s / theta)) ** theta
    np.testing.assert_allclose(got, ref, rtol=1e-3 if d == 1 else 0.02)
    slope = np.diff(np.log(got[-4:])) / math.log(2)
    np.testing.assert_allclose(slope, s, atol=0.01)


def test_atom_ball_average_1d_rectangle_rule():
    samples = sample_grid(atom(1), FrequencyGrid(1, 8))
    radii = samples.grid.radii
    h = samples.grid.spacing
    for theta in (0.3, 1.0):
        np.testing.assert_allclose(ball_average(samples, theta), (2 * radii + h) / radii, rtol=1e-12)
    np.testing.assert_allclose(ball_average(samples, 0.0), 1.0)


def test_theta_zero_is_running_sup():
    samples = sample_grid(lebesgue_segment(), FrequencyGrid(1, 8))
    env = partial_energy(samples, 0.0, 0.5)
    assert np.all(np.diff(env) >= 0)
    r = samples.radius
    for j, R in enumerate(samples.grid.radii):
        mask = samples.shell <= j
        ref = np.max(np.abs(samples.values[mask]) ** 2 * r[mask] ** 0.5)
        assert env[j] == pytest.approx(ref, rel=1e-12)


def test_segment_energy_converges_below_one():
    # |mu_hat(z)|^2 ~ |z|^-2 on average: the s = 0.5 Sobolev energy converges
    samples = sample_grid(lebesgue_segment(), FrequencyGrid(1, 14))
    pe = partial_energy(samples, 1.0, 0.5)
    increments = np.diff(pe)
    assert increments[-1] < 0.05 * increments[2]


_MEASURES = [lebesgue_segment(), cantor_measure(0.3), firstsharp_density(1, 6), atom(1, 0.7)]


@given(st.sampled_from(range(4)), st.floats(0.05, 1.0), st.one_of(st.just(0.0), st.floats(0.01, 0.95)))
def test_partial_energies_monotone_in_truncation(k, theta, s):
    samples = _samples(k)
    pe = partial_energy(samples, theta, s)
    assert np.all(np.diff(pe) >= -1e-12 * pe[1:])
    ba = ball_average(samples, theta)
    assert np.all(np.isfinite(ba)) and np.all(ba > 0)


_CACHE = {}


def _samples(k):
    if k not in _CACHE:
        _CACHE[k] = sample_grid(_MEASURES[k], FrequencyGrid(1, 10))
    return _CACHE[k]


@given(st.floats(0.1, 10.0), st.floats(0.1, 1.0), st.floats(0.05, 0.9))
def test_mass_scaling_shifts_log_energy(c, theta, s):
    base = DensityMeasure(1, 0.25, np.array([1.0, 0.5, 2.0, 1.0]))
    scaled = DensityMeasure(1, 0.25, c * base.values)
    g = FrequencyGrid(1, 8)
    a = np.log(partial_energy(sample_grid(base, g), theta, s))
    b = np.log(partial_energy(sample_grid(scaled, g), theta, s))
    # J^theta is homogeneous of degree 2 in the measure
    np.testing.assert_allclose(b - a, 2 * math.log(c), atol=1e-11)
    slope_a = np.polyfit(np.log(g.radii[4:]), a[4:], 1)[0]
    slope_b = np.polyfit(np.log(g.radii[4:]), b[4:], 1)[0]
    assert abs(slope_a - slope_b) < 1e-10


def test_energy_table_layout():
    samples = sample_grid(cantor_measure(0.5), FrequencyGrid(1, 6))
    table = compute_energy_table(samples, [0.0, 0.5, 1.0], (0.25, 0.5))
    rows = list(table.rows())
    assert len(rows) == 3 * 2 * 7
    th, s, j, R, pe, ba, eb = rows[-1]
    assert (th, s, j, R) == (1.0, 0.5, 6, 64.0)
    assert pe == pytest.approx(partial_energy(samples, 1.0, 0.5)[-1])
    assert ba == pytest.approx(ball_average(samples, 1.0)[-1])
    assert eb >= 0
    assert table.theta_index(0.5) == 1
    with pytest.raises(KeyError):
        table.theta_index(0.7)


def test_energy_rejects_bad_arguments():
    samples = sample_grid(lebesgue_segment(), FrequencyGrid(1, 4))
    with pytest.raises(MeasureError):
        partial_energy(samples, 1.5, 0.5)
    with pytest.raises(MeasureError):
        partial_energy(samples, 0.5, -1.0)


def test_riesz_lattice_sums_against_fft_coefficients():
    lam = (3, 9, 27, 81)
    m = RieszProductMeasure((0.8,) * 4, lam)
    n = 1024
    x = np.arange(n) / n
    f = np.prod([1 + 0.8 * np.cos(2 * np.pi * l * x) for l in lam], axis=0)
    c = np.abs(np.fft.fft(f) / n)
    s = 0.4
    R = 100
    ref = sum(2 * c[k] ** 2 * k ** (s - 1) for k in range(1, R + 1))
    assert lattice_energy(m, 1, s, R) == pytest.approx(ref, rel=1e-12)


def test_lattice_sums_half_integer_lattice():
    m = cantor_measure(0.3)
    s = 0.3
    pts = np.arange(1, 41) / 2
    v, _ = transform(m, pts[:, None])
    ref = np.sum(2 * np.abs(v) ** 4 * pts ** (2 * s - 1))
    assert lattice_energy(m, 2, s, 20) == pytest.approx(ref, rel=1e-12)
    sums = lattice_partial_sums(m, 2, s, [5, 10, 20])
    assert np.all(np.diff(sums) >= 0)


def test_lattice_2d_counts_half_lattice():
    m = atom(2)
    # |mu_hat| = 1; sum over nonzero (a, b) in Z^2 with |.| <= 2 of |z|^(s-2)
    s = 0.5
    pts = [(a, b) for a in range(-2, 3) for b in range(-2, 3) if (a, b) != (0, 0) and a * a + b * b <= 4]
    ref = sum(math.hypot(a, b) ** (s - 2) for a, b in pts)
    assert lattice_energy(m, 1, s, 2) == pytest.approx(ref, rel=1e-12)


def test_lattice_guards():
    with pytest.raises(MeasureError):
        lattice_energy(cantor_measure(0.3), 2, 0.6, 10)
    shifted = DensityMeasure(1, 1.0, np.ones(1), origin=(0.5,))
    with pytest.raises(MeasureError):
        lattice_energy(shifted, 1, 0.5, 10)


def test_lattice_ratio_band_firstsharp():
    m = firstsharp_density(1, 10)
    samples = sample_grid(m, default_grid(m, shells=10))
    ratios, band = lattice_ratio_band(m, samples, 2, 0.4)
    assert ratios.shape == (11,)
    assert 1 <= band <= 10


@given(st.sampled_from(range(4)), st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(0.05, 0.9),
       st.floats(0.05, 0.9))
def test_hoelder_interpolation_of_energies(k, th0, th1, s0, s1):
    # Hoelder with exponents th0/(2 th), th1/(2 th): J(th, s)^2 <= J(th0, s0) J(th1, s1)
    samples = _samples(k)
    th, s = (th0 + th1) / 2, (s0 + s1) / 2
    mid = partial_energy(samples, th, s)
    flank = partial_energy(samples, th0, s0) * partial_energy(samples, th1, s1)
    assert np.all(mid**2 <= flank * (1 + 1e-9))


def test_lattice_atom_k2_diverges():
    # |mu_hat| = 1: every term is 2 |z|^(2 s - 1) and partial sums grow like R^(2 s)
    m = atom(1)
    radii = 2.0 ** np.arange(4, 12)
    sums = lattice_partial_sums(m, 2, 0.25, radii)
    slope = np.polyfit(np.log(radii), np.log(sums), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


def test_lattice_firstsharp_only_dyadic_terms():
    m = firstsharp_density(1, 8)
    s = 0.5
    # |mu_hat(2^n)| = 1 / (2 n^2); every other nonzero integer vanishes
    ref = sum(2 * (1 / (2 * n**2)) ** 2 * (2.0**n) ** (s - 1) for n in range(1, 9))
    assert lattice_energy(m, 1, s, 2**8) == pytest.approx(ref, rel=1e-10)

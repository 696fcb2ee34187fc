import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmlab.measures import (DensityField, Grid1D, MixedMeasure, ParticleEnsemble, cdf,
                               indicator_density, initial_density, moment, quantile,
                               read_measure_csv, total_mass, write_measure_csv)


def test_grid_geometry():
    g = Grid1D()
    assert g.h == pytest.approx(1e-3)
    assert g.centers[0] == pytest.approx(5e-4)
    assert g.edges[-1] == 1.5
    with pytest.raises(ValueError):
        Grid1D(1.0, 0.0, 10)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 0)


@pytest.mark.parametrize("measure, expected", [
    (MixedMeasure(density=initial_density()), 1.0),
    (MixedMeasure([0.3], [1.0]), 1.0),
    (MixedMeasure([0.0], [0.25], indicator_density(0.0, 0.375, 2.0)), 1.0),
])
def test_total_mass(measure, expected):
    assert total_mass(measure) == pytest.approx(expected, abs=1e-14)


def test_cdf_examples():
    unit = indicator_density(0.0, 1.0, 1.0)
    assert cdf(unit, 0.5) == pytest.approx(0.5, abs=1e-14)
    assert cdf(MixedMeasure([0.2], [1.0]), 0.2) == 1.0
    assert cdf(MixedMeasure([0.2], [1.0]), 0.2 - 1e-12) == 0.0
    assert cdf(initial_density(), 0.125) == pytest.approx(0.5, abs=1e-14)
    assert cdf(unit, 1.5) == pytest.approx(1.0)


def test_quantile_examples():
    unit = indicator_density(0.0, 1.0, 1.0)
    assert quantile(unit, 0.25) == pytest.approx(0.25, abs=1e-14)
    atom = MixedMeasure([0.7], [1.0])
    assert np.all(quantile(atom, [1e-9, 0.3, 1.0]) == 0.7)
    assert quantile(initial_density(), 0.5) == pytest.approx(0.125, abs=1e-14)
    # u = 0 is the infimum of the support, not the domain end
    assert quantile(indicator_density(0.5, 1.0, 2.0), 0.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        quantile(unit, 1.2)
    with pytest.raises(ValueError):
        quantile(unit, -0.1)


def test_quantile_jumps_over_atoms_and_gaps():
    g = Grid1D(0.0, 1.5, 15)
    m = MixedMeasure([0.0], [0.5], indicator_density(1.0, 1.5, 1.0, g))
    assert quantile(m, 0.5) == 0.0
    assert quantile(m, 0.5 + 1e-12) == pytest.approx(1.0, abs=1e-9)
    assert quantile(m, 0.75) == pytest.approx(1.25)


@pytest.mark.parametrize("a, b, height, n, expected_mass", [
    (0.0, 0.25, 4.0, 1500, 1.0),
    (0.0, 1.5, 1 / 1.5, 1500, 1.0),
    (0.1, 0.2, 10.0, 15, 1.0),
    (0.05, 0.17, 3.0, 15, 0.36),
])
def test_indicator_density(a, b, height, n, expected_mass):
    d = indicator_density(a, b, height, Grid1D(0.0, 1.5, n))
    assert d.mass == pytest.approx(expected_mass, rel=1e-12)


def test_indicator_single_cell():
    d = indicator_density(0.1, 0.2, 10.0, Grid1D(0.0, 1.5, 15))
    assert np.count_nonzero(d.values) == 1
    assert d.values[1] == pytest.approx(10.0)
    with pytest.raises(ValueError):
        indicator_density(0.3, 0.3, 1.0)


def test_quantile_cdf_round_trip():
    g = Grid1D()
    x = g.centers
    d = DensityField(g, 1.0 + 0.5 * np.sin(3 * x))
    d = DensityField(g, d.values / d.mass)
    assert np.max(np.abs(quantile(d, np.clip(cdf(d, x), 0, 1)) - x)) <= g.h


def test_cdf_monotone(rng):
    m = MixedMeasure(rng.uniform(0, 1.5, 20), np.full(20, 0.025),
                     indicator_density(0.2, 0.7, 1.0))
    pts = np.sort(rng.uniform(-0.1, 1.6, (10_000, 2)), axis=1)
    assert np.all(cdf(m, pts[:, 0]) <= cdf(m, pts[:, 1]))


def test_second_moment_of_initial_block():
    assert moment(initial_density(), 2) == pytest.approx(1 / 48, rel=1e-3)


def test_ensemble_sorting_and_merging():
    e = ParticleEnsemble([0.3, 0.0, 0.3 + 1e-8, 0.0], [0.25] * 4)
    assert np.all(np.diff(e.positions) >= 0)
    m = e.to_measure()
    assert m.n_atoms == 2
    assert m.atom_locations[0] == 0.0
    assert m.atom_masses.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        ParticleEnsemble([0.1], [0.0])


def test_mixed_measure_validation():
    with pytest.raises(ValueError):
        MixedMeasure([0.1, 0.2], [1.0])
    with pytest.raises(ValueError):
        MixedMeasure([0.1], [-1.0])
    with pytest.raises(ValueError):
        MixedMeasure([2.0], [0.5], indicator_density(0, 0.5, 1.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1.5), min_size=0, max_size=6),
       st.integers(5, 40), st.integers(0, 2**31 - 1))
def test_csv_round_trip_bit_exact(tmp_path_factory, atoms, n, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0.0, 1.5, n)
    d = DensityField(g, rng.exponential(size=n) * (rng.random(n) > 0.3))
    m = MixedMeasure(atoms, np.full(len(atoms), 0.1), d)
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    back = read_measure_csv(write_measure_csv(path, m))
    assert np.array_equal(back.atom_locations, m.atom_locations)
    assert np.array_equal(back.atom_masses, m.atom_masses)
    assert back.density.grid == g
    assert np.array_equal(back.density.values, d.values)


def test_csv_atoms_only(tmp_path):
    m = MixedMeasure([0.0, 0.5], [0.4, 0.6])
    back = read_measure_csv(write_measure_csv(tmp_path / "a.csv", m))
    assert back.density is None
    assert back.atom_masses.tolist() == [0.4, 0.6]

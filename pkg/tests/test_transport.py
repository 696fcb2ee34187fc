import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmlab.measures import (DensityField, Grid1D, MixedMeasure, ParticleEnsemble,
                               indicator_density, quantile)
from swarmlab.transport import (MassMismatchError, w2_density_to_atoms, w2_discrete_oracle,
                                w2_mixed)

UNIT = indicator_density(0.0, 1.0, 1.0)


@pytest.mark.parametrize("atoms, expected", [
    (([0.5], [1.0]), math.sqrt(1 / 12)),
    (([0.25, 0.75], [0.5, 0.5]), math.sqrt(1 / 48)),
    (([0.0], [1.0]), math.sqrt(1 / 3)),
])
def test_density_to_atoms_closed_forms(atoms, expected):
    mu = ParticleEnsemble(*atoms)
    d, plan = w2_density_to_atoms(UNIT, mu)
    assert d == pytest.approx(expected, abs=1e-12)
    assert w2_mixed(UNIT, mu) == pytest.approx(expected, abs=1e-12)
    assert np.allclose(plan.masses, mu.weights, atol=1e-12)


def test_partition_plan_cuts():
    _, plan = w2_density_to_atoms(UNIT, ParticleEnsemble([0.1, 0.5, 0.9], [0.2, 0.3, 0.5]))
    assert plan.cuts == pytest.approx([0.0, 0.2, 0.5, 1.0], abs=1e-12)
    assert plan.targets.tolist() == [0.1, 0.5, 0.9]


def test_ties_are_merged():
    d1, plan = w2_density_to_atoms(UNIT, ParticleEnsemble([0.5, 0.5], [0.5, 0.5]))
    assert plan.targets.size == 1
    assert d1 == pytest.approx(math.sqrt(1 / 12), abs=1e-12)


def test_quantization_decreases(rng):
    g = Grid1D()
    d = DensityField(g, np.exp(-((g.centers - 0.6) / 0.2) ** 2))
    d = DensityField(g, d.values / d.mass)
    prev = np.inf
    for n in (2, 4, 8, 16, 32, 64, 128):
        mu = ParticleEnsemble(quantile(d, (np.arange(n) + 0.5) / n), np.full(n, 1 / n))
        dist, plan = w2_density_to_atoms(d, mu)
        assert dist < prev
        assert np.max(np.abs(plan.masses - mu.weights)) <= 1e-12
        prev = dist


@pytest.mark.parametrize("a, b, expected", [
    (([0.0, 1.0], [0.5, 0.5]), ([1.0, 0.0], [0.5, 0.5]), 0.0),
    (([0.0, 1.0], [0.5, 0.5]), ([0.5, 0.5], [0.5, 0.5]), 0.5),
    (([0.0], [1.0]), ([1.0], [1.0]), 1.0),
])
def test_oracle_examples(a, b, expected):
    ea, eb = ParticleEnsemble(*a), ParticleEnsemble(*b)
    assert w2_discrete_oracle(ea, eb) == pytest.approx(expected, abs=1e-15)
    assert w2_mixed(ea, eb) == pytest.approx(expected, abs=1e-15)


def test_oracle_preconditions():
    with pytest.raises(MassMismatchError):
        w2_discrete_oracle(ParticleEnsemble([0.0], [1.0]), ParticleEnsemble([0, 1], [0.5, 0.5]))
    with pytest.raises(MassMismatchError):
        w2_discrete_oracle(ParticleEnsemble([0, 1], [0.25, 0.75]),
                           ParticleEnsemble([0, 1], [0.5, 0.5]))
    with pytest.raises(MassMismatchError):
        w2_mixed(UNIT, MixedMeasure([0.1], [0.9]))


def test_translation():
    g = Grid1D()
    a = MixedMeasure([0.2], [0.3], indicator_density(0.3, 0.65, 2.0, g))
    b = MixedMeasure([0.5], [0.3], indicator_density(0.6, 0.95, 2.0, g))
    assert w2_mixed(a, b) == pytest.approx(0.3, abs=1e-12)
    assert w2_mixed(a, a) == 0.0


def test_grid_refinement_is_first_order():
    def sampled(n):
        g = Grid1D(0.0, 1.5, n)
        vals = np.diff(np.sin(np.clip(g.edges, 0, np.pi / 2)) ** 2) / g.h  # density sin(2x)
        return DensityField(g, vals / (g.h * vals.sum()))

    ref = indicator_density(0.0, 1.5, 1 / 1.5, Grid1D(0.0, 1.5, 3))
    diffs = [abs(w2_mixed(sampled(n), ref) - w2_mixed(sampled(2 * n), ref))
             for n in (150, 300, 600)]
    assert diffs[1] < diffs[0] and diffs[2] < diffs[1]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**31 - 1))
def test_oracle_equivalence_property(n, seed):
    rng = np.random.default_rng(seed)
    a = ParticleEnsemble(rng.uniform(0, 1.5, n), np.full(n, 1 / n))
    b = ParticleEnsemble(rng.uniform(0, 1.5, n), np.full(n, 1 / n))
    assert abs(w2_mixed(a, b) - w2_discrete_oracle(a, b)) <= 1e-10


def random_mixed(rng, grid):
    k = rng.integers(0, 4)
    vals = rng.exponential(size=grid.n_cells) * (rng.random(grid.n_cells) < 0.6)
    has_density = k == 0 or rng.random() < 0.7
    dmass = rng.uniform(0.2, 1.0) if k else 1.0
    masses = rng.dirichlet(np.ones(k)) * (1 - dmass) if k else np.empty(0)
    if not has_density:
        masses = rng.dirichlet(np.ones(k))
        return MixedMeasure(rng.uniform(0, 1.5, k), masses)
    vals[0] += 1.0
    d = DensityField(grid, vals * dmass / (grid.h * vals.sum()))
    return MixedMeasure(rng.uniform(0, 1.5, k), masses, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_metric_axioms_property(seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0.0, 1.5, int(rng.integers(3, 60)))
    a, b, c = (random_mixed(rng, g) for _ in range(3))
    ab, ba = w2_mixed(a, b), w2_mixed(b, a)
    assert ab == ba
    assert ab <= w2_mixed(a, c) + w2_mixed(c, b) + 1e-10
    assert w2_mixed(a, a) == 0.0

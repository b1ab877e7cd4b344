import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagespread import kinetics, spatial as sp, speed
from stagespread.config import with_threshold
from stagespread.errors import DiagnosticError

USTAR = 0.7854278963987777


@pytest.fixture(scope="module")
def small():
    return sp.Grid(32.0, 1024)


@pytest.fixture(scope="module")
def canonical_run(canonical):
    grid = sp.Grid(64.0, 4096)
    return sp.iterate_Q(canonical, sp.compact_initial(grid, USTAR), 40)


def test_grid_validation():
    with pytest.raises(ValueError):
        sp.Grid(10.0, 1000)
    with pytest.raises(ValueError):
        sp.Grid(0.0, 1024)
    g = sp.Grid(8.0, 16)
    assert g.dx == 1.0
    assert g.x[0] == -7.5 and g.x[-1] == 7.5
    with pytest.raises(ValueError):
        g.x[0] = 1.0


def test_field_validation(small):
    with pytest.raises(ValueError):
        sp.Field(np.zeros(5), small)
    with pytest.raises(ValueError):
        sp.Field(np.full(small.n_points, np.nan), small)
    f = sp.Field.constant(small, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_gaussian_step_arguments(small):
    f = sp.Field.constant(small, 1.0)
    with pytest.raises(ValueError):
        sp.gaussian_step(f, -1.0, 0.5)
    with pytest.raises(ValueError):
        sp.gaussian_step(f, 1.0, 1.5)
    assert np.array_equal(sp.gaussian_step(f, 0.0, 0.5).values, 0.5 * f.values)


def test_gaussian_step_matches_density(small):
    # Gaussian densities compose by adding variances
    dens = lambda v: np.exp(-small.x ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
    out = sp.gaussian_step(sp.Field(dens(1.0), small), 2.0, 0.5).values
    assert np.abs(out - 0.5 * dens(3.0)).max() < 1e-14


def test_gaussian_semigroup(small):
    rng = np.random.default_rng(3)
    f = sp.Field(rng.random(small.n_points), small)
    two = sp.gaussian_step(sp.gaussian_step(f, 0.7, 0.9), 1.3, 0.8)
    one = sp.gaussian_step(f, 2.0, 0.72)
    assert np.abs(two.values - one.values).max() <= 1e-10


def test_gaussian_preserves_mass(small):
    rng = np.random.default_rng(4)
    f = sp.Field(rng.random(small.n_points), small)
    assert sp.gaussian_step(f, 3.0, 1.0).values.sum() == pytest.approx(f.values.sum(), rel=1e-13)


@pytest.mark.parametrize("z", [0.1, 0.5, 1.0])
def test_constant_field_reduces_to_kinetics(canonical, small, z):
    out = sp.apply_Q(canonical, sp.Field.constant(small, z))
    ref = float(kinetics.qbar(canonical, z))
    assert np.abs(out.values - ref).max() <= 1e-8


def test_quadrature_refinement(canonical, small):
    f = sp.compact_initial(small, USTAR, 3.0)
    a = sp.apply_Q(canonical, f, n_quad=32).values
    b = sp.apply_Q(canonical, f, n_quad=64).values
    assert np.abs(a - b).max() <= 1e-8


def test_zero_is_fixed(canonical, small):
    assert sp.apply_Q(canonical, sp.Field.constant(small, 0.0)).max() == 0.0


def test_bump_spreads_and_persists(canonical, small):
    traj = sp.iterate_Q(canonical, sp.compact_initial(small, 0.2), 40)
    fronts = traj.front_positions[:traj.usable_years]
    assert np.all(np.diff(fronts[np.isfinite(fronts)]) > 0)
    assert traj.snapshots[-1].values[small.n_points // 2] == pytest.approx(USTAR, rel=0.01)


def test_extinction_below_threshold(canonical, small):
    p = with_threshold(canonical, 0.8)
    traj = sp.iterate_Q(p, sp.compact_initial(small, 0.5, 5.0), 30)
    maxima = [f.max() for f in traj.snapshots]
    assert maxima[-1] < 0.05 * maxima[0]


def test_reflection_equivariance(canonical, small):
    f = sp.compact_initial(small, 0.6, 2.0).shifted(37)
    a = sp.apply_Q(canonical, f.reflected()).values
    b = sp.apply_Q(canonical, f).reflected().values
    assert np.abs(a - b).max() <= 1e-13


def test_front_position_cases():
    x = np.linspace(0, 10, 11)
    v = np.clip(8 - x, 0, None) / 8
    assert sp.front_position(v, 0.5, x) == pytest.approx(4.0)
    assert sp.front_position(np.zeros(11), 0.5, x) is None
    assert sp.front_position(np.ones(11), 0.5, x) is None
    two = np.array([1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0], float)
    assert sp.front_position(two, 0.5, x) == pytest.approx(4.5)


def _synthetic(positions):
    g = sp.Grid(8.0, 16)
    snaps = [sp.Field.constant(g, 0.0)] * len(positions)
    return sp.Trajectory(snaps, np.asarray(positions, float), 0.5, len(positions))


def test_empirical_speed_synthetic():
    n = np.arange(41)
    traj = _synthetic(1.3 * n - 1.5 * np.log(np.maximum(n, 1)) + 2.0)
    est = sp.empirical_speed(traj)
    assert est.first_year == 14
    assert est.slope == pytest.approx(1.3, abs=1e-12)
    assert est.log_coefficient == pytest.approx(-1.5, abs=1e-10)
    assert est.raw_slope < 1.3


def test_empirical_speed_needs_points():
    with pytest.raises(DiagnosticError):
        sp.empirical_speed(_synthetic(np.arange(12.0)))
    pos = np.arange(41.0)
    pos[20:] = np.nan
    with pytest.raises(DiagnosticError):
        sp.empirical_speed(_synthetic(pos))


def test_empirical_speed_matches_variational(canonical, canonical_run):
    est = sp.empirical_speed(canonical_run)
    c = speed.cstar(canonical).cstar
    assert not canonical_run.contaminated
    assert abs(est.slope - c) / c < 0.05
    assert canonical_run.regime == "monotone"


def test_aligned_drift_settles(canonical_run):
    drift = sp.aligned_drift(canonical_run)
    tail = drift[15:]
    assert np.all(np.diff(tail) <= 1e-12)
    assert tail[-1] < 0.01


def test_contamination_flag(canonical):
    grid = sp.Grid(16.0, 512)
    traj = sp.iterate_Q(canonical, sp.compact_initial(grid, USTAR), 20)
    assert traj.contaminated
    assert traj.usable_years < 12
    assert traj.matrix().shape == (512, 22)


def test_non_monotone_regime_is_labelled(canonical, small):
    p = with_threshold(canonical, 3.0)
    assert sp.year_map(p, small).regime == "non-monotone regime"


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shift=st.integers(-500, 500))
def test_translation_equivariance(canonical, small, seed, shift):
    rng = np.random.default_rng(seed)
    f = sp.Field(USTAR * rng.random(small.n_points), small)
    a = sp.apply_Q(canonical, f.shifted(shift)).values
    b = sp.apply_Q(canonical, f).shifted(shift).values
    assert np.abs(a - b).max() <= 1e-10

import numpy as np
import pytest
from numpy.testing import assert_allclose

from msbvm.cdf import EmpiricalCDF, PiecewiseLinearCDF, refine_grid, sup_distance, sup_distance_grid_step
from msbvm.haar import CoefficientTree, PiecewiseConstantFn, analyze
from msbvm.kolmogorov import kolmogorov_cdf, kolmogorov_quantile, ks_one_sample, ks_two_sample


def dense_sup(a, b, t):
    return np.abs(a(t) - b(t)).max()


def test_single_point_against_uniform():
    U = PiecewiseLinearCDF.from_density(PiecewiseConstantFn.uniform())
    assert sup_distance(U, EmpiricalCDF([0.5])) == 0.5
    assert sup_distance(EmpiricalCDF([0.5]), U) == 0.5


def test_primitive_of_tree():
    f = PiecewiseConstantFn.normalized(2, [1, 3, 2, 2])
    F = PiecewiseLinearCDF.from_tree(analyze(f))
    G = PiecewiseLinearCDF.from_density(f)
    t = np.linspace(0, 1, 1001)
    assert_allclose(F(t), G(t), atol=1e-15)
    assert F(1.0) == pytest.approx(1.0)


def test_sup_distance_is_exact_against_step():
    rng = np.random.default_rng(0)
    f = PiecewiseConstantFn.normalized(4, rng.random(16) + 0.2)
    F = PiecewiseLinearCDF.from_density(f)
    x = rng.random(40)
    E = EmpiricalCDF(x)
    exact = sup_distance(F, E)
    # approach each jump from the left and right on a very fine grid
    t = np.concatenate([np.linspace(0, 1, 200_001), x - 1e-12, x])
    assert exact >= dense_sup(F, E, t) - 1e-12
    assert exact - dense_sup(F, E, t) < 1e-9


def test_batched_step_distance_matches_scalar():
    rng = np.random.default_rng(1)
    vals = np.cumsum(rng.random((7, 33)), axis=1)
    vals = np.concatenate([np.zeros((7, 1)), vals], axis=1)[:, :33]
    vals /= vals[:, -1:]
    E = EmpiricalCDF(rng.random(25))
    batch = sup_distance_grid_step(vals, 5, E)
    for i in range(7):
        assert batch[i] == sup_distance(PiecewiseLinearCDF(5, vals[i]), E)


def test_piecewise_linear_distance_across_levels():
    a = PiecewiseLinearCDF.from_density(PiecewiseConstantFn.normalized(1, [1, 3]))
    b = PiecewiseLinearCDF.from_density(PiecewiseConstantFn.normalized(3, np.arange(1, 9)))
    t = np.linspace(0, 1, 100_001)
    assert sup_distance(a, b) == pytest.approx(dense_sup(a, b, t), abs=1e-12)
    assert_allclose(refine_grid(a.values, 1, 3), a(np.arange(9) / 8))


def test_two_empirical_cdfs():
    a, b = EmpiricalCDF([0.1, 0.2, 0.9]), EmpiricalCDF([0.5])
    assert sup_distance(a, b) == pytest.approx(2 / 3)
    assert ks_two_sample([0.1, 0.2, 0.9], [0.5]) == pytest.approx(2 / 3)


def test_empirical_cdf_errors():
    with pytest.raises(ValueError):
        EmpiricalCDF([])
    with pytest.raises(ValueError):
        PiecewiseLinearCDF(2, np.zeros(4))


def test_kolmogorov_values():
    assert abs(kolmogorov_cdf(1.358) - 0.950) < 5e-4
    assert abs(kolmogorov_quantile(0.5) - 0.8276) < 1e-4
    assert kolmogorov_cdf(0.0) == 0.0
    assert kolmogorov_cdf(10.0) == 1.0


def test_kolmogorov_against_theta_series():
    # independent evaluation through the Jacobi theta form, valid for all x > 0
    x = np.linspace(0.2, 3.0, 57)
    k = np.arange(1, 200)[:, None]
    theta = np.sqrt(2 * np.pi) / x * np.exp(-((2 * k - 1) ** 2) * np.pi**2 / (8 * x**2)).sum(axis=0)
    assert_allclose(kolmogorov_cdf(x), theta, atol=1e-12)
    assert np.all(np.diff(kolmogorov_cdf(x)) > 0)


def test_kolmogorov_limit_of_uniform_ks():
    rng = np.random.default_rng(2)
    n = 2000
    u = np.sort(rng.random((2000, n)), axis=1)
    i = np.arange(1, n + 1)
    d = np.maximum(i / n - u, u - (i - 1) / n).max(axis=1) * np.sqrt(n)
    assert ks_one_sample(d) < 0.05


def test_zero_tree_primitive_is_flat():
    F = PiecewiseLinearCDF.from_tree(CoefficientTree.zeros(2))
    assert np.all(F.values == 0)

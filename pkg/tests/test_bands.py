import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from msbvm.bands import (
    CredibleBand,
    HolderConstraint,
    band_contains,
    band_diameter,
    band_statistics,
    cdf_band,
    credible_band,
    credible_radius,
    diameter_terms,
    ks_statistic,
    upper_quantile,
)
from msbvm.cdf import EmpiricalCDF, PiecewiseLinearCDF
from msbvm.haar import CoefficientTree, PiecewiseConstantFn, analyze, haar_synthesis, heap_index, holder_norm
from msbvm.multiscale import WeightSequence
from msbvm.priors import HistogramPrior, PosteriorDraws, histogram_posterior, point_mass_draws
from msbvm.sampling import empirical_coefficients, sample_iid

W = WeightSequence()


def two_bin_problem():
    rng = np.random.default_rng(0)
    f0 = PiecewiseConstantFn.normalized(2, [1.4, 1.0, 0.7, 0.9])
    s = sample_iid(f0, 60, rng)
    return s


def test_quantile_of_ranks():
    assert upper_quantile(np.arange(1, 101)[::-1], 0.05) == 95
    assert upper_quantile(np.arange(1, 101), 0.5) == 50
    with pytest.raises(ValueError):
        upper_quantile([], 0.1)
    with pytest.raises(ValueError):
        upper_quantile([1.0], 1.0)


def test_radius_zero_for_point_mass():
    T = CoefficientTree(np.array([1.0, 0.2, 0.1, -0.1]))
    d = point_mass_draws(T, 100, 400, 1)
    assert credible_radius(d, T, W, 0.05) == 0.0
    cb = cdf_band(d, PiecewiseLinearCDF.from_tree(T), 0.05)
    assert cb.radius == 0.0
    U = PiecewiseConstantFn.uniform()
    du = point_mass_draws(analyze(U), 100, 400, 3)
    assert cdf_band(du, PiecewiseLinearCDF.from_density(U), 0.05).radius == 0.0


def test_too_few_draws():
    T = CoefficientTree.zeros(1)
    d = point_mass_draws(T, 100, 100, 1)
    with pytest.raises(ValueError, match="too few"):
        credible_radius(d, T, W, 0.05)


def test_radius_matches_exact_beta_oracle():
    s = two_bin_problem()
    n = s.n
    T = empirical_coefficients(s, 1)
    d = histogram_posterior(HistogramPrior(1), s, 200_000, np.random.default_rng(1))
    R = credible_radius(d, T, W, 0.05)
    # independent: w0 ~ Beta(1 + N0, 1 + N1); only the level-0 coefficient moves
    N = s.counts(1)
    w0 = np.random.default_rng(2).beta(1 + N[0], 1 + N[1], size=1_000_000)
    level1 = np.abs(T.level(1)).max() / float(W(1))
    stat = math.sqrt(n) * np.maximum(np.abs(2 * w0 - 1 - T.level(0)[0]) / float(W(0)), level1)
    oracle = np.sort(stat)[math.ceil(0.95 * stat.size) - 1]
    assert abs(R / oracle - 1) < 0.02


def test_cdf_radius_matches_exact_beta_oracle():
    s = two_bin_problem()
    T = empirical_coefficients(s, 1)
    centre = PiecewiseLinearCDF.from_tree(T)
    d = histogram_posterior(HistogramPrior(1), s, 200_000, np.random.default_rng(3))
    R = cdf_band(d, centre, 0.05).radius
    N = s.counts(1)
    w0 = np.random.default_rng(4).beta(1 + N[0], 1 + N[1], size=1_000_000)[:, None]
    knots = np.array([0, 0.25, 0.5, 0.75, 1.0])
    F = np.where(knots <= 0.5, 2 * w0 * knots, w0 + 2 * (1 - w0) * (knots - 0.5))
    # the centring is the primitive of the level <= 1 empirical tree
    counts4 = s.counts(2) / s.n
    G = np.concatenate([[0], np.cumsum(counts4)])
    stat = math.sqrt(s.n) * np.abs(F - G).max(axis=1)
    oracle = np.sort(stat)[math.ceil(0.95 * stat.size) - 1]
    assert abs(R / oracle - 1) < 0.02


def test_cdf_band_requires_densities():
    d = PosteriorDraws(np.zeros((400, 4)), n=10, level=1, kind="regression")
    with pytest.raises(ValueError):
        ks_statistic(d, EmpiricalCDF([0.3]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49))
def test_radius_monotone_in_credibility(a1, a2):
    s = two_bin_problem()
    d = histogram_posterior(HistogramPrior(2), s, 2000, np.random.default_rng(5))
    T = empirical_coefficients(s, 2)
    lo, hi = sorted((a1, a2))
    assert credible_radius(d, T, W, lo) >= credible_radius(d, T, W, hi)


def test_membership_examples():
    T = CoefficientTree(np.array([1.0, 0.3, 0.1, -0.2]))
    b = CredibleBand(T, W, 1.5, 0.05, 100, 1)
    assert band_contains(b, T)
    c = np.array(T.coeffs)
    c[heap_index(1, 1)] += 2 * 1.5 / math.sqrt(100) * float(W(1))
    assert not band_contains(b, CoefficientTree(c))
    # Hölder part: a truth whose norm exceeds u_n is rejected
    rough = np.zeros(8)
    rough[heap_index(2, 0)] = 1.0
    gamma = 0.75
    hb = CredibleBand(CoefficientTree(rough), W, 10.0, 0.05, 100, 2, HolderConstraint(gamma, 0.5, 2))
    assert holder_norm(CoefficientTree(rough), gamma) > 0.5
    assert not band_contains(hb, CoefficientTree(rough))
    assert band_contains(CredibleBand(CoefficientTree(rough), W, 10.0, 0.05, 100, 2), CoefficientTree(rough))


def test_centring_always_inside():
    s = two_bin_problem()
    for L in (1, 2, 3):
        d = histogram_posterior(HistogramPrior(L), s, 400, np.random.default_rng(L))
        T = empirical_coefficients(s, L)
        assert band_contains(credible_band(d, T, W, 0.05), T)


def test_diameter_examples():
    b = CredibleBand(CoefficientTree.zeros(2), W, 0.0, 0.05, 100, 2, HolderConstraint(0.8, 0.0, 2))
    assert band_diameter(b) == 0.0
    b1 = CredibleBand(CoefficientTree.zeros(2), W, 1.0, 0.05, 100, 2, HolderConstraint(0.8, 1.0, 2))
    b2 = CredibleBand(CoefficientTree.zeros(2), W, 2.0, 0.05, 100, 2, HolderConstraint(0.8, 1.0, 2))
    assert math.isclose(diameter_terms(b2)[0], 2 * diameter_terms(b1)[0])
    assert diameter_terms(b2)[1] == diameter_terms(b1)[1]
    b3 = CredibleBand(CoefficientTree.zeros(2), W, 1.0, 0.05, 100, 2, HolderConstraint(0.8, 2.0, 2))
    assert math.isclose(band_diameter(b3) - diameter_terms(b3)[0], 2 * diameter_terms(b1)[1])
    with pytest.raises(ValueError):
        band_diameter(CredibleBand(CoefficientTree.zeros(2), W, 1.0, 0.05, 100, 2))


def test_diameter_bound_dominates_grid_search():
    # band on levels <= 1, Hölder constraint split at level 1, members up to level 2
    rng = np.random.default_rng(6)
    T = CoefficientTree(np.concatenate([[1.0], rng.normal(scale=0.1, size=3)]))
    n, R, gamma, u = 400, 2.0, 0.75, 0.4
    b = CredibleBand(T, W, R, 0.05, n, 1, HolderConstraint(gamma, u, 1))
    bound = band_diameter(b)
    axes = []
    for i in range(8):
        l = 0 if i < 2 else int(math.log2(i))
        if i < 4:
            half = float(W(max(l, 0))) * R / math.sqrt(n)
            lo, hi = T.coeffs[i] - half, T.coeffs[i] + half
            if i > 0:
                cap = u * 2 ** (-l * (gamma + 0.5))
                lo, hi = max(lo, -cap), min(hi, cap)
        else:
            cap = u * 2 ** (-2 * (gamma + 0.5))
            lo, hi = -cap, cap
        axes.append(np.linspace(lo, hi, 5))
    members = np.array(list(itertools.product(*axes)))
    assert np.all(b.contains_batch(members))
    values = haar_synthesis(members, 3)
    brute = (values.max(axis=0) - values.min(axis=0)).max()
    assert brute <= bound


def test_diameter_bound_dominates_member_pairs():
    f0 = PiecewiseConstantFn.normalized(6, 1 + 0.5 * np.abs(np.arange(64) / 64 - 1 / 3))
    rng = np.random.default_rng(7)
    s = sample_iid(f0, 4000, rng)
    L = 3
    d = histogram_posterior(HistogramPrior(L), s, 4000, rng)
    T = empirical_coefficients(s, L)
    hold = HolderConstraint.default(1.0, L, W)
    b = credible_band(d, T, W, 0.05, holder=hold)
    members = d.coeffs[b.contains_batch(d.coeffs)]
    assert members.shape[0] >= 100
    idx = rng.choice(members.shape[0], size=(50, 2), replace=False)
    values = haar_synthesis(members, L + 1)
    sup = np.abs(values[idx[:, 0]] - values[idx[:, 1]]).max(axis=1)
    assert sup.max() <= band_diameter(b)


def test_default_holder_radius():
    h = HolderConstraint.default(0.75, 4, W)
    assert math.isclose(h.u_n, float(W(4)) / 2)
    with pytest.raises(ValueError):
        HolderConstraint.default(0.75, 0, W)


def test_summary_serializes():
    b = CredibleBand(CoefficientTree.zeros(1), W, 1.0, 0.05, 100, 1, HolderConstraint(0.75, 1.0, 1))
    out = json.loads(json.dumps(b.summary("empirical")))
    assert set(out) == {"centring_id", "weights", "R_n", "alpha", "n", "level", "holder", "diameter_bound"}
    assert out["holder"]["u_n"] == 1.0


def test_statistics_use_band_level():
    T = CoefficientTree(np.array([1.0, 0.0, 0.0, 0.0]))
    draws = np.zeros((1, 8))
    draws[0, 0] = 1.0
    draws[0, heap_index(2, 0)] = 5.0
    d = PosteriorDraws(draws, n=4, level=1)
    assert band_statistics(d, T, W)[0] == 0.0
    assert band_statistics(d, T, W, level=2)[0] == pytest.approx(2 * 5.0 / float(W(2)))
    assert_allclose(ks_statistic(PosteriorDraws(np.array([[1.0, 0.0]]), n=1, level=0), EmpiricalCDF([0.5])), [0.5])

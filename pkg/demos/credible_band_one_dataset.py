"""Multiscale credible band for one simulated data set.

Draws n points from a density with a kink, samples the random histogram
posterior, and builds three sets: the multiscale band C_n, its intersection
with a Hölder ball, and the Kolmogorov band for the distribution function.
Run: python demos/credible_band_one_dataset.py
"""

import math

import numpy as np

from msbvm.bands import HolderConstraint, band_diameter, cdf_band, credible_band, diameter_terms
from msbvm.cdf import PiecewiseLinearCDF
from msbvm.haar import PiecewiseConstantFn, analyze
from msbvm.harness import kink_masses
from msbvm.multiscale import WeightSequence
from msbvm.priors import HistogramPrior, histogram_posterior
from msbvm.sampling import CutoffRule, cutoff, empirical_coefficients, sample_iid

rng = np.random.default_rng(1)
n, alpha, gamma = 5000, 0.05, 0.75

# truth: 1 + 0.5 |x - 1/3|^0.75 + 0.3 sin(2 pi x), stored on 2**12 cells
f0 = PiecewiseConstantFn.normalized(12, kink_masses(12, gamma, 0.5, 0.3, 1 / 3) * 2**12)
truth = analyze(f0)

data = sample_iid(f0, n, rng)
L = cutoff(CutoffRule("ln", gamma), n)
print(f"n = {n}, resolution level L = {L} ({2**L} histogram bins)")

draws = histogram_posterior(HistogramPrior(L), data, 2000, rng)
centre = empirical_coefficients(data, L)
w = WeightSequence()

band = credible_band(draws, centre, w, alpha)
print(f"R_n = {band.radius:.3f}; truth inside C_n: {band.contains_batch(truth.coeffs)[0]}")

hold = HolderConstraint.default(gamma, L, w)
hband = credible_band(draws, centre, w, alpha, holder=hold)
low, tail = diameter_terms(hband)
print(f"Hölder radius u_n = {hold.u_n:.3f}; truth inside: {hband.contains_batch(truth.coeffs)[0]}")
print(f"sup-norm diameter bound {band_diameter(hband):.3f} (resolved part {low:.3f}, tail {tail:.3f})")
print(f"reference rate (log n / n)^(gamma/(2 gamma+1)) = {(math.log(n) / n) ** (gamma / (2 * gamma + 1)):.3f}")

cb = cdf_band(draws, PiecewiseLinearCDF.from_tree(centre), alpha)
print(f"CDF band half-width {cb.radius / math.sqrt(n):.4f}; F0 inside: {cb.contains(PiecewiseLinearCDF.from_density(f0))}")

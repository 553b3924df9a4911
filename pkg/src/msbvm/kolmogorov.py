"""Kolmogorov distribution and Kolmogorov-Smirnov distances."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

SERIES_TOL = 1e-12


def kolmogorov_cdf(x) -> np.ndarray:
    """``K(x) = 1 - 2 sum_{k>=1} (-1)**(k-1) exp(-2 k**2 x**2)``.

    Terms are added until they drop below ``1e-12``. For small ``x`` the
    alternating series converges slowly, so below 0.3 (where ``K < 1e-7``)
    the value is computed from the equivalent theta-function form.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    flat_x, flat_out = x.ravel(), out.ravel()
    for i, xi in enumerate(flat_x):
        if xi <= 0:
            flat_out[i] = 0.0
        elif xi < 0.3:
            flat_out[i] = _theta_form(xi)
        else:
            flat_out[i] = _alternating_form(xi)
    return out if out.ndim else float(out)


def _alternating_form(x: float) -> float:
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < SERIES_TOL:
            break
        k += 1
    return min(max(1.0 - 2.0 * total, 0.0), 1.0)


def _theta_form(x: float) -> float:
    # K(x) = sqrt(2 pi) / x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
    total, k = 0.0, 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * x * x))
        total += term
        if term < SERIES_TOL * max(total, 1e-300) or term == 0.0:
            break
        k += 1
    return math.sqrt(2 * math.pi) / x * total


def kolmogorov_quantile(p: float, tol: float = 1e-10) -> float:
    """Inverse of ``kolmogorov_cdf`` by bisection."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while kolmogorov_cdf(hi) < p:
        hi *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_one_sample(x, cdf=kolmogorov_cdf) -> float:
    """Sup distance between the empirical CDF of ``x`` and a continuous ``cdf``."""
    return float(stats.kstest(np.asarray(x, dtype=float).ravel(), cdf).statistic)


def ks_two_sample(x, y) -> float:
    """Sup distance between the empirical CDFs of two samples."""
    return float(stats.ks_2samp(np.ravel(x), np.ravel(y)).statistic)

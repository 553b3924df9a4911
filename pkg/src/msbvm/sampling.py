"""Observation models: Gaussian white noise and i.i.d. sampling on [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cdf import EmpiricalCDF
from .haar import (
    CoefficientTree,
    PiecewiseConstantFn,
    cell_index,
    haar_analysis,
    resize_coeffs,
)


@dataclass(frozen=True)
class WhiteNoiseObservation:
    """Coefficients ``X_lk = f0_lk + g_lk / sqrt(n)`` for levels up to ``coeffs.max_level``."""

    n: int
    coeffs: CoefficientTree


@dataclass(frozen=True, eq=False)
class IidSample:
    points: np.ndarray

    def __post_init__(self):
        x = np.array(self.points, dtype=float).ravel()
        if np.any((x < 0) | (x > 1)) or not np.all(np.isfinite(x)):
            raise ValueError("sample points must lie in [0, 1]")
        x.setflags(write=False)
        object.__setattr__(self, "points", x)

    @property
    def n(self) -> int:
        return self.points.size

    def counts(self, level: int) -> np.ndarray:
        """Number of points in each dyadic cell of ``level``."""
        return np.bincount(cell_index(self.points, level), minlength=2**level)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, fmt="%.17g", header="x", comments="")

    @classmethod
    def from_csv(cls, path) -> IidSample:
        """Read a one-column CSV; a non-numeric first line is taken as a header."""
        text = Path(path).read_text().split()
        if text and not _is_number(text[0]):
            text = text[1:]
        return cls(np.array([float(t.split(",")[0]) for t in text]))

    def __repr__(self) -> str:
        return f"IidSample(n={self.n})"


def _is_number(s: str) -> bool:
    try:
        float(s.split(",")[0])
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class CutoffRule:
    """Resolution level as a function of the sample size.

    ``kind="jn"`` gives the largest ``j`` with ``2**j <= n**(1/(2 alpha + 1))``;
    ``kind="ln"`` uses ``n / log n`` in place of ``n``.
    """

    kind: str
    alpha: float

    def __post_init__(self):
        if self.kind not in ("jn", "ln"):
            raise ValueError(f"cutoff kind must be 'jn' or 'ln', not {self.kind!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def cutoff(rule: CutoffRule, n: int) -> int:
    if n < 2:
        raise ValueError("cutoff needs n >= 2")
    base = n if rule.kind == "jn" else n / math.log(n)
    # tolerance keeps exact powers of two (n = 4096, alpha = 1/2) from flooring down
    return max(math.floor(math.log2(base) / (2 * rule.alpha + 1) + 1e-12), 0)


def observe_white_noise(f0: CoefficientTree, n: int, J: int, rng: np.random.Generator) -> WhiteNoiseObservation:
    """Observe ``f0`` in white noise of level ``1/sqrt(n)`` on levels ``<= J``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    mean = resize_coeffs(f0.coeffs, J)
    g = rng.standard_normal(mean.shape)
    return WhiteNoiseObservation(n, CoefficientTree(mean + g / math.sqrt(n)))


def inverse_cdf(f: PiecewiseConstantFn, u) -> np.ndarray:
    """Quantile function of a piecewise constant density, for ``u`` in (0, 1]."""
    if not f.density:
        raise ValueError("inverse_cdf needs a density")
    u = np.asarray(u, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(f.masses)])
    cum[-1] = 1.0
    k = np.searchsorted(cum, u, side="left") - 1
    k = np.clip(k, 0, f.heights.size - 1)
    # zero-height cells carry no mass; move to the next cell with mass
    empty = f.heights[k] == 0
    if np.any(empty):
        positive = np.flatnonzero(f.heights > 0)
        k[empty] = positive[np.minimum(np.searchsorted(positive, k[empty]), positive.size - 1)]
    width = 2.0**-f.level
    x = k * width + (u - cum[k]) / f.heights[k]
    return np.clip(x, k * width, (k + 1) * width)


def sample_iid(f: PiecewiseConstantFn, n: int, rng: np.random.Generator) -> IidSample:
    """Exact inverse-CDF sample of size ``n`` from a piecewise constant density."""
    if not f.density:
        raise ValueError("sample_iid needs a density (PiecewiseConstantFn with density=True)")
    if n < 0:
        raise ValueError("n must be >= 0")
    u = 1.0 - rng.random(n)
    return IidSample(inverse_cdf(f, u))


def empirical_coefficients(s: IidSample, J: int) -> CoefficientTree:
    """Coefficients ``<P_n, psi_lk>`` for levels ``<= J``."""
    if s.n < 1:
        raise ValueError("empirical coefficients need at least one point")
    return CoefficientTree(counts_to_coeffs(s.counts(J + 1), s.n))


def counts_to_coeffs(counts, n: int) -> np.ndarray:
    """Empirical coefficients from level-``J + 1`` cell counts (batched)."""
    return haar_analysis(np.asarray(counts, dtype=float) / n)


def empirical_cdf(s: IidSample) -> EmpiricalCDF:
    return EmpiricalCDF(s.points)

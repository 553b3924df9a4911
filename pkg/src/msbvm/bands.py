"""Credible sets built from posterior draws: multiscale balls and CDF bands."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cdf import (
    EmpiricalCDF,
    PiecewiseLinearCDF,
    sup_distance_grid,
    sup_distance_grid_step,
    tree_cdf_values,
)
from .haar import CoefficientTree, holder_norm_batch, resize_coeffs
from .multiscale import WeightSequence, multiscale_norm_batch
from .priors import PosteriorDraws


def upper_quantile(stats, alpha: float) -> float:
    """Order statistic number ``ceil((1 - alpha) m)`` (1-based) of ``stats``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    x = np.sort(np.asarray(stats, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("no statistics")
    # tolerance keeps (1 - alpha) m = 95.0000000001 from rounding up to 96
    rank = math.ceil((1 - alpha) * x.size - 1e-9)
    return float(x[max(rank, 1) - 1])


def _check_draw_count(m: int, alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if m < 20 / alpha:
        raise ValueError(f"{m} draws are too few for alpha={alpha}; need at least {math.ceil(20 / alpha)}")


@dataclass(frozen=True)
class HolderConstraint:
    """Hölder ball ``{f : ||f||_{C^gamma} <= u_n}`` with split level ``j_n``."""

    gamma: float
    u_n: float
    j_n: int

    @classmethod
    def default(cls, gamma: float, j_n: int, w: WeightSequence) -> HolderConstraint:
        """Undersmoothing radius ``u_n = w_{j_n} / sqrt(j_n)``."""
        if j_n < 1:
            raise ValueError("j_n must be >= 1 for the default radius")
        return cls(gamma, float(w(j_n)) / math.sqrt(j_n), j_n)


@dataclass(frozen=True, eq=False)
class CredibleBand:
    """Multiscale ball ``max_{l <= level, k} |f_lk - T_lk| / w_l <= radius / sqrt(n)``.

    With ``holder`` set, the band is intersected with a Hölder ball.
    """

    centring: CoefficientTree
    weights: WeightSequence
    radius: float
    alpha: float
    n: int
    level: int
    holder: HolderConstraint | None = None

    def contains_batch(self, coeffs) -> np.ndarray:
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        diff = resize_coeffs(c, self.level) - resize_coeffs(self.centring.coeffs, self.level)
        # relative slack absorbs round-off when f is the draw that set the radius
        ok = math.sqrt(self.n) * multiscale_norm_batch(diff, self.weights) <= self.radius * (1 + 1e-12)
        if self.holder is not None:
            ok &= holder_norm_batch(c, self.holder.gamma) <= self.holder.u_n * (1 + 1e-12)
        return ok

    def summary(self, centring_id: str = "") -> dict:
        out = {
            "centring_id": centring_id,
            "weights": str(self.weights),
            "R_n": self.radius,
            "alpha": self.alpha,
            "n": self.n,
            "level": self.level,
            "holder": None,
            "diameter_bound": None,
        }
        if self.holder is not None:
            out["holder"] = {"gamma": self.holder.gamma, "u_n": self.holder.u_n, "j_n": self.holder.j_n}
            out["diameter_bound"] = band_diameter(self)
        return out


def band_statistics(
    d: PosteriorDraws, centring: CoefficientTree, w: WeightSequence, level: int | None = None
) -> np.ndarray:
    """``sqrt(n) ||draw - centring||_M(w)`` over levels ``<= level`` for every draw."""
    L = d.level if level is None else level
    diff = resize_coeffs(d.coeffs, L) - resize_coeffs(centring.coeffs, L)
    return math.sqrt(d.n) * multiscale_norm_batch(diff, w)


def credible_radius(
    d: PosteriorDraws,
    centring: CoefficientTree,
    w: WeightSequence,
    alpha: float,
    level: int | None = None,
) -> float:
    """Radius ``R_n`` giving the multiscale ball posterior mass ``1 - alpha``.

    Needs at least ``20 / alpha`` draws. ``level`` defaults to the prior's
    resolution ``d.level``.
    """
    _check_draw_count(d.m, alpha)
    return upper_quantile(band_statistics(d, centring, w, level), alpha)


def credible_band(
    d: PosteriorDraws,
    centring: CoefficientTree,
    w: WeightSequence,
    alpha: float,
    level: int | None = None,
    holder: HolderConstraint | None = None,
) -> CredibleBand:
    L = d.level if level is None else level
    R = credible_radius(d, centring, w, alpha, L)
    return CredibleBand(centring, w, R, alpha, d.n, L, holder)


def band_contains(b: CredibleBand, f: CoefficientTree) -> bool:
    return bool(b.contains_batch(f.coeffs)[0])


def diameter_terms(b: CredibleBand) -> tuple[float, float]:
    """Low- and high-frequency parts of the sup-norm diameter bound.

    Uses ``||h||_inf <= sum_l 2**(l/2) max_k |h_lk|`` for ``h = f - g``. Up
    to the split level each level is bounded through the multiscale ball,
    ``max_k |h_lk| <= 2 w_l R_n / sqrt(n)``; above it through the Hölder
    ball, ``max_k |h_lk| <= 2 u_n 2**(-l (gamma + 1/2))``, summed in closed
    form.
    """
    if b.holder is None:
        raise ValueError("the diameter bound needs a Hölder constraint")
    gamma, u = b.holder.gamma, b.holder.u_n
    split = min(b.holder.j_n, b.level)
    levels = np.arange(-1, split + 1)
    low = float(
        np.sum(2.0 ** (np.maximum(levels, 0) / 2) * 2 * b.weights(levels) * b.radius / math.sqrt(b.n))
    )
    tail = 2 * u * 2.0 ** (-(split + 1) * gamma) / (1 - 2.0**-gamma)
    return low, float(tail)


def band_diameter(b: CredibleBand) -> float:
    """Upper bound on ``sup ||f - g||_inf`` over the Hölder-intersected band."""
    low, tail = diameter_terms(b)
    return low + tail


@dataclass(frozen=True, eq=False)
class CdfBand:
    """Sup-norm ball of radius ``radius / sqrt(n)`` around a centring CDF."""

    centring: PiecewiseLinearCDF | EmpiricalCDF
    radius: float
    alpha: float
    n: int

    def distance(self, cdf: PiecewiseLinearCDF) -> float:
        return float(_sup_to_centring(cdf.values, cdf.level, self.centring))

    def contains(self, cdf: PiecewiseLinearCDF) -> bool:
        return math.sqrt(self.n) * self.distance(cdf) <= self.radius * (1 + 1e-12)


def _sup_to_centring(values, level, centring) -> np.ndarray:
    if isinstance(centring, EmpiricalCDF):
        return sup_distance_grid_step(values, level, centring)
    return sup_distance_grid(values, level, centring.values, centring.level)


def ks_statistic(d: PosteriorDraws, centring, n: int | None = None) -> np.ndarray:
    """``sqrt(n) sup_t |F(t) - centring(t)|`` for the CDF of every draw."""
    if d.kind != "density":
        raise ValueError("CDF statistics need density draws")
    n = d.n if n is None else n
    values, level = tree_cdf_values(d.coeffs)
    return math.sqrt(n) * _sup_to_centring(values, level, centring)


def cdf_band(d: PosteriorDraws, centring, alpha: float, n: int | None = None) -> CdfBand:
    """Credible band for the distribution function with posterior mass ``1 - alpha``."""
    _check_draw_count(d.m, alpha)
    n = d.n if n is None else n
    return CdfBand(centring, upper_quantile(ks_statistic(d, centring, n), alpha), alpha, n)

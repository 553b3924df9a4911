"""Distribution functions on [0, 1] and exact sup-distances between them.

Primitives of Haar series are piecewise linear with knots on a dyadic grid;
empirical distribution functions are right-continuous step functions. The
sup-distance between two such functions is attained at a knot or at a jump
(one of its two one-sided limits), so evaluating on the union of those points
is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haar import _log2_exact, haar_synthesis

_CHUNK = 2_000_000


def tree_cdf_values(coeffs) -> tuple[np.ndarray, int]:
    """Grid values of the primitive ``t -> int_0^t f`` for heap coefficients.

    Returns ``(values, level)`` where ``values[..., i]`` is the primitive at
    ``i * 2**-level`` and ``level = max_level + 1``.
    """
    c = np.asarray(coeffs, dtype=float)
    level = _log2_exact(c.shape[-1])
    heights = haar_synthesis(c, level)
    values = np.zeros(c.shape[:-1] + (2**level + 1,))
    np.cumsum(heights * 2.0**-level, axis=-1, out=values[..., 1:])
    return values, level


def refine_grid(values, level: int, new_level: int) -> np.ndarray:
    """Values of a piecewise linear function on a finer dyadic grid."""
    v = np.asarray(values, dtype=float)
    if new_level == level:
        return v
    if new_level < level:
        raise ValueError("can only refine to a finer grid")
    r = 2 ** (new_level - level)
    i = np.arange(2**new_level + 1)
    idx = np.minimum(i // r, 2**level - 1)
    frac = (i - idx * r) / r
    return v[..., idx] + frac * (v[..., idx + 1] - v[..., idx])


def _eval_grid(values, level: int, x) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    u = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * 2.0**level
    idx = np.minimum(np.floor(u).astype(np.int64), 2**level - 1)
    frac = u - idx
    return v[..., idx] + frac * (v[..., idx + 1] - v[..., idx])


@dataclass(frozen=True, eq=False)
class PiecewiseLinearCDF:
    """Continuous piecewise linear function with knots at ``i * 2**-level``."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape[-1] != 2**self.level + 1:
            raise ValueError(f"expected {2**self.level + 1} grid values, got {v.shape[-1]}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_tree(cls, tree) -> PiecewiseLinearCDF:
        values, level = tree_cdf_values(tree.coeffs)
        return cls(level, values)

    @classmethod
    def from_density(cls, f) -> PiecewiseLinearCDF:
        return cls(f.level, np.concatenate([[0.0], np.cumsum(f.masses)]))

    @property
    def knots(self) -> np.ndarray:
        return np.arange(2**self.level + 1) / 2.0**self.level

    def __call__(self, t) -> np.ndarray:
        return _eval_grid(self.values, self.level, t)


class EmpiricalCDF:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, points):
        x = np.sort(np.asarray(points, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        self.points = x
        self.n = x.size
        self.points.setflags(write=False)

    def __call__(self, t) -> np.ndarray:
        return np.searchsorted(self.points, t, side="right") / self.n

    def left_limit(self, t) -> np.ndarray:
        return np.searchsorted(self.points, t, side="left") / self.n

    def __repr__(self) -> str:
        return f"EmpiricalCDF(n={self.n})"


def sup_distance_grid(a_values, a_level: int, b_values, b_level: int) -> np.ndarray:
    """Sup-distance between piecewise linear functions (batched over rows)."""
    level = max(a_level, b_level)
    a = refine_grid(a_values, a_level, level)
    b = refine_grid(b_values, b_level, level)
    return np.abs(a - b).max(axis=-1)


def sup_distance_grid_step(values, level: int, ecdf: EmpiricalCDF) -> np.ndarray:
    """Sup-distance between piecewise linear functions and an empirical CDF.

    ``values`` may carry leading batch axes; work is chunked so the
    intermediate ``batch x n`` arrays stay bounded.
    """
    v = np.asarray(values, dtype=float)
    batch_shape = v.shape[:-1]
    v2 = v.reshape(-1, v.shape[-1])
    x = ecdf.points
    at = ecdf(x)
    before = ecdf.left_limit(x)
    knots = np.arange(2**level + 1) / 2.0**level
    at_knots = ecdf(knots)
    out = np.abs(v2 - at_knots).max(axis=-1)
    rows = max(1, _CHUNK // max(x.size, 1))
    for start in range(0, v2.shape[0], rows):
        block = v2[start : start + rows]
        Fx = _eval_grid(block, level, x)
        d = np.maximum(np.abs(Fx - at), np.abs(Fx - before)).max(axis=-1)
        out[start : start + rows] = np.maximum(out[start : start + rows], d)
    return out.reshape(batch_shape)


def sup_distance(a, b) -> float:
    """Exact sup-distance between two CDF objects of this module."""
    if isinstance(a, EmpiricalCDF) and isinstance(b, EmpiricalCDF):
        t = np.union1d(a.points, b.points)
        return float(
            max(np.abs(a(t) - b(t)).max(), np.abs(a.left_limit(t) - b.left_limit(t)).max())
        )
    if isinstance(a, EmpiricalCDF):
        a, b = b, a
    if isinstance(b, EmpiricalCDF):
        return float(sup_distance_grid_step(a.values, a.level, b))
    return float(sup_distance_grid(a.values, a.level, b.values, b.level))

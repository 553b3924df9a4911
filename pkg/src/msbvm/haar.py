"""Haar wavelets on [0, 1]: coefficient trees, analysis and synthesis.

Coefficients are stored in heap order: index 0 holds the scaling coefficient
(the coefficient of the indicator of [0, 1], level -1) and index ``2**l + k``
holds ``x_{lk}``. A tree of maximal level ``J`` therefore has ``2**(J + 1)``
entries and synthesizes to a piecewise constant function on the ``2**(J + 1)``
dyadic cells of level ``J + 1``.

Cells are half-open on the left, ``I_0 = [0, 2**-L]`` and
``I_k = (k 2**-L, (k + 1) 2**-L]``, so a point on a cell boundary belongs to
the cell on its left. The mother wavelet is positive on the left half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when a level argument is incompatible with the stored levels."""


def level_slice(l: int) -> slice:
    """Heap slice of level ``l``; level -1 is the scaling coefficient."""
    if l < 0:
        return slice(0, 1)
    return slice(2**l, 2 ** (l + 1))


def heap_index(l: int, k: int) -> int:
    return 0 if l < 0 else 2**l + k


def heap_levels(max_level: int) -> np.ndarray:
    """Level label of every heap position, with -1 for the scaling slot."""
    out = np.empty(2 ** (max_level + 1), dtype=int)
    out[0] = -1
    for l in range(max_level + 1):
        out[level_slice(l)] = l
    return out


def _log2_exact(size: int) -> int:
    J = int(size).bit_length() - 1
    if size < 1 or 2**J != size:
        raise DimensionError(f"length {size} is not a power of two")
    return J


def cell_index(x, level: int) -> np.ndarray:
    """Index of the level-``level`` dyadic cell containing each point of ``x``."""
    x = np.asarray(x, dtype=float)
    k = np.ceil(x * 2.0**level).astype(np.int64) - 1
    return np.clip(k, 0, 2**level - 1)


def haar_analysis(masses) -> np.ndarray:
    """Haar coefficients of the signed measures with the given cell masses.

    ``masses[..., k]`` is the mass of cell ``k`` at level ``M`` (the last axis
    has length ``2**M``). For a density with heights ``h`` the masses are
    ``h * 2**-M``; for an empirical measure they are the cell frequencies.
    Leading axes are treated as a batch. The result has maximal level
    ``max(M - 1, 0)``.
    """
    s = np.asarray(masses, dtype=float)
    M = _log2_exact(s.shape[-1])
    out = np.zeros(s.shape[:-1] + (max(2**M, 2),))
    for l in range(M - 1, -1, -1):
        left, right = s[..., 0::2], s[..., 1::2]
        out[..., level_slice(l)] = 2.0 ** (l / 2) * (left - right)
        s = left + right
    out[..., 0] = s[..., 0]
    return out


def haar_synthesis(coeffs, level: int) -> np.ndarray:
    """Cell values at ``level`` of the Haar series with heap coefficients."""
    c = np.asarray(coeffs, dtype=float)
    J = _log2_exact(c.shape[-1]) - 1
    if level < J + 1:
        raise DimensionError(
            f"cannot synthesize a level-{J} tree on level {level} cells; "
            f"need level >= {J + 1}"
        )
    v = c[..., :1]
    for l in range(J + 1):
        d = 2.0 ** (l / 2) * c[..., level_slice(l)]
        v = np.stack([v + d, v - d], axis=-1).reshape(c.shape[:-1] + (2 ** (l + 1),))
    if level > J + 1:
        v = np.repeat(v, 2 ** (level - J - 1), axis=-1)
    return v


def basis_matrix(max_level: int, level: int) -> np.ndarray:
    """Values of every basis function (rows, heap order) on the cells of ``level``."""
    return haar_synthesis(np.eye(2 ** (max_level + 1)), level)


def resize_coeffs(coeffs, max_level: int) -> np.ndarray:
    """Zero-pad or truncate heap coefficients to the given maximal level."""
    c = np.asarray(coeffs, dtype=float)
    size = 2 ** (max_level + 1)
    if c.shape[-1] >= size:
        return c[..., :size].copy()
    out = np.zeros(c.shape[:-1] + (size,))
    out[..., : c.shape[-1]] = c
    return out


@dataclass(frozen=True, eq=False)
class CoefficientTree:
    """Haar coefficients ``x_{lk}`` for levels ``-1..max_level`` in heap order."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size < 2:
            raise DimensionError("a coefficient tree needs at least levels -1 and 0")
        _log2_exact(c.size)
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, max_level: int) -> CoefficientTree:
        return cls(np.zeros(2 ** (max_level + 1)))

    @classmethod
    def from_levels(cls, scaling: float, details) -> CoefficientTree:
        """Build from the scaling coefficient and a list of per-level arrays."""
        parts = [np.atleast_1d(float(scaling))]
        for l, d in enumerate(details):
            d = np.asarray(d, dtype=float)
            if d.shape != (2**l,):
                raise DimensionError(f"level {l} needs {2**l} entries, got {d.shape}")
            parts.append(d)
        return cls(np.concatenate(parts))

    @classmethod
    def unit(cls, l: int, k: int, max_level: int | None = None) -> CoefficientTree:
        J = max(l, 0) if max_level is None else max_level
        c = np.zeros(2 ** (J + 1))
        c[heap_index(l, k)] = 1.0
        return cls(c)

    @property
    def max_level(self) -> int:
        return self.coeffs.size.bit_length() - 2

    @property
    def scaling(self) -> float:
        return float(self.coeffs[0])

    def level(self, l: int) -> np.ndarray:
        if l > self.max_level:
            raise DimensionError(f"level {l} exceeds max_level {self.max_level}")
        return self.coeffs[level_slice(l)]

    @property
    def detail(self) -> list[np.ndarray]:
        return [self.level(l) for l in range(self.max_level + 1)]

    def resized(self, max_level: int) -> CoefficientTree:
        return CoefficientTree(resize_coeffs(self.coeffs, max_level))

    def __add__(self, other: CoefficientTree) -> CoefficientTree:
        J = max(self.max_level, other.max_level)
        return CoefficientTree(resize_coeffs(self.coeffs, J) + resize_coeffs(other.coeffs, J))

    def __sub__(self, other: CoefficientTree) -> CoefficientTree:
        J = max(self.max_level, other.max_level)
        return CoefficientTree(resize_coeffs(self.coeffs, J) - resize_coeffs(other.coeffs, J))

    def __mul__(self, a: float) -> CoefficientTree:
        return CoefficientTree(self.coeffs * float(a))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientTree):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.array_equal(self.coeffs, other.coeffs)
        )

    def allclose(self, other: CoefficientTree, atol: float = 1e-12) -> bool:
        J = max(self.max_level, other.max_level)
        return bool(
            np.allclose(
                resize_coeffs(self.coeffs, J), resize_coeffs(other.coeffs, J), rtol=0, atol=atol
            )
        )

    def __repr__(self) -> str:
        return f"CoefficientTree(max_level={self.max_level}, scaling={self.scaling:.6g})"


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Function equal to ``heights[k]`` on the level-``level`` dyadic cell ``k``.

    With ``density=True`` the heights are checked to be nonnegative and to
    integrate to one within 1e-12.
    """

    level: int
    heights: np.ndarray
    density: bool = False

    def __post_init__(self):
        h = np.array(self.heights, dtype=float).ravel()
        if self.level < 0 or h.size != 2**self.level:
            raise DimensionError(f"level {self.level} needs {2**max(self.level, 0)} heights")
        if not np.all(np.isfinite(h)):
            raise ValueError("heights must be finite")
        if self.density:
            if np.any(h < 0):
                raise ValueError("density heights must be nonnegative")
            total = h.sum() * 2.0**-self.level
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"density integrates to {total!r}, not 1")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @classmethod
    def uniform(cls) -> PiecewiseConstantFn:
        return cls(0, np.ones(1), density=True)

    @classmethod
    def normalized(cls, level: int, heights) -> PiecewiseConstantFn:
        """Density proportional to ``heights`` (renormalized exactly)."""
        h = np.asarray(heights, dtype=float)
        return cls(level, h / (h.sum() * 2.0**-level), density=True)

    @property
    def masses(self) -> np.ndarray:
        return self.heights * 2.0**-self.level

    def integral(self) -> float:
        return float(self.masses.sum())

    def __call__(self, x) -> np.ndarray:
        return self.heights[cell_index(x, self.level)]

    def refined(self, level: int) -> PiecewiseConstantFn:
        if level < self.level:
            raise DimensionError("can only refine to a finer level")
        h = np.repeat(self.heights, 2 ** (level - self.level))
        return PiecewiseConstantFn(level, h, density=self.density)


def analyze(f: PiecewiseConstantFn) -> CoefficientTree:
    """Exact Haar coefficients of a piecewise constant function.

    The result has ``max_level = f.level - 1`` (level 0 for a constant).
    """
    return CoefficientTree(haar_analysis(f.masses))


def synthesize(c: CoefficientTree, level: int | None = None, density: bool = False) -> PiecewiseConstantFn:
    """Piecewise constant function on ``level`` cells with coefficients ``c``."""
    if level is None:
        level = c.max_level + 1
    return PiecewiseConstantFn(level, haar_synthesis(c.coeffs, level), density=density)


def evaluate(c: CoefficientTree, x) -> np.ndarray:
    """Pointwise value of the Haar series at ``x``."""
    L = c.max_level + 1
    return haar_synthesis(c.coeffs, L)[cell_index(x, L)]


def holder_norm(c: CoefficientTree, s: float) -> float:
    """Wavelet Hölder norm ``sup_{l >= 0, k} 2**(l (s + 1/2)) |x_{lk}|``.

    Only stored levels enter, so for a function with coefficients beyond
    ``max_level`` this is a lower bound of the full norm. The scaling
    coefficient is excluded.
    """
    if s < 0:
        raise ValueError("smoothness s must be nonnegative")
    return float(holder_norm_batch(c.coeffs, s))


def holder_norm_batch(coeffs, s: float) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    J = _log2_exact(c.shape[-1]) - 1
    out = np.zeros(c.shape[:-1])
    for l in range(J + 1):
        out = np.maximum(out, 2.0 ** (l * (s + 0.5)) * np.abs(c[..., level_slice(l)]).max(axis=-1))
    return out

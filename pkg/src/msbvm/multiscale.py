"""Multiscale sequence spaces M(w): weights, norms and Gaussian elements.

Functions named ``*_batch`` take raw heap-ordered coefficient arrays with
arbitrary leading batch axes; the tree-level functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .haar import (
    CoefficientTree,
    DimensionError,
    PiecewiseConstantFn,
    _log2_exact,
    basis_matrix,
    haar_analysis,
    level_slice,
    resize_coeffs,
)

ADMISSIBILITY_PROBE = 64
CHOLESKY_MAX_LEVEL = 12


def _sqrt_log(l):
    return np.maximum(1.0, np.sqrt(l + 1.0) * np.log(l + math.e))


def _sqrt(l):
    return np.maximum(1.0, np.sqrt(l + 1.0))


@dataclass(frozen=True)
class WeightSequence:
    """Multiscale weights ``w_l`` for ``l >= 0``.

    Built-in generators are ``sqrt_log`` (the default admissible choice),
    ``sqrt`` and ``power`` with exponent ``p``. ``admissible`` records whether
    ``w_l / sqrt(l)`` is strictly increasing on ``1 <= l <= 64``; divergence
    to infinity cannot be checked on a finite range.
    """

    name: str = "sqrt_log"
    p: float | None = None
    rule: Callable | None = field(default=None, compare=False, repr=False)
    admissible: bool = field(init=False)

    def __post_init__(self):
        if self.rule is None:
            if self.name == "sqrt_log":
                rule = _sqrt_log
            elif self.name == "sqrt":
                rule = _sqrt
            elif self.name == "power":
                if self.p is None or self.p < 0:
                    raise ValueError("power weights need an exponent p >= 0")
                p = float(self.p)
                rule = lambda l: (l + 1.0) ** p  # noqa: E731
            else:
                raise ValueError(f"unknown weight generator {self.name!r}")
            object.__setattr__(self, "rule", rule)
        probe = np.arange(ADMISSIBILITY_PROBE + 1, dtype=float)
        w = np.asarray(self.rule(probe), dtype=float)
        if np.any(w < 1) or np.any(np.diff(w) < 0):
            raise ValueError(f"weights {self.name!r} must be >= 1 and nondecreasing")
        ratio = w[1:] / np.sqrt(probe[1:])
        object.__setattr__(self, "admissible", bool(np.all(np.diff(ratio) > 0)))

    @classmethod
    def parse(cls, text: str) -> WeightSequence:
        """Parse ``sqrt_log``, ``sqrt`` or ``power(p)``."""
        text = text.strip()
        if text.startswith("power(") and text.endswith(")"):
            return cls("power", p=float(text[6:-1]))
        return cls(text)

    def __str__(self) -> str:
        return f"power({self.p:g})" if self.name == "power" else self.name

    def __call__(self, l) -> np.ndarray:
        return np.asarray(self.rule(np.maximum(np.asarray(l, dtype=float), 0.0)), dtype=float)

    def per_level(self, max_level: int) -> np.ndarray:
        """Weights for levels -1..max_level; the scaling level reuses ``w_0``."""
        return self(np.arange(-1, max_level + 1))

    def heap(self, max_level: int) -> np.ndarray:
        """Weight of every heap position of a level-``max_level`` tree."""
        w = self.per_level(max_level)
        out = np.empty(2 ** (max_level + 1))
        out[0] = w[0]
        for l in range(max_level + 1):
            out[level_slice(l)] = w[l + 1]
        return out


def _level_max(coeffs, max_level: int) -> np.ndarray:
    """``max_k |x_{lk}|`` for levels -1..max_level, stacked on the last axis."""
    c = np.abs(np.asarray(coeffs, dtype=float))
    return np.stack(
        [c[..., level_slice(l)].max(axis=-1) for l in range(-1, max_level + 1)], axis=-1
    )


def multiscale_norm_batch(coeffs, w: WeightSequence, max_level: int | None = None) -> np.ndarray:
    """``sup_l max_k |x_{lk}| / w_l`` over levels ``<= max_level``."""
    c = np.asarray(coeffs, dtype=float)
    J = _log2_exact(c.shape[-1]) - 1
    if max_level is None:
        max_level = J
    c = resize_coeffs(c, max_level)
    return (_level_max(c, max_level) / w.per_level(max_level)).max(axis=-1)


def multiscale_norm(c: CoefficientTree, w: WeightSequence) -> float:
    """Norm of ``c`` in M(w) over the stored levels."""
    return float(multiscale_norm_batch(c.coeffs, w))


def statistic_divisors(max_level: int) -> np.ndarray:
    """Per-level divisors of the multiscale statistic: 1 for l <= 0, sqrt(l) after."""
    l = np.arange(-1, max_level + 1, dtype=float)
    return np.sqrt(np.maximum(l, 1.0))


def multiscale_statistic_batch(coeffs, J: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    stored = _log2_exact(c.shape[-1]) - 1
    if J > stored:
        raise DimensionError(f"J={J} exceeds stored max_level {stored}")
    return (_level_max(c, J) / statistic_divisors(J)).max(axis=-1)


def multiscale_statistic(c: CoefficientTree, J: int) -> float:
    """Multiscale statistic ``max_{l <= J, k} |x_{lk}| / sqrt(l)``.

    Levels -1 and 0 are divided by 1.
    """
    return float(multiscale_statistic_batch(c.coeffs, J))


def h_delta_norm_batch(coeffs, delta: float) -> np.ndarray:
    if delta <= 0:
        raise ValueError("delta must be positive")
    c = np.asarray(coeffs, dtype=float)
    J = _log2_exact(c.shape[-1]) - 1
    total = c[..., 0] ** 2
    for l in range(J + 1):
        total = total + 2.0**-l * max(l, 1) ** (-2 * delta) * (c[..., level_slice(l)] ** 2).sum(axis=-1)
    return np.sqrt(total)


def h_delta_norm(c: CoefficientTree, delta: float) -> float:
    """Negative-Sobolev norm ``(sum_l 2**-l l**(-2 delta) sum_k x_{lk}**2)**(1/2)``.

    Levels -1 and 0 enter with unit factor (``l`` replaced by 1).
    """
    return float(h_delta_norm_batch(c.coeffs, delta))


def h_delta_constant(w: WeightSequence, delta: float, max_level: int) -> float:
    """Constant C with ``||x||_H(delta) <= C ||x||_M(w)`` on levels ``<= max_level``."""
    wl = w.per_level(max_level)
    l = np.maximum(np.arange(-1, max_level + 1), 1)
    return float(np.sqrt(np.sum(wl**2 * l ** (-2.0 * delta))))


def project(c: CoefficientTree, J: int) -> CoefficientTree:
    """Projection onto the span of levels ``<= J`` (higher levels set to zero)."""
    if J >= c.max_level:
        return c
    out = np.array(c.coeffs)
    out[2 ** (J + 1) :] = 0.0
    return CoefficientTree(out)


@dataclass(frozen=True)
class WhiteNoise:
    """Gaussian white noise: i.i.d. N(0, 1) coefficients."""


@dataclass(frozen=True, eq=False)
class WhiteBridge:
    """P-white bridge for a law P with bounded piecewise constant density."""

    density: PiecewiseConstantFn

    def __post_init__(self):
        f = self.density
        if not f.density:
            f = PiecewiseConstantFn(f.level, f.heights, density=True)
            object.__setattr__(self, "density", f)
        if f.heights.min() <= 0:
            raise ValueError("white bridge density must be bounded away from zero")

    def cell_masses(self, level: int) -> np.ndarray:
        """Masses of P on the cells of ``level``."""
        f = self.density
        if level >= f.level:
            return np.repeat(f.masses * 2.0 ** (f.level - level), 2 ** (level - f.level))
        return f.masses.reshape(2**level, -1).sum(axis=1)


GaussianProcessKind = Union[WhiteNoise, WhiteBridge]


def bridge_covariance(kind: WhiteBridge, J: int) -> np.ndarray:
    """Exact covariance of ``(G_P(psi_lk))`` for levels -1..J, heap order."""
    M = max(J + 1, kind.density.level)
    B = basis_matrix(J, M)
    p = kind.cell_masses(M)
    mean = B @ p
    return (B * p) @ B.T - np.outer(mean, mean)


def sample_gaussian(
    kind: GaussianProcessKind,
    J: int,
    rng: np.random.Generator,
    size: int | None = None,
    method: str = "increments",
):
    """Draw the coefficients of white noise or a P-white bridge up to level ``J``.

    The bridge is exact with either method. ``"increments"`` builds the
    Gaussian limit of the centred multinomial cell frequencies at level
    ``J + 1`` and analyzes it. ``"cholesky"`` factors the dense covariance
    and is limited to ``J <= 12``.

    Returns a ``CoefficientTree`` when ``size`` is None, otherwise an array of
    shape ``(size, 2**(J + 1))``.
    """
    if J < 0:
        raise DimensionError("J must be >= 0")
    dim = 2 ** (J + 1)
    shape = (1 if size is None else size, dim)
    if isinstance(kind, WhiteNoise):
        x = rng.standard_normal(shape)
    elif isinstance(kind, WhiteBridge):
        if method == "increments":
            p = kind.cell_masses(J + 1)
            xi = rng.standard_normal(shape)
            z = np.sqrt(p) * xi - np.outer(xi @ np.sqrt(p), p)
            x = haar_analysis(z)
        elif method == "cholesky":
            if J > CHOLESKY_MAX_LEVEL:
                raise DimensionError(
                    f"dense Cholesky is limited to J <= {CHOLESKY_MAX_LEVEL}; "
                    "use method='increments' (independent cell increments) instead"
                )
            x = rng.standard_normal(shape) @ _bridge_factor(kind, J).T
        else:
            raise ValueError(f"unknown method {method!r}")
    else:
        raise TypeError(f"unsupported process kind {kind!r}")
    if size is None:
        return CoefficientTree(x[0])
    return x


def _bridge_factor(kind: WhiteBridge, J: int) -> np.ndarray:
    cov = bridge_covariance(kind, J)
    # the scaling direction has zero variance; drop it and jitter the rest
    sub = cov[1:, 1:]
    jitter = 1e-12 * max(float(np.trace(sub)) / sub.shape[0], 1.0)
    try:
        chol = np.linalg.cholesky(sub + jitter * np.eye(sub.shape[0]))
    except np.linalg.LinAlgError as err:
        eig = np.linalg.eigvalsh(sub)
        raise np.linalg.LinAlgError(
            f"bridge covariance not positive definite after jitter {jitter:.3g}: "
            f"min eigenvalue {eig.min():.3g}, max {eig.max():.3g}"
        ) from err
    factor = np.zeros_like(cov)
    factor[1:, 1:] = chol
    return factor

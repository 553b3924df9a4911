"""Priors on functions and densities, and exact or MCMC posterior samplers.

Three families are covered:

* random dyadic histograms with a Dirichlet prior on the bin weights
  (conjugate under multinomial cell counts),
* product series priors in the white noise model, with Gaussian (conjugate)
  or uniform coordinate laws,
* log-density series priors ``f = exp(T - c(T))`` with ``T`` a truncated Haar
  series, sampled by an adaptive random-walk Metropolis chain.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from .haar import (
    CoefficientTree,
    _log2_exact,
    haar_analysis,
    haar_synthesis,
    heap_levels,
    resize_coeffs,
)
from .sampling import CutoffRule, IidSample, WhiteNoiseObservation, cutoff


@dataclass(frozen=True, eq=False)
class HistogramPrior:
    """Dirichlet prior on the bin weights of a level-``level`` histogram.

    ``alphas`` defaults to all ones. When ``bounds=(a, c1, c2)`` is given the
    parameters are checked against ``c1 2**(-level a) <= alpha_k <= c2``.
    """

    level: int
    alphas: np.ndarray | None = None
    bounds: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("histogram level must be >= 0")
        a = np.ones(2**self.level) if self.alphas is None else np.array(self.alphas, dtype=float)
        if a.shape != (2**self.level,):
            raise ValueError(f"need {2**self.level} Dirichlet parameters, got {a.shape}")
        if np.any(a <= 0):
            raise ValueError("Dirichlet parameters must be positive")
        if self.bounds is not None:
            expo, c1, c2 = self.bounds
            if np.any(a < c1 * 2.0 ** (-self.level * expo)) or np.any(a > c2):
                raise ValueError("Dirichlet parameters violate the configured bounds")
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)

    @classmethod
    def from_cutoff(cls, rule: CutoffRule, n: int, concentration: float = 1.0) -> HistogramPrior:
        L = cutoff(rule, n)
        return cls(L, np.full(2**L, concentration))


def sigma_heap(max_level: int, exponent: float) -> np.ndarray:
    """Scales ``2**(-l (exponent + 1/2))`` per heap slot; the scaling slot gets 1."""
    l = np.maximum(heap_levels(max_level), 0)
    return 2.0 ** (-l * (exponent + 0.5))


@dataclass(frozen=True)
class SeriesPriorWN:
    """Product prior ``f_lk = sigma_l phi_lk`` in the white noise model.

    ``sigma_l = 2**(-l (alpha + 1/2))``. ``base`` is ``"gaussian"`` or
    ``"uniform"`` (``phi`` uniform on ``[-B, B]``).
    """

    alpha: float
    base: str = "gaussian"
    B: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.base not in ("gaussian", "uniform"):
            raise ValueError(f"unknown base density {self.base!r}")
        if self.base == "uniform" and (self.B is None or self.B <= 0):
            raise ValueError("uniform base density needs B > 0")

    def sigma(self, max_level: int) -> np.ndarray:
        return sigma_heap(max_level, self.alpha)


@functools.lru_cache(maxsize=None)
def loglipschitz_constant(tau: float) -> float:
    """Normalizing constant of ``exp(-(1 + |x|)**(1 - tau))`` on the real line."""
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    half, _ = integrate.quad(
        lambda x: math.exp(-((1 + x) ** (1 - tau))), 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=500
    )
    return 1.0 / (2 * half)


@dataclass(frozen=True)
class LogDensityPrior:
    """Prior on densities ``exp(T - c(T))``, ``T = sum_{l <= level} sigma_l a_lk psi_lk``.

    ``coeff_density`` is ``"gaussian"`` (standard normal ``a_lk``) or
    ``"loglipschitz"`` (density ``c_tau exp(-(1 + |x|)**(1 - tau))``). The
    log-Lipschitz case uses ``sigma_l = 2**(-l (alpha + 1/2))``; the Gaussian
    case uses exponent ``r`` (default ``alpha / 2``) with ``0 < r < alpha - 1/4``.
    """

    level: int
    alpha: float
    coeff_density: str = "gaussian"
    tau: float = 0.0
    r: float | None = None
    strict: bool = True

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.coeff_density not in ("gaussian", "loglipschitz"):
            raise ValueError(f"unknown coefficient density {self.coeff_density!r}")
        if not 0 <= self.tau < 1:
            raise ValueError("tau must lie in [0, 1)")
        if self.coeff_density == "gaussian" and self.r is None:
            object.__setattr__(self, "r", self.alpha / 2)
        if self.strict:
            if self.alpha <= 0.5:
                raise ValueError("log-density priors need alpha > 1/2")
            if self.coeff_density == "gaussian" and not 0 < self.r < self.alpha - 0.25:
                raise ValueError(f"need 0 < r < alpha - 1/4, got r={self.r}, alpha={self.alpha}")

    @property
    def exponent(self) -> float:
        return self.alpha if self.coeff_density == "loglipschitz" else self.r

    def sigma_levels(self) -> np.ndarray:
        """``sigma_l`` for levels ``0..level``."""
        return 2.0 ** (-np.arange(self.level + 1) * (self.exponent + 0.5))

    def log_coeff_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.coeff_density == "gaussian":
            return -0.5 * x**2 - 0.5 * math.log(2 * math.pi)
        return np.log(loglipschitz_constant(self.tau)) - (1 + np.abs(x)) ** (1 - self.tau)


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """Posterior draws as rows of heap-ordered Haar coefficients.

    ``kind`` is ``"density"`` or ``"regression"``. ``level`` is the prior's
    resolution, the highest level a band built from these draws looks at.
    ``exact_mean`` holds the closed-form posterior mean when one exists and
    ``latent`` the sampler's own parameters (e.g. the ``a_lk`` of a
    log-density chain).
    """

    coeffs: np.ndarray
    n: int
    level: int
    kind: str = "density"
    exact_mean: np.ndarray | None = None
    latent: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 2:
            raise ValueError("draws must be a 2-D array (draw, coefficient)")
        _log2_exact(c.shape[1])
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def max_level(self) -> int:
        return self.coeffs.shape[1].bit_length() - 2

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, i) -> CoefficientTree:
        return CoefficientTree(self.coeffs[i])

    def __iter__(self):
        return (CoefficientTree(row) for row in self.coeffs)

    def column_names(self) -> list[str]:
        names = ["c[-1,0]"]
        for l in range(self.max_level + 1):
            names += [f"c[{l},{k}]" for k in range(2**l)]
        return names

    def to_csv(self, path) -> None:
        """Write one row per draw; columns are level-major ``c[l,k]``, scaling first."""
        header = ",".join(["draw"] + self.column_names())
        rows = np.column_stack([np.arange(self.m), self.coeffs])
        fmt = ["%d"] + ["%.17g"] * self.coeffs.shape[1]
        np.savetxt(path, rows, fmt=fmt, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, n: int, level: int | None = None, kind: str = "density") -> PosteriorDraws:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        coeffs = data[:, 1:]
        if level is None:
            level = coeffs.shape[1].bit_length() - 2
        return cls(coeffs, n=n, level=level, kind=kind)

    def save_npy(self, path) -> None:
        np.save(Path(path), self.coeffs)


def histogram_posterior(prior: HistogramPrior, s: IidSample, m: int, rng: np.random.Generator) -> PosteriorDraws:
    """Exact draws from the Dirichlet posterior of a random histogram.

    With bin counts ``N_k`` the posterior on the weights is Dirichlet with
    parameters ``alpha_k + N_k``; draws are normalized Gamma variates.
    """
    return histogram_posterior_counts(prior, s.counts(prior.level), m, rng)


def histogram_posterior_counts(prior: HistogramPrior, counts, m: int, rng: np.random.Generator) -> PosteriorDraws:
    if m < 1:
        raise ValueError("need at least one draw")
    counts = np.asarray(counts, dtype=float)
    params = prior.alphas + counts
    g = rng.standard_gamma(params, size=(m, params.size))
    weights = g / g.sum(axis=1, keepdims=True)
    return PosteriorDraws(
        haar_analysis(weights),
        n=int(counts.sum()),
        level=prior.level,
        kind="density",
        exact_mean=haar_analysis(params / params.sum()),
        meta={"prior": "histogram", "dirichlet": params},
    )


def gaussian_wn_posterior(
    prior: SeriesPriorWN, obs: WhiteNoiseObservation, m: int, rng: np.random.Generator
) -> PosteriorDraws:
    """Exact conjugate posterior of a Gaussian series prior in white noise.

    Each coordinate is independent with mean ``n s^2 X / (1 + n s^2)`` and
    variance ``s^2 / (1 + n s^2)``, ``s = sigma_l``.
    """
    if prior.base != "gaussian":
        raise NotImplementedError(
            "gaussian_wn_posterior needs a Gaussian base density; use uniform_wn_posterior"
        )
    if m < 1:
        raise ValueError("need at least one draw")
    n, x = obs.n, obs.coeffs.coeffs
    s2 = prior.sigma(obs.coeffs.max_level) ** 2
    mean = n * s2 * x / (1 + n * s2)
    sd = np.sqrt(s2 / (1 + n * s2))
    draws = mean + sd * rng.standard_normal((m, x.size))
    return PosteriorDraws(
        draws,
        n=n,
        level=obs.coeffs.max_level,
        kind="regression",
        exact_mean=mean,
        meta={"prior": "gaussian-series", "posterior_sd": sd},
    )


def uniform_wn_posterior(
    prior: SeriesPriorWN, obs: WhiteNoiseObservation, m: int, rng: np.random.Generator
) -> PosteriorDraws:
    """Posterior of a uniform series prior in white noise.

    Coordinate ``(l, k)`` is a normal with mean ``X_lk`` and variance ``1/n``
    truncated to ``[-sigma_l B, sigma_l B]``.
    """
    if prior.base != "uniform":
        raise ValueError("uniform_wn_posterior needs a uniform base density")
    n, x = obs.n, obs.coeffs.coeffs
    half = prior.sigma(obs.coeffs.max_level) * prior.B
    scale = 1 / math.sqrt(n)
    law = stats.truncnorm((-half - x) / scale, (half - x) / scale, loc=x, scale=scale)
    draws = law.rvs(size=(m, x.size), random_state=rng)
    return PosteriorDraws(
        draws,
        n=n,
        level=obs.coeffs.max_level,
        kind="regression",
        exact_mean=law.mean(),
        meta={"prior": "uniform-series"},
    )


@dataclass
class MCMCSettings:
    """Knobs of the adaptive random-walk Metropolis sampler."""

    burn_in: int = 5000
    thin: int = 10
    adapt_every: int = 100
    target: tuple[float, float] = (0.2, 0.5)
    warn_range: tuple[float, float] = (0.05, 0.8)


def _cell_signs(L: int):
    """For each coordinate (heap slots 1..), its support start, half-width and factor."""
    cells = 2 ** (L + 1)
    out = []
    for l in range(L + 1):
        width = cells >> l
        for k in range(2**l):
            out.append((l, k * width, width // 2, 2.0 ** (l / 2)))
    return out


def logdensity_posterior(
    prior: LogDensityPrior,
    s: IidSample,
    m: int,
    rng: np.random.Generator,
    settings: MCMCSettings | None = None,
) -> PosteriorDraws:
    """Posterior draws for a log-density series prior by adaptive Metropolis.

    Each sweep updates every coefficient ``a_lk`` in level-major order with
    a Gaussian random-walk proposal of scale ``s_l``. During burn-in the
    per-level scales are adjusted every ``adapt_every`` sweeps to keep the
    acceptance rate in the target band; afterwards they are frozen and every
    ``thin``-th sweep is stored. Because ``T`` is piecewise constant on the
    level ``level + 1`` cells, ``c(T)`` is an exact finite sum.
    """
    cfg = settings or MCMCSettings()
    if m < 1:
        raise ValueError("need at least one draw")
    L = prior.level
    cells = 2 ** (L + 1)
    counts = s.counts(L + 1).astype(float)
    n = s.n
    sig = prior.sigma_levels()
    coords = _cell_signs(L)
    dim = len(coords)

    a = np.zeros(dim)
    T = np.zeros(cells)
    E = np.ones(cells)
    S = float(cells)
    step = 2.4 * np.minimum(1.0, 1.0 / (sig * math.sqrt(max(n, 1))))
    # per-coordinate data term: sigma_l 2^{l/2} (N_left - N_right)
    data_grad = np.array(
        [sig[l] * f * (counts[a0 : a0 + h].sum() - counts[a0 + h : a0 + 2 * h].sum()) for l, a0, h, f in coords]
    )
    level_of = np.array([c[0] for c in coords])
    log_phi = prior.log_coeff_density

    def sweep(acc):
        nonlocal S
        deltas = rng.standard_normal(dim) * step[level_of]
        logu = np.log(rng.random(dim))
        for i, (l, a0, h, f) in enumerate(coords):
            d = deltas[i]
            shift = sig[l] * f * d
            lo, mid, hi = a0, a0 + h, a0 + 2 * h
            new_left = E[lo:mid] * math.exp(shift)
            new_right = E[mid:hi] * math.exp(-shift)
            S_new = S + (new_left.sum() - E[lo:mid].sum()) + (new_right.sum() - E[mid:hi].sum())
            new_a = a[i] + d
            log_ratio = (
                data_grad[i] * d
                - n * (math.log(S_new) - math.log(S))
                + float(log_phi(new_a))
                - float(log_phi(a[i]))
            )
            if logu[i] < log_ratio:
                a[i] = new_a
                T[lo:mid] += shift
                T[mid:hi] -= shift
                E[lo:mid] = new_left
                E[mid:hi] = new_right
                S = S_new
                acc[l] += 1

    per_level = 2.0 ** np.arange(L + 1)
    for start in range(0, cfg.burn_in, cfg.adapt_every):
        acc = np.zeros(L + 1)
        sweeps = min(cfg.adapt_every, cfg.burn_in - start)
        for _ in range(sweeps):
            sweep(acc)
        rate = acc / (sweeps * per_level)
        step[rate < cfg.target[0]] *= 0.7
        step[rate > cfg.target[1]] *= 1.4
        # resync the running sums against drift
        E[:] = np.exp(T)
        S = float(E.sum())

    stored = np.empty((m, dim))
    dens = np.empty((m, cells))
    acc = np.zeros(L + 1)
    for j in range(m):
        for _ in range(cfg.thin):
            sweep(acc)
        stored[j] = a
        dens[j] = E / S
        if j % 64 == 63:
            E[:] = np.exp(T)
            S = float(E.sum())
    rates = acc / (m * cfg.thin * per_level)
    flagged = bool(np.any((rates < cfg.warn_range[0]) | (rates > cfg.warn_range[1])))
    if flagged:
        warnings.warn(f"Metropolis acceptance rates {np.round(rates, 3)} outside {cfg.warn_range}")
    return PosteriorDraws(
        haar_analysis(dens),
        n=n,
        level=L,
        kind="density",
        latent=stored,
        meta={
            "prior": "log-density",
            "acceptance": rates,
            "step": step.copy(),
            "acceptance_warning": flagged,
            "burn_in": cfg.burn_in,
            "thin": cfg.thin,
        },
    )


def logdensity_from_latent(prior: LogDensityPrior, latent) -> np.ndarray:
    """Heap coefficients of the densities ``exp(T - c(T))`` for rows of ``a_lk``."""
    a = np.atleast_2d(np.asarray(latent, dtype=float))
    L = prior.level
    theta = np.zeros((a.shape[0], 2 ** (L + 1)))
    theta[:, 1:] = a * np.repeat(prior.sigma_levels(), 2 ** np.arange(L + 1))
    T = haar_synthesis(theta, L + 1)
    T -= T.max(axis=1, keepdims=True)
    f = np.exp(T)
    return haar_analysis(f / f.sum(axis=1, keepdims=True))


def posterior_mean(d: PosteriorDraws, exact: bool = True) -> CoefficientTree:
    """Posterior mean; the closed form is used when the sampler provides one."""
    if d.m == 0:
        raise ValueError("no draws")
    if exact and d.exact_mean is not None:
        return CoefficientTree(d.exact_mean)
    return CoefficientTree(d.coeffs.mean(axis=0))


def check_signal_bound(f0: CoefficientTree, prior: SeriesPriorWN, M: float = 10.0) -> float:
    """Return ``sup |f0_lk| / sigma_l`` and warn when it exceeds ``M``.

    The white-noise BvM guarantees assume this ratio is bounded.
    """
    ratio = float(np.max(np.abs(f0.coeffs) / prior.sigma(f0.max_level)))
    if ratio > M:
        warnings.warn(f"sup |f0_lk| / sigma_l = {ratio:.3g} exceeds M = {M:g}")
    return ratio


def point_mass_draws(f0: CoefficientTree, n: int, m: int, level: int, kind: str = "density") -> PosteriorDraws:
    """Degenerate 'posterior' concentrated at ``f0``."""
    row = resize_coeffs(f0.coeffs, max(level, f0.max_level))
    return PosteriorDraws(np.tile(row, (m, 1)), n=n, level=level, kind=kind, exact_mean=row)


__all__ = [
    "HistogramPrior",
    "SeriesPriorWN",
    "LogDensityPrior",
    "PosteriorDraws",
    "MCMCSettings",
    "histogram_posterior",
    "histogram_posterior_counts",
    "gaussian_wn_posterior",
    "uniform_wn_posterior",
    "logdensity_posterior",
    "logdensity_from_latent",
    "posterior_mean",
    "check_signal_bound",
    "loglipschitz_constant",
    "point_mass_draws",
]

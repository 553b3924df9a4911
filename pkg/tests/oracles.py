"""Brute-force reference computations, independent of the package internals."""

import itertools
import math

import numpy as np
from scipy import integrate, optimize


def psi(l, k, x):
    """Haar function from its definition (cells open on the left)."""
    x = np.asarray(x, dtype=float)
    if l == -1:
        return np.ones_like(x)
    a, mid, b = k / 2**l, (k + 0.5) / 2**l, (k + 1) / 2**l
    return 2 ** (l / 2) * (((a < x) & (x <= mid)).astype(float) - ((mid < x) & (x <= b)))


def simplex_grid_moments(counts, alphas, step):
    """First and second moments of ``p ~ prod p_k**(N_k + a_k - 1)`` on a simplex grid.

    Midpoint-style grid: every coordinate is a multiple of ``step`` shifted by
    ``step / K`` so no point touches the boundary.
    """
    counts = np.asarray(counts, dtype=float)
    K = counts.size
    expo = counts + np.asarray(alphas, dtype=float) - 1
    ticks = int(round(1 / step))
    pts = []
    for idx in itertools.product(range(ticks), repeat=K - 1):
        if sum(idx) < ticks - (K - 1) + 1:
            pts.append(idx)
    g = (np.array(pts, dtype=float) + 1.0 / K) * step
    last = 1 - g.sum(axis=1)
    keep = last > 0
    p = np.column_stack([g[keep], last[keep]])
    logw = (expo * np.log(p)).sum(axis=1)
    wt = np.exp(logw - logw.max())
    wt /= wt.sum()
    mean = wt @ p
    second = (p * wt[:, None]).T @ p
    return mean, second


def gaussian_conjugate_by_quadrature(x, n, sigma):
    """Posterior mean and variance of ``f`` with ``X ~ N(f, 1/n)``, ``f ~ N(0, sigma**2)``."""

    def dens(f):
        return math.exp(-0.5 * n * (x - f) ** 2 - 0.5 * f**2 / sigma**2)

    lo, hi = x - 40 / math.sqrt(n), x + 40 / math.sqrt(n)
    lo, hi = min(lo, -40 * sigma), max(hi, 40 * sigma)
    opts = dict(epsabs=0, epsrel=1e-13, limit=400, points=[0.0, x])
    z, _ = integrate.quad(dens, lo, hi, **opts)
    m1, _ = integrate.quad(lambda f: f * dens(f), lo, hi, **opts)
    m2, _ = integrate.quad(lambda f: f * f * dens(f), lo, hi, **opts)
    mean = m1 / z
    return mean, m2 / z - mean**2


def logdensity_cell_design(L):
    """Matrix ``B`` with ``T = B @ (sigma-scaled a)`` on the ``2**(L+1)`` cells."""
    cells = 2 ** (L + 1)
    mid = (np.arange(cells) + 0.5) / cells
    cols = [psi(l, k, mid) for l in range(L + 1) for k in range(2**l)]
    return np.column_stack(cols)


def logdensity_grid_marginals(counts, sigmas, half_width=8.0, points=161):
    """Marginal CDFs of the latent ``a_lk`` of a Gaussian log-density posterior.

    ``sigmas`` holds ``sigma_l`` for every coordinate. The grid is centred at
    the posterior mode and spans ``half_width`` Laplace standard deviations in
    every direction. Returns ``(grids, cdfs)`` per coordinate; CDFs are
    evaluated at cell right edges of each grid.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    cells = counts.size
    L = int(math.log2(cells)) - 1
    B = logdensity_cell_design(L) * np.asarray(sigmas)[None, :]
    dim = B.shape[1]

    def neg_log_post(a):
        T = B @ a
        top = T.max()
        return -(counts @ T - n * (top + math.log(np.exp(T - top).sum() / cells)) - 0.5 * a @ a)

    res = optimize.minimize(neg_log_post, np.zeros(dim), method="BFGS", options={"gtol": 1e-10})
    mode = res.x
    # numerical Hessian for the Laplace scales
    h = 1e-4
    H = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            e_i, e_j = np.eye(dim)[i] * h, np.eye(dim)[j] * h
            H[i, j] = (
                neg_log_post(mode + e_i + e_j)
                - neg_log_post(mode + e_i - e_j)
                - neg_log_post(mode - e_i + e_j)
                + neg_log_post(mode - e_i - e_j)
            ) / (4 * h * h)
    sd = np.sqrt(np.diag(np.linalg.inv(H)))
    axes = [np.linspace(mode[i] - half_width * sd[i], mode[i] + half_width * sd[i], points) for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    A = np.stack([m.ravel() for m in mesh], axis=1)
    T = A @ B.T
    top = T.max(axis=1, keepdims=True)
    logp = T @ counts - n * (top[:, 0] + np.log(np.exp(T - top).sum(axis=1) / cells)) - 0.5 * (A**2).sum(axis=1)
    p = np.exp(logp - logp.max()).reshape([points] * dim)
    grids, cdfs = [], []
    for i in range(dim):
        marg = p.sum(axis=tuple(j for j in range(dim) if j != i))
        cdf = np.cumsum(marg) / marg.sum()
        step = axes[i][1] - axes[i][0]
        grids.append(axes[i] + step / 2)
        cdfs.append(cdf)
    return grids, cdfs


def ks_against_grid_cdf(x, grid, cdf):
    """Sup distance between the empirical CDF of ``x`` and an interpolated grid CDF."""
    x = np.sort(np.asarray(x, dtype=float))
    F = np.interp(x, grid, cdf, left=0.0, right=1.0)
    i = np.arange(1, x.size + 1)
    return float(max((i / x.size - F).max(), (F - (i - 1) / x.size).max()))

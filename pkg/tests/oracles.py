"""Numerical oracles shared by the limit-law tests and the acceptance suite."""

import numpy as np

from freemax import Uniform
from freemax.limitlaw import log_limit_density, order_stats_log_density


def limit_density_mass(F, n=2000):
    """Midpoint-rule mass of the N=2 limit density of F (support in [0,1]) on an n x n grid.

    Diagonal cells are half inside the cone and get weight 1/2.
    """
    h = 1.0 / n
    c = (np.arange(n) + 0.5) * h
    t1, t2 = np.meshgrid(c, c, indexing="ij")
    pts = np.stack((t1.ravel(), t2.ravel()), axis=1)
    dens = np.exp(log_limit_density(F, pts)).reshape(n, n)
    weights = np.where(t1 > t2, 1.0, 0.0) + np.where(t1 == t2, 0.5, 0.0)
    return float(np.sum(dens * weights) * h * h)


def order_stats_histogram_gap(n_draws=1_000_000, bins=20, seed=0):
    """Max cell gap between simulated and exact top-2-of-3 densities, over the max density."""
    U = Uniform(0, 1)
    rng = np.random.default_rng(seed)
    top = -np.sort(-rng.random((n_draws, 3)), axis=1)[:, :2]
    edges = np.linspace(0, 1, bins + 1)
    counts, _, _ = np.histogram2d(top[:, 0], top[:, 1], bins=[edges, edges])
    h = 1.0 / bins
    emp = counts / (n_draws * h * h)
    # exact cell averages of 6 t2 on {t1 >= t2} by a fine midpoint rule per cell
    m = 40
    sub = (np.arange(m) + 0.5) / m
    exact = np.zeros((bins, bins))
    for i in range(bins):
        for j in range(bins):
            A, B = np.meshgrid(edges[i] + sub * h, edges[j] + sub * h, indexing="ij")
            pts = np.stack((A.ravel(), B.ravel()), axis=1)
            exact[i, j] = np.mean(np.exp(order_stats_log_density(U, 3, 2, pts)))
    return float(np.max(np.abs(emp - exact)) / 6.0)

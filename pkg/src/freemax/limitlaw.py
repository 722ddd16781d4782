"""Samplers and densities for the ranked eigenvalues of the limit matrix law.

Exact sampler
-------------
With ``u_i = -log F(t_i)`` the ranked-eigenvalue density becomes, relative to
i.i.d. unit exponentials, ``N**N * 1{u_1 <= ... <= u_N} * exp(-N u_N)``.
Integrating out the smaller coordinates leaves ``u_N ~ Gamma(N, rate=N)``, and
given ``u_N`` the others are the order statistics of ``N - 1`` uniforms on
``(0, u_N)``: the first ``N`` points of a rate-``N`` Poisson process. The
sampler draws exactly that and maps back with ``t_i = Q_F(exp(-u_i))``.

Oracle
------
:func:`brute_force_ranked` keeps the ``N`` largest of ``kN`` draws from the
max-root ``F**(1/k)``; it converges to the same law as ``k`` grows.
"""
from __future__ import annotations

import csv
import math
import warnings

import numpy as np
from scipy.special import gammaln

from .distributions import Cdf, kth_root
from .errors import DomainError
from .rng import RngStream
from .spectral import rotate_diag

__all__ = [
    "UnverifiedLawWarning", "sample_limit_ranked", "sample_gamma_level",
    "brute_force_ranked", "log_limit_density", "order_stats_log_density",
    "sample_limit_matrix", "is_ranked", "write_ranked_csv", "read_ranked_csv",
    "append_log_density_csv",
]

_EXP_SUM_MAX_N = 64
_CHUNK_ELEMENTS = 2_000_000


class UnverifiedLawWarning(UserWarning):
    """Exact sampler used on a law with atoms, where no density is available."""


def is_ranked(t) -> bool:
    t = np.asarray(t, dtype=float)
    return bool(np.all(np.isfinite(t)) and np.all(np.diff(t, axis=-1) <= 0))


def sample_gamma_level(N: int, rng: RngStream, size: int) -> np.ndarray:
    """Draws of ``Gamma(shape=N, rate=N)``.

    Sum of ``N`` unit exponentials over ``N`` for small ``N``; numpy's
    Marsaglia-Tsang generator above that.
    """
    if N <= _EXP_SUM_MAX_N:
        return rng.standard_exponential((size, N)).sum(axis=1) / N
    return rng.gamma(N, 1.0 / N, size)


def _levels_to_values(F: Cdf, u: np.ndarray) -> np.ndarray:
    level = np.exp(-u)
    level = np.clip(level, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return F._quantile(level.ravel()).reshape(u.shape)


def sample_limit_ranked(F: Cdf, N: int, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Exact draw(s) of the ranked eigenvalues ``t_1 >= ... >= t_N``.

    Returns shape ``(N,)``, or ``(size, N)`` when ``size`` is given.
    For laws with atoms the same push-forward is applied and an
    :class:`UnverifiedLawWarning` is issued.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    N = int(N)
    if F.has_atoms:
        warnings.warn("law has atoms; exact sampler is not backed by a density there",
                      UnverifiedLawWarning, stacklevel=2)
    m = 1 if size is None else int(size)
    top = sample_gamma_level(N, rng, m)
    inner = np.sort(rng.random((m, N - 1)), axis=1) * top[:, None]
    u = np.concatenate((inner, top[:, None]), axis=1)
    t = _levels_to_values(F, u)
    return t[0] if size is None else t


def brute_force_ranked(F: Cdf, N: int, k: int, rng: RngStream,
                       size: int | None = None) -> np.ndarray:
    """``N`` largest of ``k*N`` i.i.d. draws from ``F**(1/k)``, ranked.

    Only the top ``N`` uniforms of each row are pushed through the quantile
    function; monotonicity makes this the same law as transforming all draws.
    """
    if N < 1 or k < 1:
        raise DomainError("N and k must be positive")
    root = kth_root(F, k)
    m = 1 if size is None else int(size)
    n_all = k * N
    rows = max(1, _CHUNK_ELEMENTS // n_all)
    out = np.empty((m, N))
    for start in range(0, m, rows):
        stop = min(start + rows, m)
        u = rng.uniform_open((stop - start, n_all))
        if N < n_all:
            u = np.partition(u, n_all - N, axis=1)[:, n_all - N:]
        u = np.sort(u, axis=1)[:, ::-1]
        out[start:stop] = root._quantile(u.ravel()).reshape(u.shape)
    return out[0] if size is None else out


def log_limit_density(F: Cdf, t) -> np.ndarray | float:
    """Log-density of the ranked eigenvalues relative to ``mu**N``.

    ``N log N + sum_i [log F(t_N) - log F(t_i)]`` on the ordered cone where
    every ``F(t_i) > 0``; ``-inf`` elsewhere. Accepts ``(N,)`` or ``(m, N)``.
    """
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    t = np.atleast_2d(t)
    N = t.shape[1]
    p = F._eval(t.ravel()).reshape(t.shape)
    ordered = np.all(np.diff(t, axis=1) <= 0, axis=1)
    ok = ordered & np.all(p > 0, axis=1)
    out = np.full(t.shape[0], -np.inf)
    lp = np.log(p[ok])
    out[ok] = N * math.log(N) + N * lp[:, -1] - lp.sum(axis=1)
    return float(out[0]) if single else out


def order_stats_log_density(F: Cdf, n: int, N: int, t) -> np.ndarray | float:
    """Log-density of the top ``N`` of ``n`` i.i.d. ``F`` draws, relative to ``mu**N``.

    ``log(n!/(n-N)!) + (n-N) log F(t_N)`` on the ordered cone.
    """
    if N < 1 or n < N:
        raise DomainError("need n >= N >= 1")
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    t = np.atleast_2d(t)
    if t.shape[1] != N:
        raise DomainError(f"expected {N} coordinates, got {t.shape[1]}")
    ordered = np.all(np.diff(t, axis=1) <= 0, axis=1)
    const = gammaln(n + 1) - gammaln(n - N + 1)
    out = np.full(t.shape[0], -np.inf)
    if n == N:
        out[ordered] = const
    else:
        pN = F._eval(t[:, -1])
        ok = ordered & (pN > 0)
        out[ok] = const + (n - N) * np.log(pN[ok])
    return float(out[0]) if single else out


def sample_limit_matrix(F: Cdf, N: int, rng: RngStream) -> np.ndarray:
    """Haar rotation of one exact ranked draw."""
    t = sample_limit_ranked(F, N, rng)
    return rotate_diag(t, rng)


# -- batch CSV -----------------------------------------------------------------


def write_ranked_csv(path, T) -> None:
    """Write ranked draws as ``draw_id, t_1, ..., t_N`` rows (``repr`` floats, round-trip exact)."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["draw_id"] + [f"t_{i + 1}" for i in range(T.shape[1])]) + "\n")
        for i, row in enumerate(T.tolist()):
            fh.write(",".join([str(i)] + [repr(v) for v in row]) + "\n")


def read_ranked_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_ranked_csv`; returns ``(draw_ids, T)``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][0].strip() != "draw_id" or len(rows[0]) < 2:
        raise DomainError(f"{path}: expected a 'draw_id,t_1,...' header")
    width = len(rows[0])
    if any(len(r) != width for r in rows[1:]):
        raise DomainError(f"{path}: ragged rows")
    try:
        ids = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
        T = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float).reshape(-1, width - 1)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from exc
    return ids, T


def append_log_density_csv(F: Cdf, in_path, out_path) -> np.ndarray:
    """Copy a ranked-draw CSV, appending a ``log_density`` column; returns that column."""
    with open(in_path, newline="") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh if ln.strip()]
    _, T = read_ranked_csv(in_path)
    dens = log_limit_density(F, T)
    with open(out_path, "w", newline="") as fh:
        fh.write(lines[0] + ",log_density\n")
        for ln, d in zip(lines[1:], dens.tolist()):
            fh.write(f"{ln},{d!r}\n")
    return dens

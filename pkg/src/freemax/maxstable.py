"""Max-stable laws, their free images, and matrix-level stability experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .distributions import (
    Cdf, EmpiricalStep, Frechet, Gumbel, Weibull, affine, free_max_conv_power,
    kth_root, ks_distance, lambda_vee,
)
from .errors import DomainError
from .limitlaw import sample_limit_ranked
from .rng import RngStream
from .spectral import eig, rotate_diag, spectral_max

__all__ = [
    "AffineNorm", "stability_norming", "affine_map", "DoaReport", "doa_check",
    "quantile_grid", "MatrixLawReport", "per_coordinate_ks",
    "matrix_max_stability_test", "matrix_max_id_test",
]


@dataclass(frozen=True)
class AffineNorm:
    """The map ``x -> a x + b`` with ``a > 0``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("norming scale must be positive")

    def inverse(self) -> "AffineNorm":
        return AffineNorm(1.0 / self.a, -self.b / self.a)


def stability_norming(family: Cdf, p: int) -> AffineNorm:
    """``(a_p, b_p)`` with ``F(a_p x + b_p)**p == F(x)``.

    Gumbel: ``(1, scale log p)``; Frechet(alpha): ``(p**(1/alpha), ...)``;
    Weibull(alpha): ``(p**(-1/alpha), ...)``. Non-zero locations are absorbed
    into ``b_p``.
    """
    if int(p) != p or p < 1:
        raise DomainError("p must be a positive integer")
    if isinstance(family, Gumbel):
        return AffineNorm(1.0, family.scale * math.log(p))
    if isinstance(family, Frechet):
        a = p ** (1.0 / family.alpha)
        return AffineNorm(a, family.loc * (1.0 - a))
    if isinstance(family, Weibull):
        a = p ** (-1.0 / family.alpha)
        return AffineNorm(a, family.loc * (1.0 - a))
    raise DomainError(f"{family!r} is not one of the built-in max-stable families")


def affine_map(F: Cdf, norm: AffineNorm) -> Cdf:
    """CDF of ``a X + b`` for ``X ~ F``."""
    return affine(F, norm.a, norm.b)


def quantile_grid(F: Cdf, n: int = 1000, lo: float = 1e-4, hi: float = 1 - 1e-4) -> np.ndarray:
    """Quantiles of ``F`` at ``n`` equispaced levels in ``[lo, hi]``."""
    return np.unique(F.quantile(np.linspace(lo, hi, n)))


@dataclass
class DoaReport:
    ks: list[int]
    e_cls: list[float]
    e_free: list[float]
    bound_ok: list[bool]
    premise_tol: float
    criterion: str = "e_free(k) <= 3*e_cls(k) + 10/k for every k; e_cls(k_max) <= premise_tol"

    @property
    def premise_holds(self) -> bool:
        return self.e_cls[-1] <= self.premise_tol

    @property
    def passed(self) -> bool:
        return self.premise_holds and all(self.bound_ok)

    def rows(self):
        return list(zip(self.ks, self.e_cls, self.e_free))


def doa_check(F_seq, F_limit: Cdf, ks, grid=None, premise_tol: float = 0.01) -> DoaReport:
    """Compare classical and free convergence of ``k``-fold maxima.

    ``F_seq(k)`` returns the CDF ``F_k``. For each ``k`` the report records
    ``e_cls = max |F_k**k - F_limit|`` and
    ``e_free = max |(k F_k - k + 1)^+ - lambda_vee(F_limit)|`` over ``grid``.
    PASS needs the classical premise (``e_cls`` at the largest ``k`` within
    ``premise_tol``) and the bound ``e_free <= 3 e_cls + 10/k`` at every ``k``.
    """
    grid = quantile_grid(F_limit) if grid is None else np.asarray(grid, dtype=float)
    target_cls = F_limit(grid)
    target_free = lambda_vee(F_limit)(grid)
    e_cls, e_free, ok = [], [], []
    ks = [int(k) for k in ks]
    for k in ks:
        Fk = F_seq(k)
        fk = Fk(grid)
        ec = float(np.max(np.abs(fk ** k - target_cls)))
        ef = float(np.max(np.abs(free_max_conv_power(Fk, k)(grid) - target_free)))
        e_cls.append(ec)
        e_free.append(ef)
        ok.append(ef <= 3.0 * ec + 10.0 / k)
    return DoaReport(ks, e_cls, e_free, ok, premise_tol)


# ----------------------------------------------------------------------------
# matrix-level experiments


def per_coordinate_ks(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Two-sample KS statistic for each column of two ranked-sample arrays."""
    X, Y = np.atleast_2d(X), np.atleast_2d(Y)
    return np.array([ks_distance(EmpiricalStep(X[:, i]), EmpiricalStep(Y[:, i]))
                     for i in range(X.shape[1])])


def _rank_corr(X: np.ndarray) -> np.ndarray:
    if X.shape[1] < 2:
        return np.ones((1, 1))
    rho = spearmanr(X).statistic
    return np.atleast_2d(rho)


@dataclass
class MatrixLawReport:
    ks: np.ndarray
    tolerance: float
    rank_corr_test: np.ndarray = field(repr=False)
    rank_corr_reference: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ks <= self.tolerance))

    @property
    def max_rank_corr_gap(self) -> float:
        return float(np.max(np.abs(self.rank_corr_test - self.rank_corr_reference)))


def _spectral_max_all(mats):
    out = mats[0]
    for M in mats[1:]:
        out = spectral_max(out, M)
    return out


def _sample_spectra(make_parts, N: int, draws: int, rng: RngStream) -> np.ndarray:
    out = np.empty((draws, N))
    for d in range(draws):
        out[d] = eig(_spectral_max_all(make_parts(rng))).values
    return out


def _compare(test: np.ndarray, ref: np.ndarray, tolerance: float) -> MatrixLawReport:
    return MatrixLawReport(per_coordinate_ks(test, ref), tolerance,
                           _rank_corr(test), _rank_corr(ref))


def matrix_max_stability_test(family: Cdf, N: int, p: int, draws: int, rng: RngStream,
                              tolerance: float = 0.03) -> MatrixLawReport:
    """Max of ``p`` renormalised limit matrices versus the limit law itself.

    With ``F(a x + b)**p = F(x)``, each ``H_i`` is mapped to
    ``(H_i - b I)/a`` (law of the limit matrix for ``F(a . + b)``); the
    spectral max of ``p`` of them should again follow the limit law of ``F``.
    """
    if min(N, p, draws) < 1:
        raise DomainError("N, p and draws must be positive")
    norm = stability_norming(family, p)

    def parts(r):
        return [(rotate_diag(sample_limit_ranked(family, N, r), r) - norm.b * np.eye(N)) / norm.a
                for _ in range(p)]

    test = _sample_spectra(parts, N, draws, rng.spawn(0))
    ref = sample_limit_ranked(family, N, rng.spawn(1), size=draws)
    return _compare(test, ref, tolerance)


def matrix_max_id_test(mu: Cdf, N: int, p: int, draws: int, rng: RngStream,
                       tolerance: float = 0.03) -> MatrixLawReport:
    """Max of ``p`` limit matrices for ``mu**(1/p)`` versus the limit law of ``mu``."""
    if min(N, p, draws) < 1:
        raise DomainError("N, p and draws must be positive")
    root = kth_root(mu, p)

    def parts(r):
        return [rotate_diag(sample_limit_ranked(root, N, r), r) for _ in range(p)]

    test = _sample_spectra(parts, N, draws, rng.spawn(0))
    ref = sample_limit_ranked(mu, N, rng.spawn(1), size=draws)
    return _compare(test, ref, tolerance)

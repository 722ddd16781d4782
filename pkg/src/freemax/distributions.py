"""CDF algebra for upper extremal convolutions.

A :class:`Cdf` is an immutable, vectorised cumulative distribution function.
Three representations are provided:

* analytic families (:class:`Uniform`, :class:`Gumbel`, :class:`Frechet`,
  :class:`Weibull`, :class:`Exponential`, :class:`Atomic`),
* :class:`EmpiricalStep`, the CDF of a finite sample,
* :class:`PiecewiseLinear`, continuous interpolation between breakpoints.

Pointwise operations (classical and free max-convolution, ``lambda_vee``,
max-roots, affine maps) return lazy derived CDFs that evaluate their closed
form exactly instead of tabulating it. Quantiles of unary derived CDFs are
pulled back through the parent's quantile function in closed form; only the
binary convolutions fall back to bisection.

Quantiles follow ``Q(u) = min{x : F(x) >= u}`` throughout.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .rng import RngStream

__all__ = [
    "Cdf", "Uniform", "Gumbel", "Frechet", "Weibull", "Exponential", "Atomic",
    "EmpiricalStep", "PiecewiseLinear",
    "cdf_eval", "quantile", "classical_max_conv", "free_max_conv",
    "free_max_conv_power", "lambda_vee", "kth_root", "affine", "sample",
    "empirical_cdf", "ks_distance", "quantile_sup_distance", "smooth_approx",
    "to_piecewise_linear", "unit_step", "parse_distribution",
    "read_samples_csv", "write_samples_csv",
]

_BISECT_RTOL = 1e-12
_BISECT_MAXITER = 200


def _as_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_u(u):
    u = _as_array(u)
    if np.any(~(u > 0.0) | ~(u < 1.0)):
        raise DomainError("quantile level must lie in the open interval (0, 1)")
    return u


class Cdf:
    """Base class: subclasses implement ``_eval`` and ``_quantile`` on arrays."""

    #: True when the law may carry point masses
    has_atoms = False

    def __call__(self, x):
        x = _as_array(x)
        p = self._eval(np.atleast_1d(x)).reshape(x.shape)
        return _scalar_or_array(p, x)

    def quantile(self, u):
        u = _check_u(u)
        q = self._quantile(np.atleast_1d(u)).reshape(u.shape)
        return _scalar_or_array(q, u)

    def breakpoints(self) -> np.ndarray:
        """Points where the CDF may jump or kink (empty for smooth laws)."""
        return np.empty(0)

    def bounds(self, eps: float = 1e-6) -> tuple[float, float]:
        """The ``eps`` and ``1 - eps`` quantiles, a practical support window."""
        lo, hi = self._quantile(np.array([eps, 1.0 - eps]))
        return float(lo), float(hi)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError


# ----------------------------------------------------------------------------
# analytic families


@dataclass(frozen=True)
class Uniform(Cdf):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("Uniform requires a < b")

    def _eval(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _quantile(self, u):
        return self.a + u * (self.b - self.a)

    def breakpoints(self):
        return np.array([self.a, self.b])


@dataclass(frozen=True)
class Gumbel(Cdf):
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("Gumbel scale must be positive")

    def _eval(self, x):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-(x - self.loc) / self.scale))

    def _quantile(self, u):
        return self.loc - self.scale * np.log(-np.log(u))


@dataclass(frozen=True)
class Frechet(Cdf):
    """``exp(-((x - loc)/scale)**-alpha)`` for ``x > loc``, zero below."""

    alpha: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0):
            raise DomainError("Frechet requires alpha > 0 and scale > 0")

    def _eval(self, x):
        z = (x - self.loc) / self.scale
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-z[pos] ** -self.alpha)
        return out

    def _quantile(self, u):
        return self.loc + self.scale * (-np.log(u)) ** (-1.0 / self.alpha)

    def breakpoints(self):
        return np.array([self.loc])


@dataclass(frozen=True)
class Weibull(Cdf):
    """Max-stable (reversed) Weibull: ``exp(-(-(x - loc)/scale)**alpha)`` below ``loc``."""

    alpha: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0):
            raise DomainError("Weibull requires alpha > 0 and scale > 0")

    def _eval(self, x):
        z = (self.loc - x) / self.scale
        out = np.ones_like(z)
        pos = z > 0
        out[pos] = np.exp(-z[pos] ** self.alpha)
        return out

    def _quantile(self, u):
        return self.loc - self.scale * (-np.log(u)) ** (1.0 / self.alpha)

    def breakpoints(self):
        return np.array([self.loc])


@dataclass(frozen=True)
class Exponential(Cdf):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("Exponential rate must be positive")

    def _eval(self, x):
        return np.where(x >= 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def breakpoints(self):
        return np.array([0.0])


class _StepCdf(Cdf):
    """Right-continuous step function with jumps at ``points``.

    ``levels[i]`` is the CDF value on ``[points[i], points[i+1])``.
    """

    has_atoms = True
    points: np.ndarray
    levels: np.ndarray

    def _eval(self, x):
        idx = np.searchsorted(self.points, x, side="right")
        padded = np.concatenate(([0.0], self.levels))
        return padded[idx]

    def _quantile(self, u):
        idx = np.searchsorted(self.levels, u, side="left")
        return self.points[np.minimum(idx, len(self.points) - 1)]

    def breakpoints(self):
        return self.points

    def bounds(self, eps=1e-6):
        return float(self.points[0]), float(self.points[-1])


class Atomic(_StepCdf):
    """A finitely supported law given as ``[(x, mass), ...]``.

    Masses are normalised; repeated points are merged.
    """

    def __init__(self, atoms):
        pts = np.array([float(x) for x, _ in atoms])
        masses = np.array([float(m) for _, m in atoms])
        if pts.size == 0:
            raise DomainError("Atomic law needs at least one atom")
        if np.any(masses < 0) or not masses.sum() > 0:
            raise DomainError("atom masses must be non-negative with positive total")
        if not np.all(np.isfinite(pts)):
            raise DomainError("atom locations must be finite")
        order = np.argsort(pts, kind="stable")
        pts, masses = pts[order], masses[order]
        uniq, inv = np.unique(pts, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, masses)
        self._init_levels(uniq, np.cumsum(merged) / merged.sum())

    def _init_levels(self, points, levels):
        levels = np.minimum(np.asarray(levels, dtype=float), 1.0)
        levels[-1] = 1.0
        self.points = np.asarray(points, dtype=float)
        self.levels = levels
        self.points.setflags(write=False)
        self.levels.setflags(write=False)

    @classmethod
    def from_levels(cls, points, levels):
        """Build from jump locations and the CDF value right after each jump."""
        obj = cls.__new__(cls)
        points = np.asarray(points, dtype=float)
        levels = np.asarray(levels, dtype=float)
        keep = np.concatenate(([levels[0] > 0], np.diff(levels) > 0))
        obj._init_levels(points[keep], levels[keep])
        return obj

    @property
    def atoms(self):
        masses = np.diff(np.concatenate(([0.0], self.levels)))
        return list(zip(self.points.tolist(), masses.tolist()))

    def __repr__(self):
        return f"Atomic({self.atoms!r})"

    def __eq__(self, other):
        return (isinstance(other, Atomic) and np.array_equal(self.points, other.points)
                and np.array_equal(self.levels, other.levels))

    __hash__ = None


def unit_step(x0: float) -> Atomic:
    """Point mass at ``x0``."""
    return Atomic([(x0, 1.0)])


class EmpiricalStep(_StepCdf):
    """Empirical CDF of a finite sample, kept in integer counts."""

    def __init__(self, samples):
        s = np.sort(_as_array(samples).ravel())
        if s.size == 0:
            raise DomainError("empirical CDF of an empty sample")
        if not np.all(np.isfinite(s)):
            raise DomainError("samples must be finite")
        s.setflags(write=False)
        self.samples = s
        self.n = s.size
        pts = np.unique(s)
        self.points = pts
        self.counts = np.searchsorted(s, pts, side="right")
        self.levels = self.counts / self.n

    def _eval(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.n

    def _quantile(self, u):
        idx = np.ceil(u * self.n).astype(np.int64) - 1
        idx = np.clip(idx, 0, self.n - 1)
        # guard against u*n rounding up past an exact integer
        lower = np.maximum(idx - 1, 0)
        back = (idx > 0) & (idx / self.n >= u)
        idx = np.where(back, lower, idx)
        return self.samples[idx]

    def __repr__(self):
        return f"EmpiricalStep(n={self.n})"


class PiecewiseLinear(Cdf):
    """Linear interpolation through ``(x, p)`` breakpoints.

    The CDF is 0 left of the first breakpoint (a jump of size ``p[0]`` sits
    there when ``p[0] > 0``) and 1 from the last one on.
    """

    def __init__(self, xs, ps):
        xs, ps = _as_array(xs), _as_array(ps)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size == 0:
            raise DomainError("breakpoints must be two equal-length 1-d arrays")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("breakpoint abscissae must be strictly increasing")
        if np.any(np.diff(ps) < 0) or ps[0] < 0 or ps[-1] != 1.0:
            raise DomainError("breakpoint levels must rise from >= 0 to exactly 1")
        xs.setflags(write=False)
        ps.setflags(write=False)
        self.xs, self.ps = xs, ps
        self.has_atoms = bool(ps[0] > 0)

    def _eval(self, x):
        return np.interp(x, self.xs, self.ps, left=0.0, right=1.0)

    def _quantile(self, u):
        j = np.searchsorted(self.ps, u, side="left")
        out = np.empty_like(u)
        first = j == 0
        out[first] = self.xs[0]
        j = j[~first]
        x0, x1 = self.xs[j - 1], self.xs[j]
        p0, p1 = self.ps[j - 1], self.ps[j]
        out[~first] = x0 + (u[~first] - p0) / (p1 - p0) * (x1 - x0)
        return out

    def breakpoints(self):
        return self.xs

    def bounds(self, eps=1e-6):
        return float(self.xs[0]), float(self.xs[-1])

    def __repr__(self):
        return f"PiecewiseLinear({self.xs.size} breakpoints)"


# ----------------------------------------------------------------------------
# lazy derived CDFs


class _Derived(Cdf):
    parents: tuple

    @property
    def has_atoms(self):
        return any(p.has_atoms for p in self.parents)

    def breakpoints(self):
        pts = [p.breakpoints() for p in self.parents]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)


class _Power(_Derived):
    """``F ** exponent``; exact quantile ``Q_F(u ** (1/exponent))``."""

    def __init__(self, parent: Cdf, exponent: float):
        self.parents = (parent,)
        self.parent, self.exponent = parent, float(exponent)

    def _eval(self, x):
        return self.parent._eval(x) ** self.exponent

    def _quantile(self, u):
        return self.parent._quantile(u ** (1.0 / self.exponent))

    def __repr__(self):
        return f"({self.parent!r})**{self.exponent:g}"


class _LambdaVee(_Derived):
    def __init__(self, parent: Cdf):
        self.parents = (parent,)
        self.parent = parent

    def _eval(self, x):
        p = self.parent._eval(x)
        out = np.zeros_like(p)
        pos = p > 0
        out[pos] = np.maximum(0.0, 1.0 + np.log(p[pos]))
        return out

    def _quantile(self, u):
        return self.parent._quantile(np.exp(u - 1.0))

    def breakpoints(self):
        edge = self.parent._quantile(np.array([math.exp(-1.0)]))
        return np.unique(np.concatenate((super().breakpoints(), edge)))

    def __repr__(self):
        return f"lambda_vee({self.parent!r})"


class _FreePower(_Derived):
    """``(k F - k + 1)^+``."""

    def __init__(self, parent: Cdf, k: int):
        self.parents = (parent,)
        self.parent, self.k = parent, int(k)

    def _eval(self, x):
        return np.maximum(0.0, self.k * self.parent._eval(x) - self.k + 1)

    def _quantile(self, u):
        return self.parent._quantile(1.0 - (1.0 - u) / self.k)

    def breakpoints(self):
        edge = self.parent._quantile(np.array([1.0 - 1.0 / self.k]))
        return np.unique(np.concatenate((super().breakpoints(), edge)))

    def __repr__(self):
        return f"free_power({self.parent!r}, {self.k})"


class _Affine(_Derived):
    """Law of ``a X + b`` for ``X ~ parent``, ``a > 0``."""

    def __init__(self, parent: Cdf, a: float, b: float):
        if not a > 0:
            raise DomainError("affine scale must be positive")
        self.parents = (parent,)
        self.parent, self.a, self.b = parent, float(a), float(b)

    def _eval(self, x):
        return self.parent._eval((x - self.b) / self.a)

    def _quantile(self, u):
        return self.a * self.parent._quantile(u) + self.b

    def breakpoints(self):
        return self.a * self.parent.breakpoints() + self.b

    def __repr__(self):
        return f"affine({self.parent!r}, a={self.a:g}, b={self.b:g})"


class _Binary(_Derived):
    """Pointwise combination of two CDFs; quantile by bracketed bisection."""

    def __init__(self, F: Cdf, G: Cdf):
        self.parents = (F, G)
        self.F, self.G = F, G

    def _combine(self, f, g):
        raise NotImplementedError

    def _bracket(self, u):
        raise NotImplementedError

    def _eval(self, x):
        return self._combine(self.F._eval(x), self.G._eval(x))

    def _quantile(self, u):
        lo_u, hi_u = self._bracket(u)
        lo = np.maximum(self.F._quantile(lo_u), self.G._quantile(lo_u))
        hi = np.maximum(self.F._quantile(hi_u), self.G._quantile(hi_u))
        done = self._eval(lo) >= u
        # below ``lo`` the combination is < u by construction, so lo is the answer
        out = np.where(done, lo, hi)
        todo = ~done
        a, b, uu = lo[todo], hi[todo], u[todo]
        for _ in range(_BISECT_MAXITER):
            if a.size == 0:
                break
            gap = b - a
            if np.all(gap <= _BISECT_RTOL * np.maximum(1.0, np.abs(b))):
                break
            mid = a + 0.5 * gap
            up = self._eval(mid) >= uu
            b = np.where(up, mid, b)
            a = np.where(up, a, mid)
        out[todo] = self._snap(b, a, uu)
        return out

    def _snap(self, b, a, u):
        """Move a bisection result onto a jump point it has converged to."""
        bps = self.breakpoints()
        if bps.size == 0:
            return b
        i = np.searchsorted(bps, b, side="right") - 1
        ok = i >= 0
        cand = np.where(ok, bps[np.maximum(i, 0)], b)
        tol = 4 * _BISECT_RTOL * np.maximum(1.0, np.abs(b))
        near = ok & (cand > a - tol) & (b - cand <= tol)
        near &= self._eval(cand) >= u
        return np.where(near, cand, b)


class _Product(_Binary):
    def _combine(self, f, g):
        return f * g

    def _bracket(self, u):
        return u, np.sqrt(u)

    def __repr__(self):
        return f"({self.F!r} * {self.G!r})"


class _FreeMax(_Binary):
    def _combine(self, f, g):
        return np.maximum(0.0, f + g - 1.0)

    def _bracket(self, u):
        return u, 0.5 * (1.0 + u)

    def __repr__(self):
        return f"({self.F!r} free-max {self.G!r})"


class _GridInterpolated(_Derived):
    """Continuous interpolation of ``parent`` through the knots ``j * eps``."""

    def __init__(self, parent: Cdf, eps: float):
        self.parents = (parent,)
        self.parent, self.eps = parent, float(eps)

    def _eval(self, x):
        j = np.floor(x / self.eps)
        x0 = j * self.eps
        x1 = (j + 1) * self.eps
        f0, f1 = self.parent._eval(x0), self.parent._eval(x1)
        w = np.clip((x - x0) / self.eps, 0.0, 1.0)
        return f0 + w * (f1 - f0)

    def _quantile(self, u):
        q = self.parent._quantile(u)
        j = np.ceil(q / self.eps)
        j = np.where(self.parent._eval(j * self.eps) >= u, j, j + 1)
        x0, x1 = (j - 1) * self.eps, j * self.eps
        f0, f1 = self.parent._eval(x0), self.parent._eval(x1)
        return x0 + self.eps * (u - f0) / (f1 - f0)

    def breakpoints(self):
        return np.empty(0)

    @property
    def has_atoms(self):
        return False

    def __repr__(self):
        return f"smooth_approx({self.parent!r}, {self.eps:g})"


# ----------------------------------------------------------------------------
# operations


def cdf_eval(F: Cdf, x):
    """``F(x)``; vectorised over ``x``."""
    return F(x)


def quantile(F: Cdf, u):
    """Generalised inverse ``min{x : F(x) >= u}`` for ``u`` in (0, 1)."""
    return F.quantile(u)


def _steps_levels(F, G, op):
    pts = np.union1d(F.points, G.points)
    if isinstance(F, EmpiricalStep) and isinstance(G, EmpiricalStep) and F.n == G.n:
        cf = np.searchsorted(F.samples, pts, side="right")
        cg = np.searchsorted(G.samples, pts, side="right")
        if op == "free":
            return pts, np.maximum(0, cf + cg - F.n) / F.n
        return pts, (cf * cg) / (F.n * F.n)
    f, g = F._eval(pts), G._eval(pts)
    if op == "free":
        return pts, np.maximum(0.0, f + g - 1.0)
    return pts, f * g


def classical_max_conv(F: Cdf, G: Cdf) -> Cdf:
    """CDF of ``max(X, Y)`` for independent ``X ~ F``, ``Y ~ G``: ``F * G``."""
    if isinstance(F, _StepCdf) and isinstance(G, _StepCdf):
        return Atomic.from_levels(*_steps_levels(F, G, "classical"))
    if isinstance(F, PiecewiseLinear) and isinstance(G, PiecewiseLinear):
        xs = np.union1d(F.xs, G.xs)
        mids = 0.5 * (xs[1:] + xs[:-1])
        xs = np.union1d(xs, mids)
        ps = F._eval(xs) * G._eval(xs)
        ps[-1] = 1.0
        return PiecewiseLinear(xs, ps)
    if F is G or F == G:
        if isinstance(F, Gumbel):
            return Gumbel(F.loc + F.scale * math.log(2.0), F.scale)
        return _Power(F, 2.0)
    return _Product(F, G)


def free_max_conv(F: Cdf, G: Cdf) -> Cdf:
    """Free upper extremal convolution ``max(0, F + G - 1)``."""
    if isinstance(F, _StepCdf) and isinstance(G, _StepCdf):
        pts, levels = _steps_levels(F, G, "free")
        if isinstance(F, EmpiricalStep) and isinstance(G, EmpiricalStep) and F.n == G.n:
            # the result has exactly F.n atoms of mass 1/n
            counts = np.rint(levels * F.n).astype(np.int64)
            mult = np.diff(np.concatenate(([0], counts)))
            return EmpiricalStep(np.repeat(pts, mult))
        return Atomic.from_levels(pts, levels)
    if F is G or F == G:
        return _FreePower(F, 2)
    return _FreeMax(F, G)


def free_max_conv_power(F: Cdf, k: int) -> Cdf:
    """``k``-fold free max-convolution of ``F`` with itself: ``(kF - k + 1)^+``."""
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    k = int(k)
    if k == 1:
        return F
    return _FreePower(F, k)


def lambda_vee(F: Cdf) -> Cdf:
    """Pointwise ``max(0, 1 + log F)``; exactly 0 wherever ``F = 0``."""
    return _LambdaVee(F)


def kth_root(F: Cdf, k: int) -> Cdf:
    """Max-root ``F ** (1/k)``, the law whose ``k``-fold classical max is ``F``."""
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    k = int(k)
    if k == 1:
        return F
    if isinstance(F, Gumbel):
        return Gumbel(F.loc - F.scale * math.log(k), F.scale)
    if isinstance(F, Frechet):
        return Frechet(F.alpha, F.loc, F.scale * k ** (-1.0 / F.alpha))
    if isinstance(F, Weibull):
        return Weibull(F.alpha, F.loc, F.scale * k ** (1.0 / F.alpha))
    if isinstance(F, _StepCdf):
        return Atomic.from_levels(F.points, F.levels ** (1.0 / k))
    if isinstance(F, _Power):
        return _Power(F.parent, F.exponent / k)
    return _Power(F, 1.0 / k)


def affine(F: Cdf, a: float, b: float) -> Cdf:
    """CDF of ``a X + b``: ``x -> F((x - b)/a)``; closed families stay closed."""
    if not a > 0:
        raise DomainError("affine scale must be positive")
    if a == 1 and b == 0:
        return F
    if isinstance(F, Uniform):
        return Uniform(a * F.a + b, a * F.b + b)
    if isinstance(F, Gumbel):
        return Gumbel(a * F.loc + b, a * F.scale)
    if isinstance(F, Frechet):
        return Frechet(F.alpha, a * F.loc + b, a * F.scale)
    if isinstance(F, Weibull):
        return Weibull(F.alpha, a * F.loc + b, a * F.scale)
    if isinstance(F, Atomic):
        return Atomic.from_levels(a * F.points + b, F.levels)
    if isinstance(F, EmpiricalStep):
        return EmpiricalStep(a * F.samples + b)
    if isinstance(F, PiecewiseLinear):
        return PiecewiseLinear(a * F.xs + b, F.ps)
    return _Affine(F, a, b)


def sample(F: Cdf, n: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. draws by inverse transform."""
    if n < 0:
        raise DomainError("sample size must be non-negative")
    if n == 0:
        return np.empty(0)
    return F._quantile(rng.uniform_open(n))


def empirical_cdf(samples) -> EmpiricalStep:
    return EmpiricalStep(samples)


def _eval_points(F: Cdf, G: Cdf, n_grid: int) -> np.ndarray:
    bps = np.concatenate((F.breakpoints(), G.breakpoints()))
    pts = [bps, np.nextafter(bps, -np.inf)]
    for H in (F, G):
        if isinstance(H, _StepCdf):
            continue
        lo, hi = H.bounds(1e-9)
        pts.append(np.linspace(lo, hi, n_grid))
        pts.append(H._quantile(np.linspace(0.5 / n_grid, 1 - 0.5 / n_grid, n_grid)))
    pts = np.concatenate(pts)
    return np.unique(pts[np.isfinite(pts)])


def ks_distance(F: Cdf, G: Cdf, n_grid: int = 10_000) -> float:
    """Uniform distance ``sup_x |F(x) - G(x)|``.

    Exact for two step CDFs (every jump and its left limit is visited);
    for continuous laws a quantile-adapted refinement grid is added.
    """
    x = _eval_points(F, G, n_grid)
    return float(np.max(np.abs(F._eval(x) - G._eval(x)))) if x.size else 0.0


def _quantile_levels(F: Cdf, G: Cdf, n_uniform: int) -> np.ndarray:
    j = np.arange(1, 10)
    tails = np.concatenate((10.0 ** -j, 1.0 - 10.0 ** -j))
    u = [np.linspace(0, 1, n_uniform + 2)[1:-1], tails]
    for H in (F, G):
        if isinstance(H, _StepCdf):
            lv = H.levels[:-1]
            u += [lv, np.nextafter(lv, 2.0)]
    u = np.unique(np.concatenate(u))
    return u[(u > 0) & (u < 1)]


def quantile_sup_distance(F: Cdf, G: Cdf, n_uniform: int = 10_000) -> float:
    """``sup_u |Q_F(u) - Q_G(u)|`` on a tail-refined grid; ``inf`` if unbounded."""
    u = _quantile_levels(F, G, n_uniform)
    with np.errstate(invalid="ignore", over="ignore"):
        d = np.abs(F._quantile(u) - G._quantile(u))
    if not np.all(np.isfinite(d)):
        return math.inf
    return float(np.max(d))


def smooth_approx(F: Cdf, eps: float) -> Cdf:
    """Continuous CDF interpolating ``F`` at the knots ``j * eps``.

    Satisfies ``F_eps(x - eps) <= F(x) <= F_eps(x + eps)`` for every ``x``.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    return _GridInterpolated(F, eps)


def to_piecewise_linear(F: Cdf, n: int = 4096, tail: float = 1e-6) -> PiecewiseLinear:
    """Tabulate ``F`` on ``n`` quantile-spaced breakpoints between the tail quantiles."""
    u = np.linspace(tail, 1.0 - tail, n)
    xs = np.unique(F._quantile(u))
    ps = F._eval(xs)
    ps = np.maximum.accumulate(ps)
    ps[-1] = 1.0
    return PiecewiseLinear(xs, ps)


# ----------------------------------------------------------------------------
# textual distribution specs and sample CSV


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.IGNORECASE)

_FAMILIES = {
    "uniform": Uniform,
    "gumbel": Gumbel,
    "frechet": Frechet,
    "weibull": Weibull,
    "exponential": Exponential,
}


def parse_distribution(spec: str, base_dir: str | Path | None = None) -> Cdf:
    """Parse ``uniform(0,1)``, ``atomic(0:0.5,1:0.5)``, ``empirical(file.csv)`` etc.

    ``points(5,1)`` gives the empirical law of the listed values.
    """
    m = _SPEC_RE.match(spec)
    if not m:
        raise DomainError(f"malformed distribution spec: {spec!r}")
    name, body = m.group(1).lower(), m.group(2).strip()
    if name == "empirical":
        path = Path(body)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return EmpiricalStep(read_samples_csv(path))
    args = [a.strip() for a in body.split(",")] if body else []
    try:
        if name == "atomic":
            atoms = []
            for a in args:
                x, m_ = a.split(":")
                atoms.append((float(x), float(m_)))
            return Atomic(atoms)
        if name == "points":
            return EmpiricalStep([float(a) for a in args])
        if name in _FAMILIES:
            return _FAMILIES[name](*[float(a) for a in args])
    except (TypeError, ValueError) as exc:
        raise DomainError(f"bad arguments in distribution spec {spec!r}: {exc}") from exc
    raise DomainError(f"unknown distribution family {name!r} in {spec!r}")


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["value"]:
        raise DomainError(f"{path}: expected a 'value' header")
    return np.array([float(r[0]) for r in rows[1:] if r])


def write_samples_csv(path, values) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in np.asarray(values, dtype=float).tolist():
            fh.write(f"{v!r}\n")

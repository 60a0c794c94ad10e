"""Bivariate copula carriers: exact checkerboard grids and closed forms.

A copula is a distribution function on the unit square with uniform
margins.  Two kinds of carrier are provided:

* :class:`GridCopula` stores an n-by-n doubly stochastic matrix ``A``;
  cell ``(k, l)`` of the uniform n-partition holds mass ``A[k, l] / n``
  spread uniformly, so the copula is piecewise bilinear and evaluation,
  H-volumes, partial derivatives and conditional sampling are exact.
* closed-form copulas (independence, the two Frechet-Hoeffding bounds,
  plus the parametric families in :mod:`copula_markov.families`) implement
  the same interface analytically, falling back to central finite
  differences where no closed-form derivative exists.

All operations are pure; carrier objects are immutable and safe to share
across threads.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "CopulaError",
    "DomainError",
    "InvariantError",
    "Copula",
    "GridCopula",
    "IndependenceCopula",
    "UpperFrechetCopula",
    "LowerFrechetCopula",
    "TransposedCopula",
    "StepFunction",
    "IntervalFamily",
    "cell_index",
]

#: validation tolerance for row/column sums of input matrices
MATRIX_TOL = 1e-9

#: finite-difference step for analytic partial derivatives
FD_STEP = 1e-6

# relative snap of n*x onto integer cell boundaries; points this close to a
# boundary are treated as lying on it (the a.e. conventions below then apply)
_BOUNDARY_SNAP = 1e-9


class CopulaError(Exception):
    """Base class for errors raised by this package."""


class DomainError(CopulaError, ValueError):
    """A point, rectangle or parameter lies outside its admissible domain."""


class InvariantError(CopulaError, ValueError):
    """A carrier object violates one of its structural invariants."""


def _check_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.any(np.isnan(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _snap(t):
    """Snap values of ``t = n*x`` that sit within rounding noise of an integer."""
    r = np.rint(t)
    return np.where(np.abs(t - r) <= _BOUNDARY_SNAP * np.maximum(1.0, np.abs(t)), r, t)


def cell_index(n, x, side="right"):
    """Cell of ``x`` in the uniform n-partition of [0, 1].

    Boundary points k/n resolve to the right-hand cell for ``side="right"``
    (the package-wide convention for partial derivatives) and to the
    left-hand cell for ``side="left"``.  x = 1 always maps to the last cell.
    """
    t = _snap(np.asarray(x, dtype=float) * n)
    if side == "left":
        k = np.ceil(t).astype(int) - 1
    else:
        k = np.floor(t).astype(int)
    return np.clip(k, 0, n - 1)


def _ramp(n, x):
    """Weights w_l(x) = clamp(n*x - l, 0, 1), the fraction of cell l below x."""
    x = np.asarray(x, dtype=float)
    return np.clip(n * x[..., None] - np.arange(n, dtype=float), 0.0, 1.0)


def _validate_doubly_stochastic(matrix, tol=MATRIX_TOL, what="matrix"):
    a = np.ascontiguousarray(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvariantError(f"{what} must be square and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantError(f"{what} contains non-finite entries")
    if a.min() < -tol:
        raise InvariantError(f"{what} has a negative entry ({a.min():g})")
    a = np.clip(a, 0.0, None)
    row_gap = np.max(np.abs(a.sum(axis=1) - 1.0))
    col_gap = np.max(np.abs(a.sum(axis=0) - 1.0))
    if row_gap > tol or col_gap > tol:
        raise InvariantError(
            f"{what} is not doubly stochastic within {tol:g} "
            f"(worst row gap {row_gap:.3g}, column gap {col_gap:.3g}); "
            "use GridCopula.renormalized() for an explicit Sinkhorn rebalance"
        )
    a.setflags(write=False)
    return a


class Copula(abc.ABC):
    """Interface shared by all copula carriers.

    ``cdf`` and ``partial_derivative`` are vectorized over numpy arrays and
    broadcast their point arguments.
    """

    @abc.abstractmethod
    def cdf(self, u, v):
        """C(u, v).  Raises :class:`DomainError` outside the unit square."""

    @abc.abstractmethod
    def to_spec(self) -> dict:
        """Serializable description (see :mod:`copula_markov.serialize`)."""

    # -- derivatives --------------------------------------------------------

    def partial_derivative(self, component, u, v, side="right"):
        """Partial derivative of C with respect to one component.

        ``side`` fixes the convention where the derivative jumps (grid cell
        boundaries, ridges of the Frechet bounds): "right" takes the
        right-hand limit in the differentiated variable, "left" the
        left-hand one.  Both are versions of the same a.e.-defined function.
        """
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        if component == 1:
            return self._pd1(u, v, side)
        if component == 2:
            return self._pd2(u, v, side)
        raise DomainError(f"component must be 1 or 2, got {component!r}")

    def _pd1(self, u, v, side):
        return _fd_partial(self.cdf, u, v, axis=0)

    def _pd2(self, u, v, side):
        return _fd_partial(self.cdf, u, v, axis=1)

    # -- volumes and discretization -----------------------------------------

    def h_volume(self, u1, u2, v1, v2):
        """Mass of the rectangle [u1, u2] x [v1, v2] (>= 0 for any copula)."""
        if not (0.0 <= u1 <= u2 <= 1.0 and 0.0 <= v1 <= v2 <= 1.0):
            raise DomainError(
                f"malformed rectangle [{u1}, {u2}] x [{v1}, {v2}]"
            )
        c = self.cdf
        return float(c(u2, v2) - c(u2, v1) - c(u1, v2) + c(u1, v1))

    def discretize(self, n):
        """Checkerboard approximation at resolution n (exact cell masses)."""
        n = _check_resolution(n)
        g = np.linspace(0.0, 1.0, n + 1)
        corners = np.asarray(self.cdf(g[:, None], g[None, :]), dtype=float)
        a = n * np.diff(np.diff(corners, axis=0), axis=1)
        if a.min() < -MATRIX_TOL:
            raise DomainError(
                f"copula is not 2-increasing within tolerance: "
                f"most negative cell mass {a.min() / n:.3g}"
            )
        return GridCopula(np.clip(a, 0.0, None))

    # -- conditioning and sampling -------------------------------------------

    def conditional_cdf(self, u, t):
        """t -> d1 C(u, t), the conditional law of the second coordinate."""
        return self.partial_derivative(1, u, t)

    def conditional_quantile(self, u, w):
        """Generalized inverse inf{t : d1 C(u, t) >= w}, by bisection."""
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        shape = np.broadcast_shapes(u.shape, w.shape)
        lo = np.zeros(shape)
        hi = np.ones(shape)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = self.conditional_cdf(u, mid) >= w
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return hi

    def sample(self, count, seed):
        """``count`` i.i.d. pairs, deterministic for a given ``seed``."""
        if count < 1:
            raise DomainError("count must be >= 1")
        rng = np.random.default_rng(seed)
        u = rng.random(count)
        w = np.maximum(rng.random(count), 1e-300)
        return np.column_stack([u, self.conditional_quantile(u, w)])

    # -- structure hints used by the metrics integrators ----------------------

    def knots_u(self):
        """Interior u-values where the copula is not smooth (may be empty)."""
        return ()

    def knots_v(self):
        return ()

    def conditional_knots(self, u):
        """Interior non-smooth points of t -> d1 C(u, t)."""
        return ()


def _fd_partial(f, u, v, axis):
    # central difference in the interior; the stencil slides inward at the
    # boundary so it never leaves the unit square
    h = FD_STEP
    x = u if axis == 0 else v
    lo = np.clip(np.asarray(x, dtype=float) - h, 0.0, 1.0 - 2.0 * h)
    hi = lo + 2.0 * h
    if axis == 0:
        return (f(hi, v) - f(lo, v)) / (2.0 * h)
    return (f(u, hi) - f(u, lo)) / (2.0 * h)


def _check_resolution(n):
    n = int(n)
    if n < 1:
        raise DomainError("resolution must be a positive integer")
    return n


# ---------------------------------------------------------------------------
# checkerboard copulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridCopula(Copula):
    """Checkerboard copula of resolution n.

    ``matrix`` is doubly stochastic (rows and columns sum to 1); entry
    ``matrix[k, l]`` is n times the mass of the cell
    ((k)/n, (k+1)/n) x ((l)/n, (l+1)/n).  The induced cdf is the bilinear
    interpolant of its own corner values, so the whole grid algebra is
    exact up to floating point.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = _validate_doubly_stochastic(self.matrix)
        object.__setattr__(self, "matrix", a)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def renormalized(matrix, tol=1e-13, max_iter=10_000):
        """Sinkhorn-balance a nonnegative matrix into the carrier.

        Rebalancing is always explicit; the constructor never repairs its
        input silently.
        """
        a = np.asarray(matrix, dtype=float).copy()
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvariantError("matrix must be square")
        if a.min() < 0 or not np.all(np.isfinite(a)):
            raise InvariantError("matrix must be nonnegative and finite")
        for _ in range(max_iter):
            a /= a.sum(axis=1, keepdims=True)
            a /= a.sum(axis=0, keepdims=True)
            if (
                np.max(np.abs(a.sum(axis=1) - 1.0)) <= tol
                and np.max(np.abs(a.sum(axis=0) - 1.0)) <= tol
            ):
                break
        else:
            raise InvariantError("Sinkhorn rebalancing did not converge")
        return GridCopula(a)

    @cached_property
    def _prefix(self):
        """(n+1)x(n+1) corner values n*C(k/n, l/n), i.e. 2-d prefix sums."""
        n = self.n
        p = np.zeros((n + 1, n + 1))
        p[1:, 1:] = self.matrix.cumsum(axis=0).cumsum(axis=1)
        p.setflags(write=False)
        return p

    def corner_cdf(self):
        """Exact cdf values on the (n+1)x(n+1) corner lattice."""
        return self._prefix / self.n

    def cdf(self, u, v):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        u, v = np.broadcast_arrays(u, v)
        n = self.n
        ku = cell_index(n, u)
        kv = cell_index(n, v)
        fu = np.clip(n * u - ku, 0.0, 1.0)
        fv = np.clip(n * v - kv, 0.0, 1.0)
        p = self._prefix
        val = (
            (1 - fu) * (1 - fv) * p[ku, kv]
            + fu * (1 - fv) * p[ku + 1, kv]
            + (1 - fu) * fv * p[ku, kv + 1]
            + fu * fv * p[ku + 1, kv + 1]
        ) / n
        return val if val.shape else float(val)

    def _pd1(self, u, v, side):
        u, v = np.broadcast_arrays(u, v)
        k = cell_index(self.n, u, side=side)
        w = _ramp(self.n, v)
        out = np.einsum("...l,...l->...", self.matrix[k, :], w)
        return out if out.shape else float(out)

    def _pd2(self, u, v, side):
        u, v = np.broadcast_arrays(u, v)
        l = cell_index(self.n, v, side=side)
        w = _ramp(self.n, u)
        out = np.einsum("...l,...l->...", self.matrix.T[l, :], w)
        return out if out.shape else float(out)

    def refined(self, factor):
        """Equivalent checkerboard on the (factor*n)-grid (same copula)."""
        r = int(factor)
        if r < 1:
            raise DomainError("refinement factor must be >= 1")
        if r == 1:
            return self
        return GridCopula(np.kron(self.matrix, np.full((r, r), 1.0 / r)))

    def discretize(self, n):
        n = _check_resolution(n)
        if n == self.n:
            return self
        if n % self.n == 0:
            return self.refined(n // self.n)
        if self.n % n == 0:
            r = self.n // n
            coarse = self.matrix.reshape(n, r, n, r).sum(axis=(1, 3)) / r
            return GridCopula(coarse)
        return super().discretize(n)

    def sample(self, count, seed):
        if count < 1:
            raise DomainError("count must be >= 1")
        rng = np.random.default_rng(seed)
        u = rng.random(count)
        w = np.maximum(rng.random(count), 1e-300)
        k = cell_index(self.n, u)
        row_cum = np.cumsum(self.matrix, axis=1)[k, :]
        m = (row_cum < w[:, None]).sum(axis=1)
        m = np.minimum(m, self.n - 1)
        prev = np.where(m > 0, np.take_along_axis(row_cum, np.maximum(m - 1, 0)[:, None], 1)[:, 0], 0.0)
        mass = self.matrix[k, m]
        frac = np.divide(w - prev, mass, out=np.zeros_like(w), where=mass > 0)
        v = (m + np.clip(frac, 0.0, 1.0)) / self.n
        return np.column_stack([u, v])

    def knots_u(self):
        return tuple(np.arange(1, self.n) / self.n)

    knots_v = knots_u

    def conditional_knots(self, u):
        return self.knots_v()

    def to_spec(self):
        return {"type": "checkerboard", "matrix": self.matrix.tolist()}


# ---------------------------------------------------------------------------
# closed-form base copulas
# ---------------------------------------------------------------------------


class IndependenceCopula(Copula):
    """C(u, v) = u v."""

    def cdf(self, u, v):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        return u * v

    def _pd1(self, u, v, side):
        v, _ = np.broadcast_arrays(v, u)
        return v.copy() if v.shape else float(v)

    def _pd2(self, u, v, side):
        u, _ = np.broadcast_arrays(u, v)
        return u.copy() if u.shape else float(u)

    def conditional_quantile(self, u, w):
        w, _ = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(u))
        return w.copy()

    def discretize(self, n):
        n = _check_resolution(n)
        return GridCopula(np.full((n, n), 1.0 / n))

    def to_spec(self):
        return {"type": "product"}

    def __repr__(self):
        return "IndependenceCopula()"

    def __eq__(self, other):
        return isinstance(other, IndependenceCopula)

    def __hash__(self):
        return hash(type(self))


class UpperFrechetCopula(Copula):
    """Upper Frechet-Hoeffding bound C(u, v) = min(u, v) (comonotone)."""

    def cdf(self, u, v):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        return np.minimum(u, v)

    def _pd1(self, u, v, side):
        u, v = np.broadcast_arrays(u, v)
        if side == "left":
            out = (u <= v).astype(float)
        else:
            out = (u < v).astype(float)
        return out if out.shape else float(out)

    def _pd2(self, u, v, side):
        return self._pd1(v, u, side)

    def conditional_quantile(self, u, w):
        u, _ = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w))
        return u.copy()

    def conditional_knots(self, u):
        return (float(u),)

    def discretize(self, n):
        # mass sits on the diagonal v = u, one cell's worth per diagonal cell
        return GridCopula(np.eye(_check_resolution(n)))

    def to_spec(self):
        return {"type": "frechet-upper"}

    def __repr__(self):
        return "UpperFrechetCopula()"

    def __eq__(self, other):
        return isinstance(other, UpperFrechetCopula)

    def __hash__(self):
        return hash(type(self))


class LowerFrechetCopula(Copula):
    """Lower Frechet-Hoeffding bound C(u, v) = max(u + v - 1, 0)."""

    def cdf(self, u, v):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        return np.maximum(u + v - 1.0, 0.0)

    def _pd1(self, u, v, side):
        u, v = np.broadcast_arrays(u, v)
        if side == "left":
            out = (u > 1.0 - v).astype(float)
        else:
            out = (u >= 1.0 - v).astype(float)
        return out if out.shape else float(out)

    def _pd2(self, u, v, side):
        return self._pd1(v, u, side)

    def conditional_quantile(self, u, w):
        u, _ = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(w))
        return 1.0 - u

    def conditional_knots(self, u):
        return (1.0 - float(u),)

    def discretize(self, n):
        # mass sits on the antidiagonal v = 1 - u
        return GridCopula(np.eye(_check_resolution(n))[::-1].copy())

    def to_spec(self):
        return {"type": "frechet-lower"}

    def __repr__(self):
        return "LowerFrechetCopula()"

    def __eq__(self, other):
        return isinstance(other, LowerFrechetCopula)

    def __hash__(self):
        return hash(type(self))


@dataclass(frozen=True, eq=False)
class TransposedCopula(Copula):
    """(u, v) -> C(v, u) for a wrapped copula C."""

    base: Copula

    def cdf(self, u, v):
        return self.base.cdf(v, u)

    def _pd1(self, u, v, side):
        return self.base.partial_derivative(2, v, u, side=side)

    def _pd2(self, u, v, side):
        return self.base.partial_derivative(1, v, u, side=side)

    def knots_u(self):
        return self.base.knots_v()

    def knots_v(self):
        return self.base.knots_u()

    def conditional_knots(self, u):
        # d1 of the transpose at (u, t) is d2 of the base at (t, u); its
        # non-smooth points in t are the base's u-knots plus any ridge
        knots = list(self.base.knots_u())
        for ridge in self.base.conditional_knots(u):
            knots.append(ridge)
        return tuple(knots)

    def to_spec(self):
        return {"type": "transpose", "of": self.base.to_spec()}


# ---------------------------------------------------------------------------
# auxiliary value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function on the uniform n-partition of [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.size < 1 or not np.all(np.isfinite(v)):
            raise InvariantError("values must be a non-empty finite 1-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        x = _check_unit(x, "x")
        return self.values[cell_index(self.n, x)]

    def integral(self) -> float:
        """Integral over [0, 1]; equals the mean of the cell values exactly."""
        return float(np.mean(self.values))

    def is_decreasing(self, tol=0.0) -> bool:
        return bool(np.all(np.diff(self.values) <= tol))

    def is_increasing(self, tol=0.0) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol))

    @staticmethod
    def indicator_upto(n, j):
        """Indicator of [0, j/n] as a step function (1 on the first j cells)."""
        n = _check_resolution(n)
        if not 0 <= j <= n:
            raise DomainError(f"j must be in 0..{n}")
        vals = np.zeros(n)
        vals[:j] = 1.0
        return StepFunction(vals)


@dataclass(frozen=True)
class IntervalFamily:
    """Finite family of disjoint open subintervals of (0, 1), sorted."""

    intervals: tuple

    def __post_init__(self):
        clean = []
        for pair in self.intervals:
            a, b = float(pair[0]), float(pair[1])
            if not (0.0 <= a < b <= 1.0):
                raise InvariantError(f"bad interval ({a}, {b})")
            clean.append((a, b))
        clean.sort()
        for (a1, b1), (a2, b2) in zip(clean, clean[1:]):
            if b1 > a2:
                raise InvariantError(
                    f"intervals ({a1}, {b1}) and ({a2}, {b2}) overlap"
                )
        object.__setattr__(self, "intervals", tuple(clean))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def total_length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def endpoints(self):
        return tuple(sorted({x for ab in self.intervals for x in ab}))

    def aligned_cell_ranges(self, n, tol=1e-9):
        """Intervals as (start, stop) cell-index ranges on the n-grid.

        Raises :class:`DomainError` when an endpoint is not a multiple of
        1/n within ``tol``, suggesting the nearest aligned family.
        """
        n = _check_resolution(n)
        ranges = []
        for a, b in self.intervals:
            ia, ib = a * n, b * n
            ra, rb = round(ia), round(ib)
            if abs(ia - ra) > tol * n or abs(ib - rb) > tol * n:
                raise DomainError(
                    f"interval ({a}, {b}) is not aligned to the 1/{n} grid; "
                    f"nearest aligned interval is ({ra / n}, {rb / n})"
                )
            ranges.append((int(ra), int(rb)))
        return ranges

    def to_list(self):
        return [[a, b] for a, b in self.intervals]

    @staticmethod
    def from_list(pairs):
        return IntervalFamily(tuple((float(a), float(b)) for a, b in pairs))

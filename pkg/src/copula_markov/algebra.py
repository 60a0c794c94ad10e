"""The Markov product and its induced algebra on copulas.

The product of two copulas is the copula

    (C1 * C2)(u, v) = integral_0^1  d2 C1(u, t) d1 C2(t, v) dt,

which for checkerboards reduces to the ordinary product of their doubly
stochastic matrices; the grid path is therefore exact and the midpoint
quadrature of the defining integral is kept purely as a validation oracle.
Closed-form operands are discretized first (inheriting the resolution of a
grid partner, else the configured default); the upper Frechet bound and
the independence copula act as the unit and the annihilator and are
short-circuited exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import lcm

import numpy as np

from .core import (
    Copula,
    CopulaError,
    DomainError,
    GridCopula,
    IndependenceCopula,
    IntervalFamily,
    LowerFrechetCopula,
    TransposedCopula,
    UpperFrechetCopula,
)
from . import metrics

__all__ = [
    "DEFAULT_RESOLUTION",
    "RESOLUTION_CAP_ENV",
    "ResolutionCapError",
    "NotStochasticallyIncreasingError",
    "DecompositionError",
    "markov_product",
    "quadrature_markov_product",
    "transpose",
    "si_sd_involution",
    "power",
    "is_idempotent",
    "IdempotenceVerdict",
    "iterate_to_limit",
    "IterateReport",
    "extract_pi_ordinal_structure",
    "PiDecomposition",
]

#: default checkerboard resolution for closed-form operands
DEFAULT_RESOLUTION = 128

#: environment variable overriding the refinement cap
RESOLUTION_CAP_ENV = "COPULA_GRID_CAP"

_DEFAULT_CAP = 4096


class ResolutionCapError(CopulaError):
    """A mixed-resolution product would exceed the refinement cap."""


class NotStochasticallyIncreasingError(CopulaError):
    """The operation requires a stochastically increasing input."""

    def __init__(self, verdict):
        self.verdict = verdict
        super().__init__(
            "input is not stochastically increasing in the first component "
            f"(worst violation {verdict.max_violation:.3g} at {verdict.witness})"
        )


class DecompositionError(CopulaError):
    """Block verification of an extracted interval family failed."""

    def __init__(self, intervals, block_gaps, limit):
        self.intervals = intervals
        self.block_gaps = block_gaps
        super().__init__(
            f"ordinal-sum verification failed: worst block gap {max(block_gaps):.3g} "
            f"exceeds {limit:.3g} (input not idempotent enough or not "
            "stochastically monotone)"
        )


def resolution_cap(cap=None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get(RESOLUTION_CAP_ENV)
    return int(env) if env else _DEFAULT_CAP


def _as_grid(c: Copula, n: int) -> GridCopula:
    return c if isinstance(c, GridCopula) and c.n == n else c.discretize(n)


def _common_grid_pair(c1, c2, resolution, cap):
    """Bring both operands onto one grid (lcm refinement, cap-checked)."""
    limit = resolution_cap(cap)
    if isinstance(c1, GridCopula) and isinstance(c2, GridCopula):
        n = lcm(c1.n, c2.n)
    elif isinstance(c1, GridCopula):
        n = c1.n
    elif isinstance(c2, GridCopula):
        n = c2.n
    else:
        n = int(resolution)
    if n > limit:
        raise ResolutionCapError(
            f"common resolution {n} exceeds the cap {limit} "
            f"(override with {RESOLUTION_CAP_ENV} or the cap argument)"
        )
    return _as_grid(c1, n), _as_grid(c2, n)


def markov_product(c1: Copula, c2: Copula, resolution=DEFAULT_RESOLUTION, cap=None):
    """C1 * C2.

    The upper Frechet bound is the unit and independence annihilates; both
    identities are applied exactly.  Everything else goes through the grid
    path: equal resolutions multiply their matrices, unequal ones refine to
    the least common multiple first, and closed-form operands discretize
    at the partner grid's resolution (or ``resolution`` when both are
    closed forms).
    """
    if isinstance(c1, UpperFrechetCopula):
        return c2
    if isinstance(c2, UpperFrechetCopula):
        return c1
    if isinstance(c1, IndependenceCopula) or isinstance(c2, IndependenceCopula):
        return IndependenceCopula()
    g1, g2 = _common_grid_pair(c1, c2, resolution, cap)
    return GridCopula(g1.matrix @ g2.matrix)


def quadrature_markov_product(c1: Copula, c2: Copula, panels: int):
    """Midpoint-rule approximation of the defining integral of C1 * C2.

    Returns a vectorized point evaluator.  This is the validation oracle
    for the matrix path; with both operands on a common grid of resolution
    n and ``panels`` a multiple of n, the piecewise-constant integrand is
    integrated exactly.
    """
    if panels < 8:
        raise DomainError("panel count must be >= 8")
    t = (np.arange(panels) + 0.5) / panels

    def value(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u, v = np.broadcast_arrays(u, v)
        left = np.asarray(c1.partial_derivative(2, u[..., None], t))
        right = np.asarray(c2.partial_derivative(1, t, v[..., None]))
        out = (left * right).sum(axis=-1) / panels
        return out if out.shape else float(out)

    return value


def transpose(c: Copula) -> Copula:
    """(u, v) -> C(v, u); the matrix transpose on grids."""
    if isinstance(c, GridCopula):
        return GridCopula(c.matrix.T.copy())
    if isinstance(c, TransposedCopula):
        return c.base
    if isinstance(c, (IndependenceCopula, UpperFrechetCopula, LowerFrechetCopula)):
        return c
    return TransposedCopula(c)


def si_sd_involution(c: Copula, resolution=DEFAULT_RESOLUTION, cap=None):
    """The lower Frechet bound times C, i.e. (u, v) -> v - C(1 - u, v).

    On grids this reverses the row order of the matrix exactly, swapping
    stochastically increasing and decreasing copulas; applying it twice is
    the identity (bit-level on grids).
    """
    return markov_product(LowerFrechetCopula(), c, resolution=resolution, cap=cap)


def power(c: Copula, n: int, resolution=DEFAULT_RESOLUTION, cap=None):
    """n-fold Markov product (repeated squaring on grids)."""
    if n < 1:
        raise DomainError("power requires n >= 1")
    if isinstance(c, (UpperFrechetCopula, IndependenceCopula)):
        return c
    grid = _as_grid(c, c.n if isinstance(c, GridCopula) else int(resolution))
    return GridCopula(np.linalg.matrix_power(grid.matrix, n))


@dataclass(frozen=True)
class IdempotenceVerdict:
    idempotent: bool
    gap: float
    witness: tuple

    def __bool__(self):
        return self.idempotent

    def to_json(self):
        return {
            "idempotent": self.idempotent,
            "gap": self.gap,
            "witness": list(self.witness),
        }


def is_idempotent(c: Copula, tol=1e-9, resolution=DEFAULT_RESOLUTION) -> IdempotenceVerdict:
    """True iff the sup distance between C * C and C is at most ``tol``.

    Ordinal sums resolve componentwise: the self-product of an ordinal sum
    is the ordinal sum of the component self-products over the same
    intervals, so the copula is idempotent exactly when every component
    is.  This keeps the check exact for interval families that do not
    align with any finite grid.  Everything else goes through the product.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    from .families import OrdinalSumCopula

    if isinstance(c, OrdinalSumCopula):
        gap, witness = 0.0, (0.0, 0.0)
        for (a, b), comp in zip(c.intervals, c.components):
            sub = is_idempotent(comp, tol=tol, resolution=resolution)
            scaled = (b - a) * sub.gap
            if scaled > gap:
                gap = scaled
                witness = (a + (b - a) * sub.witness[0], a + (b - a) * sub.witness[1])
        return IdempotenceVerdict(bool(gap <= tol), float(gap), witness)
    square = markov_product(c, c, resolution=resolution)
    gap, witness = metrics.d_inf_witness(square, c)
    return IdempotenceVerdict(bool(gap <= tol), float(gap), witness)


# ---------------------------------------------------------------------------
# iterates and their idempotent limits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterateReport:
    """Outcome of iterating C, C*C, C*C*C, ... to its idempotent limit."""

    n_steps: int
    limit: GridCopula
    intervals: IntervalFamily
    sup_gap: float
    monotone_decrease_violation: float
    converged: bool
    steps: tuple  # (step, d_inf_gap, d1_gap) per iteration

    def to_json(self):
        return {
            "n_steps": self.n_steps,
            "limit": self.limit.to_spec(),
            "intervals": self.intervals.to_list(),
            "sup_gap": self.sup_gap,
            "monotone_decrease_violation": self.monotone_decrease_violation,
            "converged": self.converged,
        }


def _corner_sup(g1: GridCopula, g2: GridCopula):
    """Exact sup distance between equal-resolution grids (signed max too)."""
    diff = (g1._prefix - g2._prefix) / g1.n
    return float(np.abs(diff).max()), float(diff.max())


def iterate_to_limit(
    c: Copula,
    tol=1e-8,
    max_iter=200,
    resolution=DEFAULT_RESOLUTION,
    interval_tol=1e-6,
) -> IterateReport:
    """Iterate the Markov product of C with itself until consecutive
    iterates agree within ``tol`` in sup distance.

    Requires C stochastically increasing in the first component (the
    iterates then decrease pointwise, which is also verified and reported
    as ``monotone_decrease_violation``).  The limit's diagonal structure is
    extracted into an interval family.
    """
    from .monotonicity import check_si

    base = _as_grid(c, c.n if isinstance(c, GridCopula) else int(resolution))
    verdict = check_si(base, component=1, tol=1e-9)
    if not verdict.si:
        raise NotStochasticallyIncreasingError(verdict)

    current = base
    steps = []
    sup_gap = np.inf
    worst_increase = 0.0
    converged = False
    n_steps = 0
    for step in range(1, max_iter + 1):
        nxt = GridCopula(base.matrix @ current.matrix)
        sup_gap, signed_max = _corner_sup(nxt, current)
        worst_increase = max(worst_increase, max(signed_max, 0.0))
        steps.append((step, sup_gap, metrics._d1_grids(nxt, current)))
        n_steps = step
        if sup_gap < tol:
            converged = True
            current = nxt
            break
        current = nxt

    if converged:
        intervals = extract_pi_ordinal_structure(current, tol=interval_tol).intervals
    else:
        intervals = IntervalFamily(())  # no limit reached, nothing to decompose
    return IterateReport(
        n_steps=n_steps,
        limit=current,
        intervals=intervals,
        sup_gap=float(sup_gap),
        monotone_decrease_violation=float(worst_increase),
        converged=converged,
        steps=tuple(steps),
    )


# ---------------------------------------------------------------------------
# ordinal-sum structure of idempotents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiDecomposition:
    """Interval family of an idempotent copula plus per-block verification."""

    intervals: IntervalFamily
    block_gaps: tuple
    max_block_gap: float

    def to_json(self):
        return {
            "intervals": self.intervals.to_list(),
            "block_gaps": list(self.block_gaps),
            "max_block_gap": self.max_block_gap,
        }


def _diagonal_gap(c: Copula, v):
    v = np.asarray(v, dtype=float)
    return v - np.asarray(c.cdf(v, v))


def _refine_edge(c, lo, hi, eps=1e-12, iters=80):
    """Boundary of {v : v - C(v, v) > eps} inside (lo, hi) by bisection."""
    g_lo = float(_diagonal_gap(c, lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (float(_diagonal_gap(c, mid)) > eps) == (g_lo > eps):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def extract_pi_ordinal_structure(c: Copula, tol=1e-6, scan=1024) -> PiDecomposition:
    """Recover the interval family of an idempotent copula from its diagonal.

    The closed set {v : v - C(v, v) <= tol} is located on a scan grid (the
    exact cell corners for checkerboards, a uniform 1/scan grid refined by
    bisection for closed forms); its complement in (0, 1) is the interval
    family.  Each block is then rescaled and compared against independence;
    a worst-block gap beyond 10*tol raises :class:`DecompositionError`.

    Requires the input idempotent within ``tol``.
    """
    idem = is_idempotent(c, tol=tol)
    if not idem.idempotent:
        raise DomainError(
            f"input is not idempotent within {tol:g} (sup gap {idem.gap:.3g} "
            f"at {idem.witness})"
        )

    if isinstance(c, GridCopula):
        points = np.arange(1, c.n) / c.n
        refine = False
    else:
        points = np.arange(1, scan) / scan
        refine = True

    if points.size:
        fixed = _diagonal_gap(c, points) <= tol
    else:
        fixed = np.zeros(0, dtype=bool)

    intervals = []
    i = 0
    m = points.size
    while i < m:
        if fixed[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and not fixed[j + 1]:
            j += 1
        if i == 0:
            left = 0.0
        elif refine:
            left = _refine_edge(c, points[i - 1], points[i])
        else:
            left = float(points[i - 1])
        if j == m - 1:
            right = 1.0
        elif refine:
            right = _refine_edge(c, points[j + 1], points[j])
        else:
            right = float(points[j + 1])
        intervals.append((left, right))
        i = j + 1

    if m == 0:
        # resolution-1 grids carry a single block covering everything
        if float(_diagonal_gap(c, 0.5)) > tol:
            intervals.append((0.0, 1.0))

    family = IntervalFamily(tuple(intervals))

    block_gaps = []
    s = np.linspace(0.0, 1.0, 33)
    target = s[:, None] * s[None, :]
    for a, b in family:
        width = b - a
        vals = np.asarray(c.cdf(a + width * s[:, None], a + width * s[None, :]))
        block_gaps.append(float(np.max(np.abs((vals - a) / width - target))))
    max_gap = max(block_gaps) if block_gaps else 0.0
    if max_gap > 10.0 * tol:
        raise DecompositionError(family, tuple(block_gaps), 10.0 * tol)
    return PiDecomposition(family, tuple(block_gaps), float(max_gap))

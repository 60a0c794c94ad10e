"""Distances and functionals on copulas: sup distance, the integrated
partial-derivative distance D1, and the diagonal Sobolev functional."""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

import numpy as np

from .core import Copula, DomainError, GridCopula

__all__ = [
    "d_inf",
    "d_inf_witness",
    "d1_metric",
    "sobolev_diagonal",
    "nqd_idempotent_check",
    "NqdVerdict",
    "AUDIT_POINTS",
]

#: default audit grid for sup-type comparisons (257 points per axis)
AUDIT_POINTS = 257

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _axis_points(c1: Copula, c2: Copula, knot_getter):
    pts = np.linspace(0.0, 1.0, AUDIT_POINTS)
    extra = list(knot_getter(c1)()) + list(knot_getter(c2)())
    if extra:
        pts = np.unique(np.concatenate([pts, np.asarray(extra, dtype=float)]))
    return pts


def _sup_mesh_gap(c1, c2, signed=False):
    """Max of (c1 - c2) (signed) or |c1 - c2| over the audit mesh.

    The mesh is the 257-point lattice joined with all cell corners of grid
    operands; for common-resolution grids the difference is piecewise
    bilinear, so the corner sweep is exact.
    """
    us = _axis_points(c1, c2, lambda c: c.knots_u)
    vs = _axis_points(c1, c2, lambda c: c.knots_v)
    best = -np.inf
    best_uv = (0.0, 0.0)
    # chunk the v-axis to keep the mesh memory bounded for fine grids
    step = max(1, int(4e6 / max(us.size, 1)))
    for start in range(0, vs.size, step):
        vc = vs[start : start + step]
        diff = np.asarray(c1.cdf(us[:, None], vc[None, :])) - np.asarray(
            c2.cdf(us[:, None], vc[None, :])
        )
        if not signed:
            diff = np.abs(diff)
        i, j = np.unravel_index(np.argmax(diff), diff.shape)
        if diff[i, j] > best:
            best = float(diff[i, j])
            best_uv = (float(us[i]), float(vc[j]))
    return best, best_uv


def d_inf_witness(c1: Copula, c2: Copula):
    """Sup distance together with a point attaining it on the audit mesh."""
    return _sup_mesh_gap(c1, c2, signed=False)


def d_inf(c1: Copula, c2: Copula) -> float:
    """max |C1 - C2| over the audit mesh (exact for equal-resolution grids)."""
    return d_inf_witness(c1, c2)[0]


def max_signed_gap(c1: Copula, c2: Copula):
    """max (C1 - C2) over the audit mesh, with witness (may be negative)."""
    return _sup_mesh_gap(c1, c2, signed=True)


# ---------------------------------------------------------------------------
# D1 metric
# ---------------------------------------------------------------------------


def d1_metric(c1: Copula, c2: Copula) -> float:
    """Integral of |d1 C1 - d1 C2| over the unit square.

    Grid pairs are brought to a common resolution and integrated exactly
    (the derivative gap is piecewise linear in v and constant in u on each
    cell).  A grid paired with a closed-form copula discretizes the latter
    onto a refinement of the grid.  Closed-form pairs run a panel
    integrator that splits each slice at the structural knots of both
    operands, locates the sign changes of the gap, and applies
    Gauss-Legendre on the sign-constant pieces.
    """
    if isinstance(c1, GridCopula) and isinstance(c2, GridCopula):
        n = lcm(c1.n, c2.n)
        return _d1_grids(c1.discretize(n), c2.discretize(n))
    if isinstance(c1, GridCopula):
        n = c1.n * max(1, -(-128 // c1.n))
        return _d1_grids(c1.discretize(n), c2.discretize(n))
    if isinstance(c2, GridCopula):
        n = c2.n * max(1, -(-128 // c2.n))
        return _d1_grids(c1.discretize(n), c2.discretize(n))
    return _d1_slices(c1, c2)


def _abs_linear_integral(y0, y1, width):
    """Exact integral of |linear segment| with endpoint values y0, y1."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    same = y0 * y1 >= 0.0
    trapezoid = 0.5 * (np.abs(y0) + np.abs(y1))
    denom = np.abs(y0) + np.abs(y1)
    crossing = np.divide(
        y0 * y0 + y1 * y1, 2.0 * denom, out=np.zeros_like(denom), where=denom > 0
    )
    return width * np.where(same, trapezoid, crossing)


def _d1_grids(g1: GridCopula, g2: GridCopula) -> float:
    n = g1.n
    delta = g1.matrix - g2.matrix
    cum = np.zeros((n, n + 1))
    cum[:, 1:] = np.cumsum(delta, axis=1)
    # on u-cell k, the derivative gap is linear in v across each v-cell,
    # running from cum[k, m] to cum[k, m + 1]
    pieces = _abs_linear_integral(cum[:, :-1], cum[:, 1:], 1.0 / n)
    return float(pieces.sum() / n)


def _slice_knots(c1, c2, u):
    pts = {0.0, 1.0}
    pts.update(float(x) for x in c1.conditional_knots(u))
    pts.update(float(x) for x in c2.conditional_knots(u))
    pts.update(float(x) for x in c1.knots_v())
    pts.update(float(x) for x in c2.knots_v())
    return np.array(sorted(p for p in pts if 0.0 <= p <= 1.0))


def _integrate_abs_smooth(gap, lo, hi):
    """Integral of |gap| on [lo, hi] where gap is smooth; splits at sign
    changes found among the sample nodes by bisection."""
    if hi - lo <= 1e-15:
        return 0.0
    xs = lo + (hi - lo) * np.linspace(0.0, 1.0, 9)
    ys = gap(xs)
    cuts = [lo]
    # exact zeros at sample nodes already separate the signs
    cuts.extend(float(x) for x, y in zip(xs[1:-1], ys[1:-1]) if y == 0.0)
    for x0, x1, y0, y1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        if y0 == 0.0 or y0 * y1 >= 0.0:
            continue
        a, b = x0, x1
        for _ in range(60):
            m = 0.5 * (a + b)
            if gap(np.array([m]))[0] * y0 > 0:
                a = m
            else:
                b = m
        cuts.append(0.5 * (a + b))
    cuts.append(hi)
    cuts = np.unique(np.array(cuts))
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        nodes = mid + half * _GL_NODES
        total += abs(half * float(np.dot(_GL_WEIGHTS, gap(nodes))))
    return total


def _d1_slices(c1, c2, u_panels=24):
    u_edges = {0.0, 1.0}
    u_edges.update(float(x) for x in c1.knots_u())
    u_edges.update(float(x) for x in c2.knots_u())
    u_edges = np.array(sorted(u_edges))

    def slice_value(u):
        knots = _slice_knots(c1, c2, u)

        def gap(t):
            return np.asarray(c1.partial_derivative(1, u, t)) - np.asarray(
                c2.partial_derivative(1, u, t)
            )

        return sum(
            _integrate_abs_smooth(gap, a, b) for a, b in zip(knots[:-1], knots[1:])
        )

    total = 0.0
    for a, b in zip(u_edges[:-1], u_edges[1:]):
        panels = np.linspace(a, b, u_panels + 1)
        for p0, p1 in zip(panels[:-1], panels[1:]):
            mid = 0.5 * (p0 + p1)
            half = 0.5 * (p1 - p0)
            vals = [slice_value(mid + half * x) for x in _GL_NODES]
            total += half * float(np.dot(_GL_WEIGHTS, vals))
    return total


def d1_midpoint(c1: Copula, c2: Copula, panels=512) -> float:
    """Plain midpoint-rule estimate of the D1 integral (validation oracle)."""
    t = (np.arange(panels) + 0.5) / panels
    gap = np.abs(
        np.asarray(c1.partial_derivative(1, t[:, None], t[None, :]))
        - np.asarray(c2.partial_derivative(1, t[:, None], t[None, :]))
    )
    return float(gap.mean())


# ---------------------------------------------------------------------------
# diagonal Sobolev functional
# ---------------------------------------------------------------------------


def sobolev_diagonal(c: Copula) -> float:
    """2 * integral of (C*C)(u, u) du.

    For symmetric idempotent copulas this equals the squared Sobolev norm.
    The self-product comes from :func:`copula_markov.algebra.markov_product`;
    grid products are integrated exactly cell by cell (the diagonal section
    is piecewise quadratic), closed forms by composite Simpson on 1025
    nodes.
    """
    from .algebra import markov_product

    square = markov_product(c, c)
    if isinstance(square, GridCopula):
        return 2.0 * _grid_diagonal_integral(square)
    from scipy.integrate import simpson

    u = np.linspace(0.0, 1.0, 1025)
    return 2.0 * float(simpson(np.asarray(square.cdf(u, u)), x=u))


def _grid_diagonal_integral(g: GridCopula) -> float:
    n = g.n
    a = g.matrix
    prefix = g._prefix
    block = prefix[np.arange(n), np.arange(n)]
    row_part = prefix[np.arange(1, n + 1), np.arange(n)] - block
    col_part = prefix[np.arange(n), np.arange(1, n + 1)] - block
    diag = np.diagonal(a)
    # within cell k: n C(u, u) = block + f (row_part + col_part) + f^2 diag
    return float(np.sum(block + 0.5 * (row_part + col_part) + diag / 3.0) / n**2)


# ---------------------------------------------------------------------------
# the NQD-idempotent characterization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NqdVerdict:
    """Outcome of the idempotent + negative-quadrant-dependence check."""

    nqd: bool
    max_excess_over_independence: float
    d_inf_to_independence: float | None
    sobolev: float | None
    consistent: bool | None

    def to_json(self):
        return {
            "nqd": self.nqd,
            "max_excess_over_independence": self.max_excess_over_independence,
            "d_inf_to_independence": self.d_inf_to_independence,
            "sobolev": self.sobolev,
            "consistent": self.consistent,
        }


def nqd_idempotent_check(c: Copula, tol=1e-9) -> NqdVerdict:
    """For an idempotent copula: if it is NQD, it must already be the
    independence copula (sup distance <= 10*tol and diagonal Sobolev
    functional within 10*tol of 2/3); the verdict reports both checks.

    Raises :class:`DomainError` when the input is not idempotent within
    ``tol`` in sup distance.
    """
    from .algebra import is_idempotent
    from .core import IndependenceCopula

    idem = is_idempotent(c, tol=tol)
    if not idem.idempotent:
        raise DomainError(
            f"input is not idempotent within {tol:g} (gap {idem.gap:.3g})"
        )
    pi = IndependenceCopula()
    excess, _ = max_signed_gap(c, pi)
    if excess > tol:
        return NqdVerdict(False, float(excess), None, None, None)
    gap = d_inf(c, pi)
    sob = sobolev_diagonal(c)
    consistent = gap <= 10.0 * tol and abs(sob - 2.0 / 3.0) <= 10.0 * tol
    return NqdVerdict(True, float(excess), float(gap), float(sob), bool(consistent))

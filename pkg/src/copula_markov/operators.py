"""Markov operators on step functions and the copula correspondence.

At resolution n the operator of a checkerboard copula acts on cell
averages as the doubly stochastic matrix itself: positivity, the fixed
constant function and integral preservation are the matrix statements
"entries >= 0", "row sums 1" and "column sums 1".  The inverse map
rebuilds the copula from the operator matrix, making the correspondence
one-to-one on grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Copula,
    DomainError,
    GridCopula,
    IntervalFamily,
    StepFunction,
    _validate_doubly_stochastic,
)

__all__ = [
    "DiscreteMarkovOperator",
    "operator_of",
    "copula_of",
    "conditional_expectation_form",
    "fixed_sigma_field",
]


@dataclass(frozen=True, eq=False)
class DiscreteMarkovOperator:
    """Markov operator restricted to step functions on the uniform n-grid."""

    matrix: np.ndarray

    def __post_init__(self):
        a = _validate_doubly_stochastic(self.matrix, what="operator matrix")
        object.__setattr__(self, "matrix", a)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, f: StepFunction) -> StepFunction:
        if f.n != self.n:
            raise DomainError(
                f"operator resolution {self.n} does not match step function {f.n}"
            )
        return StepFunction(self.matrix @ f.values)

    def compose(self, other: "DiscreteMarkovOperator") -> "DiscreteMarkovOperator":
        if other.n != self.n:
            raise DomainError("operators must share a resolution")
        return DiscreteMarkovOperator(self.matrix @ other.matrix)

    def is_idempotent(self, tol=1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix @ self.matrix - self.matrix)) <= tol)

    def to_spec(self):
        return {
            "type": "markov-operator",
            "resolution": self.n,
            "matrix": self.matrix.tolist(),
        }


def operator_of(c: Copula, n: int) -> DiscreteMarkovOperator:
    """Operator of C at resolution n (the matrix of its checkerboard)."""
    if isinstance(c, GridCopula) and c.n == n:
        return DiscreteMarkovOperator(c.matrix)
    return DiscreteMarkovOperator(c.discretize(n).matrix)


def copula_of(op: DiscreteMarkovOperator) -> GridCopula:
    """Checkerboard copula of a discrete Markov operator.

    Inverse of :func:`operator_of` on grids: the round trip reproduces the
    matrix bit for bit.
    """
    return GridCopula(op.matrix)


def conditional_expectation_form(intervals, n: int) -> DiscreteMarkovOperator:
    """Block-averaging operator: uniform average on each interval of cells,
    identity off the blocks.

    Interval endpoints must be multiples of 1/n; misaligned families are
    rejected with the nearest aligned suggestion.  The result is an
    idempotent Markov operator.
    """
    if not isinstance(intervals, IntervalFamily):
        intervals = IntervalFamily.from_list(intervals)
    a = np.eye(int(n))
    for start, stop in intervals.aligned_cell_ranges(n):
        size = stop - start
        a[start:stop, start:stop] = 1.0 / size
        a[start:stop, :start] = 0.0
        a[start:stop, stop:] = 0.0
    return DiscreteMarkovOperator(a)


def fixed_sigma_field(op: DiscreteMarkovOperator, tol=1e-9):
    """Generating partition of the sets fixed by an idempotent operator.

    Cells are grouped by the connected components of the support graph of
    the matrix; each component's indicator must be fixed by the operator
    within ``tol``.  Only unions of grid cells are searched, which is
    exhaustive for grid-exact operators.
    """
    a = op.matrix
    n = op.n
    if np.max(np.abs(a @ a - a)) > tol:
        raise DomainError(f"operator is not idempotent within {tol:g}")
    adjacency = (a > tol) | (a.T > tol)
    labels = np.full(n, -1)
    parts = []
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = len(parts)
        member = [start]
        while stack:
            i = stack.pop()
            for j in np.nonzero(adjacency[i])[0]:
                if labels[j] < 0:
                    labels[j] = labels[start]
                    stack.append(j)
                    member.append(int(j))
        parts.append(tuple(sorted(member)))
    for part in parts:
        indicator = np.zeros(n)
        indicator[list(part)] = 1.0
        if np.max(np.abs(a @ indicator - indicator)) > tol:
            raise DomainError(
                f"component {part} is not fixed by the operator within {tol:g}"
            )
    return sorted(parts)

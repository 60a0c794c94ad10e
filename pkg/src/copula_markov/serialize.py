"""CopulaSpec serialization.

A copula spec is a JSON document with a ``type`` tag:

    {"type": "checkerboard", "matrix": [[...], ...]}
    {"type": "product"}
    {"type": "frechet-upper"} / {"type": "frechet-lower"}
    {"type": "archimedean", "family": "clayton", "theta": 2.0}
    {"type": "extreme-value", "family": "gumbel", "theta": 2.5}
    {"type": "ordinal-sum", "intervals": [[a, b], ...],
     "components": [spec, ...]}
    {"type": "transpose", "of": spec}

Archimedean families: independence, clayton, gumbel, frank.  Extreme-value
families: independence, comonotone, gumbel.  Checkerboard matrices may
also be read and written as headerless CSV, one row per line; tabulated
generators load from CSV rows of (t, phi(t)).
"""

from __future__ import annotations

import json

import numpy as np

from .core import (
    Copula,
    CopulaError,
    GridCopula,
    IndependenceCopula,
    IntervalFamily,
    LowerFrechetCopula,
    TransposedCopula,
    UpperFrechetCopula,
)
from . import families

__all__ = [
    "SpecError",
    "copula_from_spec",
    "copula_to_spec",
    "load_copula",
    "save_copula",
    "matrix_from_csv",
    "matrix_to_csv",
    "generator_from_csv",
]


class SpecError(CopulaError, ValueError):
    """The spec document is malformed or references an unknown family."""


_ARCHIMEDEAN = {
    "independence": lambda theta: families.independence_generator(),
    "clayton": families.clayton_generator,
    "gumbel": families.gumbel_generator,
    "frank": families.frank_generator,
}

_PICKANDS = {
    "independence": lambda theta: families.independence_pickands(),
    "comonotone": lambda theta: families.comonotone_pickands(),
    "gumbel": families.gumbel_pickands,
}


def copula_from_spec(spec) -> Copula:
    """Build a copula from a spec document (dict)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise SpecError("spec must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "checkerboard":
        if "matrix" not in spec:
            raise SpecError("checkerboard spec needs a 'matrix'")
        return GridCopula(np.asarray(spec["matrix"], dtype=float))
    if kind == "product":
        return IndependenceCopula()
    if kind == "frechet-upper":
        return UpperFrechetCopula()
    if kind == "frechet-lower":
        return LowerFrechetCopula()
    if kind == "archimedean":
        family = spec.get("family")
        if family not in _ARCHIMEDEAN:
            raise SpecError(f"unknown archimedean family {family!r}")
        gen = _ARCHIMEDEAN[family](spec.get("theta"))
        return families.archimedean_copula(gen)
    if kind == "extreme-value":
        family = spec.get("family")
        if family not in _PICKANDS:
            raise SpecError(f"unknown extreme-value family {family!r}")
        pick = _PICKANDS[family](spec.get("theta"))
        return families.extreme_value_copula(pick)
    if kind == "ordinal-sum":
        intervals = IntervalFamily.from_list(spec.get("intervals", []))
        components = tuple(copula_from_spec(s) for s in spec.get("components", []))
        return families.OrdinalSumCopula(intervals, components)
    if kind == "transpose":
        if "of" not in spec:
            raise SpecError("transpose spec needs an 'of' field")
        return TransposedCopula(copula_from_spec(spec["of"]))
    raise SpecError(f"unknown spec type {kind!r}")


def copula_to_spec(c: Copula) -> dict:
    return c.to_spec()


def load_copula(path) -> Copula:
    """Load a copula from a JSON spec file, or from a headerless CSV matrix
    when the path ends in .csv."""
    path = str(path)
    if path.endswith(".csv"):
        return GridCopula(matrix_from_csv(path))
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
    return copula_from_spec(spec)


def save_copula(c: Copula, path) -> None:
    path = str(path)
    if path.endswith(".csv"):
        if not isinstance(c, GridCopula):
            raise SpecError("only checkerboard copulas can be written as CSV")
        matrix_to_csv(c.matrix, path)
        return
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(c.to_spec(), fh, sort_keys=True)
        fh.write("\n")


def matrix_from_csv(path) -> np.ndarray:
    try:
        matrix = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise SpecError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    return matrix


def matrix_to_csv(matrix, path) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def generator_from_csv(path, name="tabulated"):
    """Tabulated Archimedean generator from CSV rows of (t, phi(t))."""
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    if table.shape[1] != 2:
        raise SpecError(f"{path}: generator table must have two columns")
    return families.tabulated_generator(table[:, 0], table[:, 1], name=name)

"""Rational polyhedral cones and duality by exact enumeration.

Cones live in R^d with d <= MAX_AMBIENT_DIM.  A cone is stored by its
generators; facets are inward normals a with <a, x> >= 0 on the cone.  Rays
are kept as primitive integer vectors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Sequence

from ..quad_core import rational_nullspace, rational_rank, to_fraction

MAX_AMBIENT_DIM = 4


class UnsupportedDimensionError(ValueError):
    pass


def primitive(vec: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to the primitive integer vector on its ray."""
    fr = [to_fraction(x) for x in vec]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(math.gcd, (abs(x) for x in ints), 0)
    if g == 0:
        return tuple(0 for _ in ints)
    return tuple(x // g for x in ints)


def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def _rays_of_inequalities(normals: list[tuple[int, ...]], dim: int) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """V-representation of {x : <a, x> >= 0 for all a}.

    Returns (extreme rays, lineality basis).  Brute force over subsets of the
    constraints, which is fine for dim <= 4 and a handful of constraints.
    """
    if not normals:
        return [], [primitive([int(i == j) for j in range(dim)]) for i in range(dim)]
    lin = [primitive(v) for v in rational_nullspace(normals, dim)]
    # pointed part lives in the orthogonal complement of the lineality space
    d_pointed = dim - len(lin)
    if d_pointed == 0:
        return [], lin
    rays: list[tuple[int, ...]] = []
    seen = set()
    for subset in itertools.combinations(range(len(normals)), d_pointed - 1):
        rows = [normals[i] for i in subset] + lin
        if rational_rank(rows) != dim - 1:
            continue
        null = rational_nullspace(rows, dim)
        if len(null) != 1:
            continue
        r = primitive(null[0])
        for cand in (r, tuple(-x for x in r)):
            if all(dot(a, cand) >= 0 for a in normals) and any(dot(a, cand) > 0 for a in normals):
                if cand not in seen:
                    seen.add(cand)
                    rays.append(cand)
    rays.sort()
    return rays, lin


@dataclass(frozen=True)
class PolyhedralCone:
    """Finitely generated cone; no generators means the zero cone."""

    ambient_dim: int
    generators: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.ambient_dim > MAX_AMBIENT_DIM:
            raise UnsupportedDimensionError(
                f"ambient dimension {self.ambient_dim} exceeds the cap {MAX_AMBIENT_DIM}"
            )
        gens = []
        for g in self.generators:
            if len(g) != self.ambient_dim:
                raise ValueError(f"generator {g} has the wrong length")
            p = primitive(g)
            if any(p) and p not in gens:
                gens.append(p)
        object.__setattr__(self, "generators", tuple(gens))

    @classmethod
    def zero(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, ())

    @classmethod
    def orthant(cls, dim: int, sign: int = 1) -> "PolyhedralCone":
        return cls(dim, tuple(tuple(sign * int(i == j) for j in range(dim)) for i in range(dim)))

    @classmethod
    def whole_space(cls, dim: int) -> "PolyhedralCone":
        gens = []
        for i in range(dim):
            e = [0] * dim
            e[i] = 1
            gens.append(tuple(e))
            gens.append(tuple(-x for x in e))
        return cls(dim, tuple(gens))

    @cached_property
    def _hrep(self):
        # inward facet normals of cone(G) = V-rep of {a : <a, g> >= 0}
        return _rays_of_inequalities(list(self.generators), self.ambient_dim)

    @property
    def facets(self) -> tuple[tuple[int, ...], ...]:
        """Inward normals; lineality directions of the dual appear as +/- pairs."""
        rays, lin = self._hrep
        out = list(rays)
        for v in lin:
            out.append(v)
            out.append(tuple(-x for x in v))
        return tuple(out)

    def contains(self, x: Sequence) -> bool:
        return all(dot(a, x) >= 0 for a in self.facets)

    @cached_property
    def span_basis(self) -> list[tuple[int, ...]]:
        """Integer basis of the linear span of the generators (row-reduced)."""
        basis: list[tuple[int, ...]] = []
        for g in self.generators:
            if rational_rank(basis + [g]) > len(basis):
                basis.append(g)
        return basis

    @property
    def is_full_dimensional(self) -> bool:
        return len(self.span_basis) == self.ambient_dim


def dual_cone(cone: PolyhedralCone) -> PolyhedralCone:
    """K° = {w : <w, y> <= 0 for all y in K}, by exact double description."""
    if cone.ambient_dim > MAX_AMBIENT_DIM:
        raise UnsupportedDimensionError(f"ambient dimension {cone.ambient_dim} exceeds the cap")
    negated = [tuple(-x for x in g) for g in cone.generators]
    rays, lin = _rays_of_inequalities(negated, cone.ambient_dim)
    gens = list(rays)
    for v in lin:
        gens.append(v)
        gens.append(tuple(-x for x in v))
    return PolyhedralCone(cone.ambient_dim, tuple(gens))


def in_dual(cone: PolyhedralCone, omega: Sequence) -> bool:
    """Membership in K° checked directly against the generators of K."""
    return all(dot(g, omega) <= 0 for g in cone.generators)


def cone_from_spec(spec, dim: int) -> PolyhedralCone:
    """Accept 'zero', 'orthant', or a list of rays."""
    if spec in (None, "zero"):
        return PolyhedralCone.zero(dim)
    if spec == "orthant":
        return PolyhedralCone.orthant(dim)
    if spec == "whole":
        return PolyhedralCone.whole_space(dim)
    return PolyhedralCone(dim, tuple(primitive([Fraction(to_fraction(x)) for x in r]) for r in spec))

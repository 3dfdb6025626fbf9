"""GF(2) simplicial (co)homology on Python-int bitsets.

Cochains of degree d are ints whose bit s is the value on the s-th
d-simplex of the ambient complex (simplices sorted lexicographically).
Subcomplexes are per-degree masks over the same indexing, so relative
cochains are just cochains whose support avoids the subcomplex mask.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class OrderError(ValueError):
    pass


def bits(x: int) -> Iterable[int]:
    """Indices of set bits, ascending."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def popcount(x: int) -> int:
    return bin(x).count("1")


# ----------------------------------------------------------------- matrices


class Echelon:
    """Incremental GF(2) basis keyed by highest set bit, with optional tags.

    A tag records which inserted vectors were combined, so reducing a vector
    to zero also yields its coordinates in the inserted family.
    """

    def __init__(self):
        self.pivots: dict[int, tuple[int, int]] = {}

    def __len__(self):
        return len(self.pivots)

    def reduce(self, v: int, tag: int = 0) -> tuple[int, int]:
        piv = self.pivots
        while v:
            h = v.bit_length() - 1
            hit = piv.get(h)
            if hit is None:
                break
            v ^= hit[0]
            tag ^= hit[1]
        return v, tag

    def full_reduce(self, v: int, tag: int = 0) -> tuple[int, int]:
        """Reduce every reducible bit, not just the leading one."""
        out = 0
        while v:
            v, tag = self.reduce(v, tag)
            if not v:
                break
            h = v.bit_length() - 1
            out |= 1 << h
            v ^= 1 << h
        return out, tag

    def add(self, v: int, tag: int = 0) -> bool:
        v, tag = self.reduce(v, tag)
        if not v:
            return False
        self.pivots[v.bit_length() - 1] = (v, tag)
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0


@dataclass
class Z2Matrix:
    """Dense GF(2) matrix stored as packed row bitsets (bit c of rows[r])."""

    nrows: int
    ncols: int
    rows: list[int]

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "Z2Matrix":
        return cls(nrows, ncols, [0] * nrows)

    @classmethod
    def from_columns(cls, nrows: int, cols: Sequence[int]) -> "Z2Matrix":
        rows = [0] * nrows
        for c, col in enumerate(cols):
            for r in bits(col):
                rows[r] |= 1 << c
        return cls(nrows, len(cols), rows)

    @classmethod
    def from_dense(cls, arr) -> "Z2Matrix":
        a = np.asarray(arr, dtype=np.int64) % 2
        nrows, ncols = a.shape if a.ndim == 2 else (0, 0)
        rows = [sum(1 << c for c in range(ncols) if a[r, c]) for r in range(nrows)]
        return cls(nrows, ncols, rows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for r, row in enumerate(self.rows):
            for c in bits(row):
                out[r, c] = 1
        return out

    @property
    def columns(self) -> list[int]:
        cols = [0] * self.ncols
        for r, row in enumerate(self.rows):
            for c in bits(row):
                cols[c] |= 1 << r
        return cols

    def transpose(self) -> "Z2Matrix":
        return Z2Matrix(self.ncols, self.nrows, self.columns)

    def rank(self) -> int:
        ech = Echelon()
        for row in self.rows:
            ech.add(row)
        return len(ech)

    def apply(self, vec: int) -> int:
        """Matrix times a column vector given as a bitset over columns."""
        out = 0
        for r, row in enumerate(self.rows):
            if popcount(row & vec) & 1:
                out |= 1 << r
        return out

    def __matmul__(self, other: "Z2Matrix") -> "Z2Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        out = []
        for row in self.rows:
            acc = 0
            for c in bits(row):
                acc ^= other.rows[c]
            out.append(acc)
        return Z2Matrix(self.nrows, other.ncols, out)

    def is_zero(self) -> bool:
        return not any(self.rows)

    def to_lists(self) -> list[list[int]]:
        return [[(row >> c) & 1 for c in range(self.ncols)] for row in self.rows]


def kernel_of_columns(cols: Sequence[int]) -> list[int]:
    """Basis of {x : sum_{c in x} cols[c] = 0}, as bitsets over column indices."""
    ech = Echelon()
    out = []
    for c, col in enumerate(cols):
        v, tag = ech.reduce(col, 1 << c)
        if v:
            ech.pivots[v.bit_length() - 1] = (v, tag)
        else:
            out.append(tag)
    return out


def rank_of_columns(cols: Iterable[int]) -> int:
    ech = Echelon()
    for c in cols:
        ech.add(c)
    return len(ech)


# ---------------------------------------------------------------- complexes


class SimplicialComplex:
    """Abstract simplicial complex with graded, lexicographically sorted simplices."""

    def __init__(self, simplices: Sequence[Sequence[tuple[int, ...]]]):
        levels = [sorted(tuple(s) for s in level) for level in simplices]
        while levels and not levels[-1]:
            levels.pop()
        for d, level in enumerate(levels):
            for s in level:
                if len(s) != d + 1 or any(s[i] >= s[i + 1] for i in range(d)):
                    raise OrderError(f"simplex {s} is not a strictly increasing {d}-simplex")
        self.simplices = levels
        self.index = [{s: i for i, s in enumerate(level)} for level in levels]
        for d in range(1, len(levels)):
            for s in levels[d]:
                for face in itertools.combinations(s, d):
                    if face not in self.index[d - 1]:
                        raise ValueError(f"face {face} of {s} missing")

    @classmethod
    def from_cells(cls, cells: Iterable[Sequence[int]]) -> "SimplicialComplex":
        levels: list[set] = []
        for c in cells:
            c = tuple(sorted(c))
            while len(levels) < len(c):
                levels.append(set())
            for d in range(len(c)):
                levels[d].update(itertools.combinations(c, d + 1))
        return cls([sorted(level) for level in levels])

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def count(self, d: int) -> int:
        return len(self.simplices[d]) if 0 <= d < len(self.simplices) else 0

    def full_mask(self, d: int) -> int:
        return (1 << self.count(d)) - 1

    @cached_property
    def _faces(self) -> list[list[tuple[int, ...]]]:
        out: list[list[tuple[int, ...]]] = [[()] * self.count(0)]
        for d in range(1, len(self.simplices)):
            idx = self.index[d - 1]
            out.append([
                tuple(idx[s[:i] + s[i + 1:]] for i in range(d + 1)) for s in self.simplices[d]
            ])
        return out

    def faces(self, d: int) -> list[tuple[int, ...]]:
        """For each d-simplex, indices of its (d-1)-faces (face i omits vertex i)."""
        return self._faces[d]

    @cached_property
    def _cofaces(self) -> list[list[int]]:
        out = [[0] * self.count(d) for d in range(len(self.simplices))]
        for d in range(1, len(self.simplices)):
            for t, fs in enumerate(self._faces[d]):
                bit = 1 << t
                for f in fs:
                    out[d - 1][f] |= bit
        return out

    def coface_masks(self, d: int) -> list[int]:
        """Column s is the coboundary of the indicator of the s-th d-simplex."""
        if d < 0 or d >= len(self.simplices):
            return []
        return self._cofaces[d]

    def boundary_columns(self, d: int) -> list[int]:
        return [sum(1 << f for f in fs) for fs in self.faces(d)]

    def vertex_ids(self) -> list[int]:
        return [s[0] for s in self.simplices[0]] if self.simplices else []

    def full_subcomplex(self, keep: Callable[[int], bool]) -> "Subcomplex":
        masks = []
        for level in self.simplices:
            m = 0
            for i, s in enumerate(level):
                if all(keep(v) for v in s):
                    m |= 1 << i
            masks.append(m)
        return Subcomplex(self, masks)

    def closure_of(self, d: int, mask: int) -> "Subcomplex":
        """Smallest subcomplex containing the d-simplices in mask."""
        return Subcomplex.closure(self, {d: mask})

    def whole(self) -> "Subcomplex":
        return Subcomplex(self, [self.full_mask(d) for d in range(len(self.simplices))])

    def empty(self) -> "Subcomplex":
        return Subcomplex(self, [0] * len(self.simplices))


@dataclass
class Subcomplex:
    """Per-degree simplex masks over an ambient complex."""

    ambient: SimplicialComplex
    masks: list[int]

    def __post_init__(self):
        n = len(self.ambient.simplices)
        self.masks = list(self.masks[:n]) + [0] * (n - len(self.masks))

    @classmethod
    def closure(cls, ambient: SimplicialComplex, seeds: dict[int, int]) -> "Subcomplex":
        masks = [0] * len(ambient.simplices)
        for d, m in seeds.items():
            masks[d] |= m
        for d in range(len(masks) - 1, 0, -1):
            faces = ambient.faces(d)
            acc = 0
            for t in bits(masks[d]):
                for f in faces[t]:
                    acc |= 1 << f
            masks[d - 1] |= acc
        return cls(ambient, masks)

    def mask(self, d: int) -> int:
        return self.masks[d] if 0 <= d < len(self.masks) else 0

    def simplices(self, d: int) -> list[tuple[int, ...]]:
        level = self.ambient.simplices[d] if d < len(self.ambient.simplices) else []
        return [level[i] for i in bits(self.mask(d))]

    def count(self, d: int) -> int:
        return popcount(self.mask(d))

    def is_empty(self) -> bool:
        return not any(self.masks)

    def is_closed(self) -> bool:
        for d in range(1, len(self.masks)):
            faces = self.ambient.faces(d)
            for t in bits(self.masks[d]):
                if any(not (self.masks[d - 1] >> f) & 1 for f in faces[t]):
                    return False
        return True

    def issubset(self, other: "Subcomplex") -> bool:
        return all((a & ~b) == 0 for a, b in zip(self.masks, other.masks))

    def __or__(self, other: "Subcomplex") -> "Subcomplex":
        return Subcomplex(self.ambient, [a | b for a, b in zip(self.masks, other.masks)])

    def __and__(self, other: "Subcomplex") -> "Subcomplex":
        return Subcomplex(self.ambient, [a & b for a, b in zip(self.masks, other.masks)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Subcomplex) and self.masks == other.masks

    def vertex_set(self) -> set[int]:
        return {s[0] for s in self.simplices(0)}

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * self.count(d) for d in range(len(self.masks)))


# --------------------------------------------------------------- operations


def boundary_matrix(cx: SimplicialComplex, d: int) -> Z2Matrix:
    """Boundary map C_d -> C_{d-1} as a count(d-1) x count(d) matrix."""
    if d < 1 or d > cx.dim:
        raise ValueError(f"boundary degree {d} outside 1..{cx.dim}")
    return Z2Matrix.from_columns(cx.count(d - 1), cx.boundary_columns(d))


def coboundary(cx: SimplicialComplex, cochain: int, degree: int) -> int:
    """delta of a degree-d cochain; a cochain on a subcomplex is extended by zero."""
    out = 0
    cof = cx.coface_masks(degree)
    for s in bits(cochain):
        out ^= cof[s]
    return out


def _pair_columns(cx: SimplicialComplex, a: Subcomplex, b: Subcomplex, d: int) -> tuple[list[int], list[int]]:
    """(relative simplex indices, coboundary columns restricted to A) in degree d."""
    rel = list(bits(a.mask(d) & ~b.mask(d)))
    upper = a.mask(d + 1) & ~b.mask(d + 1)
    cof = cx.coface_masks(d)
    return rel, [cof[s] & upper for s in rel]


def betti(space: SimplicialComplex | Subcomplex, relative_to: Subcomplex | None = None) -> list[int]:
    """Z2 Betti numbers of a complex, a subcomplex, or a pair."""
    if isinstance(space, SimplicialComplex):
        space = space.whole()
    cx = space.ambient
    rel = relative_to if relative_to is not None else cx.empty()
    top = max((d for d in range(len(space.masks)) if space.mask(d) & ~rel.mask(d)), default=-1)
    ranks = []
    for d in range(top + 1):
        _, cols = _pair_columns(cx, space, rel, d)
        ranks.append(rank_of_columns(cols))
    out = []
    for d in range(top + 1):
        n = popcount(space.mask(d) & ~rel.mask(d))
        out.append(n - ranks[d] - (ranks[d - 1] if d > 0 else 0))
    return out


def reduced_betti(space: Subcomplex) -> list[int]:
    """Reduced Betti numbers; the empty space has b~_{-1} = 1, reported as [] here."""
    b = betti(space)
    if b:
        b[0] -= 1
    return b


@dataclass
class CohomologyClassBasis:
    """Representatives of H^i(A, B) with the data to decompose any cocycle."""

    degree: int
    representatives: list[int]
    image: Echelon = field(repr=False)
    tagged: Echelon = field(repr=False)
    relative_mask: int = 0
    upper_mask: int = 0

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def coordinates(self, cocycle: int) -> int:
        """Coordinates (bitset over representatives) of a relative cocycle's class."""
        if cocycle & ~self.relative_mask:
            raise ValueError("cochain is not supported on the relative simplices")
        rest, tag = self.tagged.full_reduce(cocycle)
        if rest:
            raise ValueError("cochain is not a relative cocycle")
        return tag

    def is_coboundary(self, cocycle: int) -> bool:
        return self.image.full_reduce(cocycle)[0] == 0


def relative_cohomology(
    cx: SimplicialComplex,
    space: Subcomplex | None,
    sub: Subcomplex | None,
    degree: int,
) -> CohomologyClassBasis:
    """H^degree(space, sub; Z2) with explicit representative cocycles."""
    space = space if space is not None else cx.whole()
    sub = sub if sub is not None else cx.empty()
    if space.ambient is not cx or sub.ambient is not cx:
        raise OrderError("subcomplexes must share the ambient vertex order")
    if not sub.issubset(space):
        raise ValueError("relative pair requires sub ⊆ space")
    rel_mask = space.mask(degree) & ~sub.mask(degree) if degree >= 0 else 0
    rel, cols = _pair_columns(cx, space, sub, degree) if degree >= 0 else ([], [])
    kernel = []
    for comb in kernel_of_columns(cols):
        kernel.append(sum(1 << rel[c] for c in bits(comb)))
    image = Echelon()
    if degree >= 1:
        _, lower_cols = _pair_columns(cx, space, sub, degree - 1)
        for c in lower_cols:
            image.add(c)
    tagged = Echelon()
    for v in image.pivots.values():
        tagged.pivots[v[0].bit_length() - 1] = (v[0], 0)
    reps = []
    for z in kernel:
        if tagged.add(z, 1 << len(reps)):
            reps.append(z)
    upper = space.mask(degree + 1) & ~sub.mask(degree + 1)
    return CohomologyClassBasis(degree, reps, image, tagged, rel_mask, upper)


def cup_product(
    cx: SimplicialComplex,
    a: int,
    p: int,
    b: int,
    q: int,
    support: int | None = None,
) -> int:
    """Alexander-Whitney cup product of a (degree p) and b (degree q)."""
    d = p + q
    if d > cx.dim:
        log.debug("cup product degree %d exceeds complex dimension %d", d, cx.dim)
        return 0
    if not a or not b:
        return 0
    idx_p, idx_q = cx.index[p], cx.index[q]
    out = 0
    level = cx.simplices[d]
    cand = support if support is not None else (1 << len(level)) - 1
    for t in bits(cand):
        s = level[t]
        if (a >> idx_p[s[: p + 1]]) & 1 and (b >> idx_q[s[p:]]) & 1:
            out |= 1 << t
    return out


def unit_cochain(cx: SimplicialComplex) -> int:
    return cx.full_mask(0)

"""Quadratic forms, linear systems of forms, and their inertia indices.

A quadratic form on R^{n+1} is stored as its symmetric matrix Q over the
rationals, q(x) = <Qx, x>.  A quadratic map p = (p^0, ..., p^k) is a list of
such forms, and the pencil at a covector omega is the form sum_i omega_i p^i.

The exact inertia routine is the authoritative one; the Jacobi routine is a
floating point cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "DimensionError",
    "RankError",
    "NumericError",
    "QuadraticForm",
    "Inertia",
    "QuadraticMap",
    "to_fraction",
    "evaluate_pencil",
    "inertia_exact",
    "inertia_float",
    "restrict_to_subspace",
    "hat_extend",
    "inertia_bilinear_shortcut",
    "rational_rank",
    "rational_nullspace",
]

RATIONALIZE_DENOMINATOR = 10**6


class DimensionError(ValueError):
    """Raised when vector or matrix sizes do not match."""


class RankError(ValueError):
    """Raised when a basis is linearly dependent or has the wrong rank."""


class NumericError(ArithmeticError):
    """Raised when an iterative float routine fails to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual off-diagonal norm {residual:.3e})")
        self.residual = residual


def to_fraction(value, max_denominator: int = RATIONALIZE_DENOMINATOR) -> Fraction:
    """Convert ints, Fractions, rational strings or floats to a Fraction.

    Floats are rationalized with the given denominator bound; the event is
    logged because it is the only inexact step in the input path.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite entry {value!r}")
        fr = Fraction(float(value)).limit_denominator(max_denominator)
        if float(fr) != float(value):
            log.info("rationalized %r -> %s (denominator bound %d)", value, fr, max_denominator)
        return fr
    raise TypeError(f"cannot interpret {value!r} as a rational number")


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric rational matrix Q of the form q(x) = <Qx, x>."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        m = len(self.entries)
        for i, row in enumerate(self.entries):
            if len(row) != m:
                raise DimensionError(f"row {i} has length {len(row)}, expected {m}")
        for i in range(m):
            for j in range(i + 1, m):
                if self.entries[i][j] != self.entries[j][i]:
                    raise ValueError(
                        f"matrix is not symmetric at ({i},{j}): "
                        f"{self.entries[i][j]} != {self.entries[j][i]}"
                    )

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence]) -> "QuadraticForm":
        return cls(tuple(tuple(to_fraction(x) for x in row) for row in rows))

    @classmethod
    def zero(cls, dim: int) -> "QuadraticForm":
        z = Fraction(0)
        return cls(tuple(tuple(z for _ in range(dim)) for _ in range(dim)))

    @classmethod
    def identity(cls, dim: int) -> "QuadraticForm":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim)))

    @classmethod
    def diagonal(cls, values: Iterable) -> "QuadraticForm":
        vals = [to_fraction(v) for v in values]
        m = len(vals)
        return cls(tuple(tuple(vals[i] if i == j else Fraction(0) for j in range(m)) for i in range(m)))

    @classmethod
    def from_monomials(cls, dim: int, terms: Iterable[tuple[int, int, object]]) -> "QuadraticForm":
        """Build the form sum c * x_i * x_j from (i, j, c) triples."""
        mat = [[Fraction(0)] * dim for _ in range(dim)]
        for i, j, c in terms:
            c = to_fraction(c)
            if i == j:
                mat[i][i] += c
            else:
                mat[i][j] += c / 2
                mat[j][i] += c / 2
        return cls(tuple(tuple(r) for r in mat))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @cached_property
    def float_shadow(self) -> np.ndarray:
        arr = np.array([[float(x) for x in row] for row in self.entries], dtype=float)
        arr.setflags(write=False)
        return arr

    def __neg__(self) -> "QuadraticForm":
        return QuadraticForm(tuple(tuple(-x for x in row) for row in self.entries))

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        if other.dim != self.dim:
            raise DimensionError("forms of different dimension")
        return QuadraticForm(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def scale(self, c) -> "QuadraticForm":
        c = to_fraction(c)
        return QuadraticForm(tuple(tuple(c * x for x in row) for row in self.entries))

    def __call__(self, x: Sequence) -> Fraction:
        xs = [to_fraction(v) for v in x]
        return sum(
            (self.entries[i][j] * xs[i] * xs[j] for i in range(self.dim) for j in range(self.dim)),
            Fraction(0),
        )

    def upper_triangle(self) -> list[str]:
        """Row-major upper triangle as rational strings (the wire format)."""
        return [str(self.entries[i][j]) for i in range(self.dim) for j in range(i, self.dim)]

    @classmethod
    def from_upper_triangle(cls, values: Sequence, dim: int | None = None) -> "QuadraticForm":
        count = len(values)
        if dim is None:
            dim = int((math.isqrt(8 * count + 1) - 1) // 2)
        if dim * (dim + 1) // 2 != count:
            raise DimensionError(f"{count} entries do not form an upper triangle of a {dim}x{dim} matrix")
        mat = [[Fraction(0)] * dim for _ in range(dim)]
        it = iter(values)
        for i in range(dim):
            for j in range(i, dim):
                v = to_fraction(next(it))
                mat[i][j] = v
                mat[j][i] = v
        return cls(tuple(tuple(r) for r in mat))


class Inertia(NamedTuple):
    """Positive, null and negative inertia indices (i+, i0, i-)."""

    pos: int
    null: int
    neg: int

    @property
    def dim(self) -> int:
        return self.pos + self.null + self.neg


@dataclass(frozen=True)
class QuadraticMap:
    """A homogeneous quadratic map R^{n+1} -> R^{k+1}, given by k+1 forms."""

    forms: tuple[QuadraticForm, ...]
    dim: int = field(default=-1)

    def __post_init__(self):
        forms = tuple(self.forms)
        object.__setattr__(self, "forms", forms)
        if not forms:
            if self.dim < 1:
                raise DimensionError("an empty map needs an explicit dimension")
            return
        dims = {f.dim for f in forms}
        if len(dims) != 1:
            raise DimensionError(f"forms have mixed dimensions {sorted(dims)}")
        d = dims.pop()
        if self.dim not in (-1, d):
            raise DimensionError(f"forms have dimension {d}, expected {self.dim}")
        object.__setattr__(self, "dim", d)

    @property
    def n(self) -> int:
        return self.dim - 1

    @property
    def k(self) -> int:
        return len(self.forms) - 1

    def __call__(self, x: Sequence) -> tuple[Fraction, ...]:
        return tuple(f(x) for f in self.forms)

    @cached_property
    def float_stack(self) -> np.ndarray:
        """Array of shape (k+1, n+1, n+1) with the float shadows."""
        if not self.forms:
            return np.zeros((0, self.dim, self.dim))
        return np.stack([f.float_shadow for f in self.forms])

    def float_pencil(self, omega) -> np.ndarray:
        return np.tensordot(np.asarray(omega, dtype=float), self.float_stack, axes=1)


def evaluate_pencil(qmap: QuadraticMap, omega: Sequence) -> QuadraticForm:
    """Return the form sum_i omega_i p^i exactly."""
    if len(omega) != len(qmap.forms):
        raise DimensionError(f"omega has {len(omega)} entries, the map has {len(qmap.forms)} forms")
    w = [to_fraction(c) for c in omega]
    m = qmap.dim
    mat = [[Fraction(0)] * m for _ in range(m)]
    for c, f in zip(w, qmap.forms):
        if c == 0:
            continue
        for i in range(m):
            row = f.entries[i]
            out = mat[i]
            for j in range(i, m):
                if row[j]:
                    out[j] += c * row[j]
    for i in range(m):
        for j in range(i + 1, m):
            mat[j][i] = mat[i][j]
    return QuadraticForm(tuple(tuple(r) for r in mat))


def _inertia_of_rows(a: list[list[Fraction]]) -> Inertia:
    """Symmetric congruence reduction on a mutable copy; returns (i+, i0, i-)."""
    m = len(a)
    active = list(range(m))
    pos = neg = 0
    while active:
        piv = None
        best = None
        for i in active:
            d = a[i][i]
            if d:
                # smallest-height pivot keeps the rationals short
                h = abs(d.numerator) + d.denominator
                if best is None or h < best:
                    piv, best = i, h
        if piv is not None:
            d = a[piv][piv]
            if d > 0:
                pos += 1
            else:
                neg += 1
            active.remove(piv)
            col = [(r, a[r][piv]) for r in active if a[r][piv]]
            for idx, (r, ar) in enumerate(col):
                f = ar / d
                row = a[r]
                for c, ac in col[idx:]:
                    row[c] -= f * ac
                    if c != r:
                        a[c][r] = row[c]
            continue
        pair = None
        for x, i in enumerate(active):
            for j in active[x + 1:]:
                if a[i][j]:
                    pair = (i, j)
                    break
            if pair:
                break
        if pair is None:
            break
        i, j = pair
        b = a[i][j]
        # the block [[0, b], [b, 0]] contributes one positive and one negative square
        pos += 1
        neg += 1
        active.remove(i)
        active.remove(j)
        ri = {r: a[r][i] for r in active}
        rj = {r: a[r][j] for r in active}
        for x, r in enumerate(active):
            for c in active[x:]:
                delta = (ri[r] * rj[c] + rj[r] * ri[c]) / b
                if delta:
                    a[r][c] -= delta
                    if c != r:
                        a[c][r] = a[r][c]
    return Inertia(pos, m - pos - neg, neg)


def inertia_exact(form: QuadraticForm) -> Inertia:
    """Exact (i+, i0, i-) by rational symmetric congruence reduction."""
    return _inertia_of_rows([list(row) for row in form.entries])


def jacobi_eigenvalues(a: np.ndarray, max_sweeps: int = 100, rtol: float = 1e-15) -> np.ndarray:
    """Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float, copy=True)
    m = a.shape[0]
    if m <= 1:
        return np.diag(a).copy()
    scale = max(np.linalg.norm(a), 1e-300)

    def off(mat):
        return float(np.linalg.norm(mat - np.diag(np.diag(mat))))

    for _ in range(max_sweeps):
        if off(a) <= rtol * scale:
            return np.diag(a).copy()
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    residual = off(a)
    if residual <= rtol * scale * 10:
        return np.diag(a).copy()
    raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps", residual)


def inertia_float(form: QuadraticForm | np.ndarray, tol: float = 1e-9, max_sweeps: int = 100) -> Inertia:
    """Inertia from Jacobi eigenvalues with an absolute zero band [-tol, tol]."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    arr = form.float_shadow if isinstance(form, QuadraticForm) else np.asarray(form, dtype=float)
    ev = jacobi_eigenvalues(arr, max_sweeps=max_sweeps)
    pos = int(np.sum(ev > tol))
    neg = int(np.sum(ev < -tol))
    return Inertia(pos, len(ev) - pos - neg, neg)


def rational_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a rational matrix by exact row reduction."""
    mat = [[to_fraction(x) for x in r] for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][c]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pr = mat[rank]
        for r in range(rank + 1, len(mat)):
            if mat[r][c]:
                f = mat[r][c] / pr[c]
                mat[r] = [x - f * y for x, y in zip(mat[r], pr)]
        rank += 1
        if rank == len(mat):
            break
    return rank


def rational_nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} over Q, one vector per free column."""
    mat = [[to_fraction(x) for x in r] for r in rows]
    pivots = []
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][c]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = 1 / mat[rank][c]
        mat[rank] = [x * inv for x in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][c]:
                f = mat[r][c]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[rank])]
        pivots.append(c)
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -mat[r][fc]
        basis.append(v)
    return basis


def restrict_to_subspace(form: QuadraticForm, basis: Sequence[Sequence]) -> QuadraticForm:
    """Return B^T Q B where the columns of B are the given basis vectors."""
    vecs = [[to_fraction(x) for x in v] for v in basis]
    for v in vecs:
        if len(v) != form.dim:
            raise DimensionError(f"basis vector of length {len(v)} for a form of dimension {form.dim}")
    if rational_rank(vecs) != len(vecs):
        raise RankError("basis vectors are linearly dependent")
    q = form.entries
    qb = [[sum((q[i][t] * v[t] for t in range(form.dim) if v[t]), Fraction(0)) for i in range(form.dim)] for v in vecs]
    m = len(vecs)
    out = [[Fraction(0)] * m for _ in range(m)]
    for a in range(m):
        for b in range(a, m):
            val = sum((vecs[a][i] * qb[b][i] for i in range(form.dim) if vecs[a][i]), Fraction(0))
            out[a][b] = out[b][a] = val
    return QuadraticForm(tuple(tuple(r) for r in out))


def hat_extend(qmap: QuadraticMap) -> QuadraticMap:
    """Prepend -q0 with q0 the identity form: (p^0..p^k) -> (-I, p^0..p^k)."""
    return QuadraticMap((-QuadraticForm.identity(qmap.dim),) + qmap.forms)


def inertia_bilinear_shortcut(mat: Sequence[Sequence]) -> int:
    """i+ of the block form [[0, L], [L^T, 0]], which equals rk(L)."""
    rows = [list(r) for r in mat]
    if any(len(r) != len(rows) for r in rows):
        raise DimensionError("L must be square")
    return rational_rank(rows)


def block_form(mat: Sequence[Sequence]) -> QuadraticForm:
    """The symmetric 2m x 2m form [[0, L], [L^T, 0]]."""
    lm = [[to_fraction(x) for x in r] for r in mat]
    m = len(lm)
    out = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
    for i in range(m):
        for j in range(m):
            out[i][m + j] = lm[i][j]
            out[m + j][i] = lm[i][j]
    return QuadraticForm(tuple(tuple(r) for r in out))

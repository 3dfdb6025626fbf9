"""Built-in example problems with their known answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..quad_core import QuadraticForm, block_form
from .problem import ProblemSpec, quadric_problem

F = QuadraticForm.from_monomials


def direct_sum(forms: list[QuadraticForm]) -> QuadraticForm:
    """Block-diagonal form on the concatenated variables."""
    dim = sum(f.dim for f in forms)
    mat = [[Fraction(0)] * dim for _ in range(dim)]
    off = 0
    for f in forms:
        for i in range(f.dim):
            for j in range(f.dim):
                mat[off + i][off + j] = f.entries[i][j]
        off += f.dim
    return QuadraticForm(tuple(tuple(r) for r in mat))


def hopf_forms(a: int) -> list[QuadraticForm]:
    """Hopf map R^{2a} -> R^{a+1} for a = 1 (complex) or 2 (quaternion-free real model)."""
    if a == 1:
        # (z, w) -> (2zw, w^2 - z^2)
        return [F(2, [(0, 1, 2)]), F(2, [(1, 1, 1), (0, 0, -1)])]
    if a == 2:
        # (z1, z2, w1, w2) -> (2 Re(z conj w), 2 Im(z conj w), |w|^2 - |z|^2)
        return [
            F(4, [(0, 2, 2), (1, 3, 2)]),
            F(4, [(1, 2, 2), (0, 3, -2)]),
            F(4, [(2, 2, 1), (3, 3, 1), (0, 0, -1), (1, 1, -1)]),
        ]
    raise ValueError("Hopf maps are provided for a = 1, 2")


def nhopf_problem(copies: int, a: int) -> ProblemSpec:
    base = hopf_forms(a)
    forms = [direct_sum([f] * copies) for f in base]
    dim = forms[0].dim
    name = f"hopf{a}" if copies == 1 else f"nhopf_{copies}_{a}"
    return ProblemSpec(dim - 1, a, forms, "zero", {}, name)


GAMMA_V_MATRICES = [
    [[0, 0, 0], [0, -1, 0], [0, 0, 1]],
    [[0, 0, 1], [-1, 0, 0], [0, 0, 0]],
    [[0, 1, 0], [0, 0, 0], [-1, 0, 0]],
]


def gamma_v_problem() -> ProblemSpec:
    """p_b(x, y) = 2<x, B_b y> for three 3x3 matrices with rk(w B) = 2 whenever w != 0."""
    return ProblemSpec(5, 2, [block_form(b) for b in GAMMA_V_MATRICES], "zero", {}, "gamma_v")


def example11_problem() -> ProblemSpec:
    return ProblemSpec(2, 2, [F(3, [(0, 1, 1)]), F(3, [(0, 2, 1)]), F(3, [(1, 2, 1)])], "zero", {}, "example11")


def twisted_cubic_problem() -> ProblemSpec:
    forms = [F(4, [(0, 2, 1), (1, 1, -1)]), F(4, [(0, 3, 1), (1, 2, -1)]), F(4, [(1, 3, 1), (2, 2, -1)])]
    return ProblemSpec(3, 2, forms, "zero", {}, "twisted_cubic")


def two_quadrics_points() -> ProblemSpec:
    """x0^2 = x2^2 and x1^2 = x2^2 in P^2: the four points [+-1 : +-1 : 1]."""
    forms = [F(3, [(0, 0, 1), (2, 2, -1)]), F(3, [(1, 1, 1), (2, 2, -1)])]
    return ProblemSpec(2, 1, forms, "zero", {}, "two_quadrics_points")


def two_quadrics_orthant() -> ProblemSpec:
    """x0^2 >= x1^2 and x0^2 >= x2^2 in P^2: a single closed disk."""
    forms = [F(3, [(0, 0, 1), (1, 1, -1)]), F(3, [(0, 0, 1), (2, 2, -1)])]
    return ProblemSpec(2, 1, forms, "orthant", {}, "two_quadrics_orthant")


@dataclass
class CorpusEntry:
    spec: ProblemSpec
    betti: list[int] | None = None
    inclusion: list[int] | None = None
    empty: bool | None = None
    w_top: int | None = None
    extra: dict = field(default_factory=dict)


def quadric_expectation(a: int, b: int, n: int) -> tuple[list[int], list[int]]:
    """Betti numbers and inclusion ranks of {q = 0} for q of signature (a, b), a <= b, in P^n.

    h^- has ones in degrees 0..n-b and h^+ ones in degrees n-a..n-1, so b_n = 0.
    """
    hminus = [1 if d <= n - b else 0 for d in range(n + 1)]
    hplus = [1 if n - a <= d <= n - 1 else 0 for d in range(n + 1)]
    return [x + y for x, y in zip(hminus, hplus)], hminus


def corpus() -> list[CorpusEntry]:
    out = [
        CorpusEntry(example11_problem(), betti=[3, 0, 0], inclusion=[1, 0, 0], empty=False),
        CorpusEntry(twisted_cubic_problem(), betti=[1, 1, 0, 0], inclusion=[1, 1, 0, 0], empty=False),
        CorpusEntry(nhopf_problem(1, 1), betti=[0, 0], empty=True, w_top=1),
        CorpusEntry(nhopf_problem(1, 2), betti=[0, 0, 0, 0], empty=True, w_top=1),
        CorpusEntry(nhopf_problem(2, 2), w_top=0),
        CorpusEntry(nhopf_problem(3, 2), w_top=1),
        CorpusEntry(gamma_v_problem(), betti=[1, 2, 2, 1, 0, 0], empty=False, w_top=0),
        CorpusEntry(two_quadrics_points(), betti=[4, 0, 0], empty=False),
        CorpusEntry(two_quadrics_orthant(), betti=[1, 0, 0], empty=False),
    ]
    for a, b, n in [(1, 1, 1), (1, 2, 2), (2, 2, 3), (1, 1, 2)]:
        betti, incl = quadric_expectation(a, b, n)
        out.append(CorpusEntry(quadric_problem(a, b, n), betti=betti, inclusion=incl, empty=False))
    return out


def by_name(name: str) -> CorpusEntry:
    for e in corpus():
        if e.spec.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")

"""Second page of the spectral sequence for the pair (X, X cap V) with V a hyperplane."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .omega_geometry.mesh import OmegaComplex
from .omega_geometry.strata import omega_V_strata, subcomplex_for
from .quad_core import QuadraticMap, RankError, rational_nullspace, to_fraction
from .spectral_engine import euler_of
from .z2_topology import relative_cohomology


class ContainmentError(RuntimeError):
    """A restricted stratum fails to contain the next absolute stratum."""


@dataclass
class HyperplaneSpec:
    """V = {h = 0} with a rational basis of V derived from the normal h."""

    normal: tuple[Fraction, ...]
    basis: list[list[Fraction]] = field(init=False)

    def __post_init__(self):
        self.normal = tuple(to_fraction(x) for x in self.normal)
        if not any(self.normal):
            raise RankError("hyperplane normal must be nonzero")
        self.basis = rational_nullspace([list(self.normal)], len(self.normal))

    @classmethod
    def parse(cls, text: str) -> "HyperplaneSpec":
        return cls(tuple(to_fraction(x) for x in text.split(",")))


@dataclass
class G2Table:
    n: int
    k: int
    dims: list[list[int]]

    def totals(self) -> list[int]:
        """Antidiagonal sums mapped to homological degree: entry b collects i + j = n - b."""
        out = [0] * (self.n + 1)
        for i, col in enumerate(self.dims):
            for j, v in enumerate(col):
                b = self.n - i - j
                if 0 <= b <= self.n:
                    out[b] += v
        return out

    def euler(self) -> int:
        return euler_of(self.dims)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "G2": self.dims, "totals_upper_bound": self.totals()}


def check_containment(mesh: OmegaComplex) -> None:
    """Vertexwise Omega^{j+1} <= Omega_V^j <= Omega^j on exact labels."""
    for v, (lab, rlab) in enumerate(zip(mesh.labels, mesh.restricted_labels)):
        if lab is None:
            continue
        if not (lab.pos - 1 <= rlab.pos <= lab.pos):
            raise ContainmentError(f"vertex {v}: i+ = {lab.pos} but restricted i+ = {rlab.pos}")


def assemble_G2(cone: OmegaComplex, qmap: QuadraticMap, V: HyperplaneSpec | Sequence) -> G2Table:
    """G2^{i,0} = H^i(C Omega, Omega^1) and G2^{i,j} = H^i(Omega_V^j, Omega^{j+1}) for j > 0.

    The cone must come from a mesh labeled with V's basis (label_indices(..., v_basis)).
    """
    if not isinstance(V, HyperplaneSpec):
        V = HyperplaneSpec(tuple(V))
    if cone.apex is None:
        raise ValueError("assemble_G2 needs the cone complex")
    check_containment(cone)
    n, k = qmap.n, qmap.k
    cx = cone.complex
    dims = [[0] * (n + 1) for _ in range(k + 2)]
    s1 = subcomplex_for(cone, 1)
    for i in range(min(k + 1, cx.dim) + 1):
        dims[i][0] = relative_cohomology(cx, None, s1, i).dim
    for j in range(1, n + 1):
        sv = omega_V_strata(cone, qmap, V.basis, j)
        upper = subcomplex_for(cone, j + 1)
        if not upper.issubset(sv):
            raise ContainmentError(f"level-{j + 1} stratum is not inside the restricted level-{j} stratum")
        for i in range(k + 1):
            dims[i][j] = relative_cohomology(cx, sv, upper, i).dim
    return G2Table(n, k, dims)

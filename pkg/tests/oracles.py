"""Independent reference computations used to check the library.

Everything here is deliberately naive: dense numpy matrices over GF(2),
simplices enumerated by itertools, no sharing of code with quadrtop.
"""

from __future__ import annotations

import itertools

import numpy as np

# minimal 6-vertex triangulation of the real projective plane
RP2_TRIANGLES = [
    (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
    (1, 2, 4), (2, 3, 5), (1, 3, 4), (2, 4, 5), (1, 3, 5),
]

# 7-vertex torus: {i, i+1, i+3} and {i, i+2, i+3} mod 7
TORUS_TRIANGLES = sorted(
    {tuple(sorted((i, (i + 1) % 7, (i + 3) % 7))) for i in range(7)}
    | {tuple(sorted((i, (i + 2) % 7, (i + 3) % 7))) for i in range(7)}
)

# octahedron: vertices +-e0 (0, 1), +-e1 (2, 3), +-e2 (4, 5)
OCTAHEDRON_TRIANGLES = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]
OCTAHEDRON_EQUATOR = [(0, 2), (1, 2), (1, 3), (0, 3)]


def gf2_rank(mat) -> int:
    a = (np.array(mat, dtype=np.uint8) % 2).copy()
    if a.size == 0:
        return 0
    rank = 0
    rows, cols = a.shape
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if a[r, c]), None)
        if piv is None:
            continue
        a[[rank, piv]] = a[[piv, rank]]
        for r in range(rows):
            if r != rank and a[r, c]:
                a[r] ^= a[rank]
        rank += 1
    return rank


def faces_of(cells) -> list[list[tuple[int, ...]]]:
    """All faces of the given cells, graded by dimension and sorted."""
    levels: list[set] = []
    for c in cells:
        c = tuple(sorted(c))
        while len(levels) < len(c):
            levels.append(set())
        for d in range(len(c)):
            levels[d].update(itertools.combinations(c, d + 1))
    return [sorted(level) for level in levels]


def boundary_dense(levels, d: int) -> np.ndarray:
    rows = {s: i for i, s in enumerate(levels[d - 1])}
    out = np.zeros((len(levels[d - 1]), len(levels[d])), dtype=np.uint8)
    for c, s in enumerate(levels[d]):
        for f in itertools.combinations(s, d):
            out[rows[f], c] = 1
    return out


def relative_betti(cells, sub_cells=()) -> list[int]:
    """Betti numbers of (|cells|, |sub_cells|) over GF(2) from quotient chain complexes."""
    levels = faces_of(cells)
    sub = faces_of(sub_cells) if sub_cells else []
    sub_sets = [set(level) for level in sub] + [set()] * (len(levels) - len(sub))
    rel = [[s for s in levels[d] if s not in sub_sets[d]] for d in range(len(levels))]
    ranks = []
    for d in range(len(levels)):
        if d == 0:
            ranks.append(0)
            continue
        idx = {s: i for i, s in enumerate(rel[d - 1])}
        m = np.zeros((len(rel[d - 1]), len(rel[d])), dtype=np.uint8)
        for c, s in enumerate(rel[d]):
            for f in itertools.combinations(s, d):
                if f in idx:
                    m[idx[f], c] = 1
        ranks.append(gf2_rank(m))
    ranks.append(0)
    return [len(rel[d]) - ranks[d] - ranks[d + 1] for d in range(len(levels))]


def circle_rel_two_points(m: int = 6) -> list[int]:
    """H_*(S^1, two antipodal points) from an m-gon."""
    cells = [(i, (i + 1) % m) for i in range(m)]
    return relative_betti(cells, [(0,), (m // 2,)])



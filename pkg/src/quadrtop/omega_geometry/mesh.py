"""Geodesic simplicial meshes of Omega = K° ∩ S^k and of the cone over Omega.

Vertices carry primitive integer rays, so that pencils evaluated at vertices
are exact rational forms.  Meshing happens in coordinates of the linear span
of K° (dimension m, sphere S^{m-1}); facet halfspaces of K° are clipped
exactly, with cut points that are positive integer combinations of the edge
endpoints.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from ..quad_core import Inertia, QuadraticMap, rational_nullspace
from ..z2_topology import SimplicialComplex
from .cone import PolyhedralCone, UnsupportedDimensionError, dot, primitive

MIDPOINT_SCALE = 2**24
GOLDEN = (1 + 5**0.5) / 2
# rational stand-in for the golden ratio; the icosahedron's face lattice is unchanged
GOLDEN_NUM, GOLDEN_DEN = 13, 8


@dataclass
class MeshGeometry:
    """Span coordinates and facet data needed to subdivide or clip further."""

    span_basis: list[tuple[int, ...]]
    facet_normals: list[tuple[int, ...]]
    span_rays: list[tuple[int, ...]]

    def to_ambient(self, y: Sequence[int]) -> tuple[int, ...]:
        amb = [0] * len(self.span_basis[0])
        for c, b in zip(y, self.span_basis):
            if c:
                for i, bi in enumerate(b):
                    amb[i] += c * bi
        return primitive(amb)

    def planes_of(self, y: Sequence[int]) -> frozenset[int]:
        return frozenset(i for i, f in enumerate(self.facet_normals) if dot(f, y) == 0)


@dataclass
class OmegaComplex:
    """Simplicial mesh of Omega (dimension `dim`) inside S^k, optionally coned.

    `simplices[d]` lists sorted vertex tuples; the vertex order is the global
    order used by cup products.  When `apex` is set the complex is the cone
    C(Omega) and the apex is the last vertex.
    """

    k: int
    dim: int
    rays: list[tuple[int, ...]]
    simplices: list[list[tuple[int, ...]]]
    labels: list[Inertia] | None = None
    apex: int | None = None
    refinement_depth: int = 0
    base_vertex_count: int | None = None
    geometry: MeshGeometry | None = None
    metadata: dict = field(default_factory=dict)
    qmap: QuadraticMap | None = None
    restricted_labels: list[Inertia] | None = None
    v_basis: tuple | None = None
    cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @cached_property
    def units(self) -> np.ndarray:
        out = np.zeros((len(self.rays), self.k + 1))
        for i, r in enumerate(self.rays):
            if i == self.apex:
                continue
            v = np.array(r, dtype=float)
            out[i] = v / np.linalg.norm(v)
        return out

    @cached_property
    def complex(self) -> SimplicialComplex:
        return SimplicialComplex(self.simplices)

    @property
    def n_vertices(self) -> int:
        return len(self.rays)

    @property
    def base_vertices(self) -> range:
        return range(self.apex if self.apex is not None else len(self.rays))

    def top_cells(self) -> list[tuple[int, ...]]:
        return self.simplices[self.dim] if self.dim >= 0 else []

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * len(s) for d, s in enumerate(self.simplices))

    def to_json(self) -> dict:
        """Diagnostic dump: float + rational rays + labels, and simplices."""
        verts = []
        for i, r in enumerate(self.rays):
            entry = {"id": i, "ray": [str(x) for x in r], "unit": [round(float(x), 12) for x in self.units[i]]}
            if i == self.apex:
                entry["apex"] = True
            if self.labels is not None and i < len(self.labels) and self.labels[i] is not None:
                entry["inertia"] = list(self.labels[i])
            verts.append(entry)
        return {
            "k": self.k,
            "dim": self.dim,
            "apex": self.apex,
            "refinement_depth": self.refinement_depth,
            "vertices": verts,
            "simplices": {str(d): [list(s) for s in simps] for d, simps in enumerate(self.simplices)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------- builders


class _Builder:
    """Mutable vertex store in span coordinates with exact midpoints and cuts."""

    def __init__(self, facet_normals: list[tuple[int, ...]]):
        self.rays: list[tuple[int, ...]] = []
        self.ray_index: dict[tuple[int, ...], int] = {}
        self.facet_normals = facet_normals
        self.edge_mid: dict[frozenset, int] = {}
        self.cut_cache: dict[tuple, int] = {}

    def add(self, ray: Sequence[int]) -> int:
        p = primitive(ray)
        if not any(p):
            raise ValueError("zero ray")
        idx = self.ray_index.get(p)
        if idx is None:
            idx = len(self.rays)
            self.rays.append(p)
            self.ray_index[p] = idx
        return idx

    def planes(self, v: int) -> frozenset[int]:
        y = self.rays[v]
        return frozenset(i for i, f in enumerate(self.facet_normals) if dot(f, y) == 0)

    def midpoint(self, a: int, b: int) -> int:
        key = frozenset((a, b))
        got = self.edge_mid.get(key)
        if got is not None:
            return got
        ra, rb = self.rays[a], self.rays[b]
        ua = np.array(ra, dtype=float)
        ub = np.array(rb, dtype=float)
        u = ua / np.linalg.norm(ua) + ub / np.linalg.norm(ub)
        nu = np.linalg.norm(u)
        if nu < 1e-9:
            raise ValueError("midpoint of antipodal vertices is undefined")
        y = [int(round(x)) for x in u / nu * MIDPOINT_SCALE]
        common = self.planes(a) & self.planes(b)
        if common:
            y = _project_onto_planes(y, [self.facet_normals[i] for i in sorted(common)])
        if not self._inside(y) or primitive(y) in self.ray_index:
            y = _exact_combination(ra, rb)
        idx = self.add(y)
        self.edge_mid[key] = idx
        return idx

    def _inside(self, y) -> bool:
        return any(y) and all(dot(f, y) >= 0 for f in self.facet_normals)

    def cut(self, a: int, b: int, f: tuple[int, ...]) -> int:
        key = (min(a, b), max(a, b), f)
        got = self.cut_cache.get(key)
        if got is not None:
            return got
        ra, rb = self.rays[a], self.rays[b]
        fa, fb = dot(f, ra), dot(f, rb)
        y = [abs(fb) * x + abs(fa) * z for x, z in zip(ra, rb)]
        idx = self.add(y)
        self.cut_cache[key] = idx
        return idx


def _exact_combination(ra, rb) -> list[int]:
    """Positive combination ra/|ra| + rb/|rb| with rational norm estimates."""
    na = Fraction(math.sqrt(sum(x * x for x in ra))).limit_denominator(1 << 20)
    nb = Fraction(math.sqrt(sum(x * x for x in rb))).limit_denominator(1 << 20)
    y = [Fraction(x) / na + Fraction(z) / nb for x, z in zip(ra, rb)]
    return list(primitive(y))


def _project_onto_planes(y: Sequence[int], normals: list[tuple[int, ...]]) -> list[int]:
    dim = len(y)
    basis = rational_nullspace(normals, dim)
    if not basis:
        return list(y)
    m = len(basis)
    gram = [[sum(basis[i][t] * basis[j][t] for t in range(dim)) for j in range(m)] for i in range(m)]
    rhs = [sum(basis[i][t] * y[t] for t in range(dim)) for i in range(m)]
    coef = _solve(gram, rhs)
    proj = [sum(coef[i] * basis[i][t] for i in range(m)) for t in range(dim)]
    return list(primitive(proj))


def _solve(a, b):
    m = len(a)
    mat = [list(map(Fraction, row)) + [Fraction(bb)] for row, bb in zip(a, b)]
    for c in range(m):
        piv = next(r for r in range(c, m) if mat[r][c])
        mat[c], mat[piv] = mat[piv], mat[c]
        inv = 1 / mat[c][c]
        mat[c] = [x * inv for x in mat[c]]
        for r in range(m):
            if r != c and mat[r][c]:
                f = mat[r][c]
                mat[r] = [x - f * z for x, z in zip(mat[r], mat[c])]
    return [mat[r][m] for r in range(m)]


def _initial_sphere(builder: _Builder, m: int) -> list[tuple[int, ...]]:
    """Coarse triangulation of S^{m-1} in R^m, as top cells."""
    def e(i, s=1):
        v = [0] * m
        v[i] = s
        return builder.add(v)

    if m == 1:
        return [(e(0, 1),), (e(0, -1),)]
    if m == 2:
        a, b, c, d = e(0), e(1), e(0, -1), e(1, -1)
        return [(a, b), (b, c), (c, d), (d, a)]
    if m == 3:
        pts = []
        for s1 in (1, -1):
            for s2 in (1, -1):
                pts.append((0, s1, s2 * GOLDEN))
                pts.append((s1, s2 * GOLDEN, 0))
                pts.append((s2 * GOLDEN, 0, s1))
        ids = []
        for p in pts:
            ray = [int(round(x * GOLDEN_DEN)) if abs(abs(x) - GOLDEN) > 1e-9 else int(math.copysign(GOLDEN_NUM, x)) for x in p]
            ids.append(builder.add(ray))
        arr = np.array(pts)
        faces = []
        for i, j, l in itertools.combinations(range(12), 3):
            if all(abs(np.linalg.norm(arr[x] - arr[y]) - 2.0) < 1e-9 for x, y in ((i, j), (j, l), (i, l))):
                faces.append((ids[i], ids[j], ids[l]))
        return faces
    if m == 4:
        cells = []
        for signs in itertools.product((1, -1), repeat=4):
            cells.append(tuple(e(i, s) for i, s in enumerate(signs)))
        return cells
    raise UnsupportedDimensionError(f"cannot mesh S^{m - 1}")


def _subdivide(builder: _Builder, cells: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    out = []
    for cell in cells:
        if len(cell) == 1:
            out.append(cell)
        elif len(cell) == 2:
            a, b = cell
            mid = builder.midpoint(a, b)
            out += [(a, mid), (mid, b)]
        elif len(cell) == 3:
            a, b, c = cell
            ab, bc, ca = builder.midpoint(a, b), builder.midpoint(b, c), builder.midpoint(c, a)
            out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        else:
            a, b, c, d = cell
            ab, ac, ad = builder.midpoint(a, b), builder.midpoint(a, c), builder.midpoint(a, d)
            bc, bd, cd = builder.midpoint(b, c), builder.midpoint(b, d), builder.midpoint(c, d)
            out += [
                (a, ab, ac, ad), (b, ab, bc, bd), (c, ac, bc, cd), (d, ad, bd, cd),
                (ac, bd, ab, ad), (ac, bd, ad, cd), (ac, bd, cd, bc), (ac, bd, bc, ab),
            ]
    return out


def _clip_polygon(builder: _Builder, poly: list[int], f) -> list[int]:
    """Sutherland-Hodgman clip of a vertex cycle to <f, y> >= 0."""
    out = []
    s = [dot(f, builder.rays[v]) for v in poly]
    for i, v in enumerate(poly):
        w = poly[(i + 1) % len(poly)]
        sv, sw = s[i], s[(i + 1) % len(poly)]
        if sv >= 0:
            out.append(v)
        if (sv > 0 and sw < 0) or (sv < 0 and sw > 0):
            out.append(builder.cut(v, w, f))
    return out


def _fan(poly: list[int]) -> list[tuple[int, ...]]:
    i0 = poly.index(min(poly))
    rot = poly[i0:] + poly[:i0]
    return [(rot[0], rot[i], rot[i + 1]) for i in range(1, len(rot) - 1)]


def _clip_cells(builder: _Builder, cells, f) -> list[tuple[int, ...]]:
    out = []
    for cell in cells:
        s = [dot(f, builder.rays[v]) for v in cell]
        if all(x >= 0 for x in s):
            out.append(cell)
            continue
        if not any(x > 0 for x in s):
            continue
        if len(cell) == 2:
            a, b = cell
            keep = a if s[0] > 0 else b
            out.append((keep, builder.cut(a, b, f)))
        elif len(cell) == 3:
            poly = _clip_polygon(builder, list(cell), f)
            if len(poly) >= 3:
                out.extend(_fan(poly))
        else:
            out.extend(_clip_tetrahedron(builder, cell, f, s))
    return out


def _clip_tetrahedron(builder: _Builder, cell, f, s) -> list[tuple[int, ...]]:
    faces = []
    for tri in itertools.combinations(cell, 3):
        poly = _clip_polygon(builder, list(tri), f)
        if len(poly) >= 3:
            faces.append(poly)
    # the cut face: points on the plane, ordered by angle around their centroid
    on_plane = {v for v, x in zip(cell, s) if x == 0}
    for (a, sa), (b, sb) in itertools.combinations(zip(cell, s), 2):
        if sa * sb < 0:
            on_plane.add(builder.cut(a, b, f))
    if len(on_plane) >= 3:
        faces.append(_cyclic_order(builder, sorted(on_plane), f))
    verts = sorted({v for face in faces for v in face})
    v0 = verts[0]
    tets = []
    for face in faces:
        if v0 in face:
            continue
        for tri in _fan(face):
            tets.append((v0,) + tri)
    return tets


def _cyclic_order(builder: _Builder, pts: list[int], f) -> list[int]:
    vecs = np.array([np.array(builder.rays[v], dtype=float) / np.linalg.norm(builder.rays[v]) for v in pts])
    c = vecs.mean(axis=0)
    normal = np.array(f, dtype=float)
    normal /= np.linalg.norm(normal)
    d = vecs - c
    e1 = d[0] - normal * (d[0] @ normal)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal[:3], e1[:3]) if len(normal) == 3 else None
    if e2 is None:
        # 4D: complete (normal, radial, e1) to an orthonormal frame
        radial = c / np.linalg.norm(c)
        basis = [normal, radial, e1]
        cand = np.eye(len(normal))
        for v in cand:
            w = v - sum((v @ b) * b for b in basis)
            if np.linalg.norm(w) > 1e-6:
                e2 = w / np.linalg.norm(w)
                break
    angles = [math.atan2(float(x @ e2), float(x @ e1)) for x in d]
    return [v for _, v in sorted(zip(angles, pts))]


def closure(cells: list[tuple[int, ...]]) -> list[list[tuple[int, ...]]]:
    """All faces of the given cells, graded by dimension and sorted."""
    if not cells:
        return []
    top = max(len(c) for c in cells) - 1
    levels: list[set] = [set() for _ in range(top + 1)]
    for c in cells:
        c = tuple(sorted(c))
        for d in range(len(c)):
            for face in itertools.combinations(c, d + 1):
                levels[d].add(face)
    return [sorted(level) for level in levels]


def span_geometry(k_dual: PolyhedralCone) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Integer basis of span(K°) and inward facet normals in span coordinates."""
    basis = k_dual.span_basis
    normals = []
    for f in k_dual.facets:
        g = primitive([dot(f, b) for b in basis]) if basis else ()
        if g and any(g) and g not in normals:
            normals.append(g)
    # drop normals implied by the others being an equality pair
    normals = [g for g in normals if tuple(-x for x in g) not in normals]
    return basis, sorted(normals)


def build_mesh(k_dual: PolyhedralCone, depth: int) -> OmegaComplex:
    """Geodesic mesh of Omega = K° ∩ S^k at uniform subdivision depth."""
    k = k_dual.ambient_dim - 1
    if k > 3:
        raise UnsupportedDimensionError(f"k = {k} exceeds the supported k <= 3")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    basis, normals = span_geometry(k_dual)
    m = len(basis)
    if m == 0:
        geom = MeshGeometry([tuple(int(i == j) for j in range(k + 1)) for i in range(k + 1)], [], [])
        return OmegaComplex(k=k, dim=-1, rays=[], simplices=[], geometry=geom, refinement_depth=depth)
    builder = _Builder(normals)
    cells = _initial_sphere(builder, m)
    for _ in range(depth):
        cells = _subdivide(builder, cells)
    for f in normals:
        cells = _clip_cells(builder, cells, f)
    return _finalize(k, m - 1, builder, cells, basis, normals, depth)


def _finalize(k, dim, builder: _Builder, cells, basis, normals, depth) -> OmegaComplex:
    used = sorted({v for c in cells for v in c})
    remap = {v: i for i, v in enumerate(used)}
    span_rays = [builder.rays[v] for v in used]
    geom = MeshGeometry(list(basis), list(normals), span_rays)
    rays = [geom.to_ambient(y) for y in span_rays]
    new_cells = [tuple(remap[v] for v in c) for c in cells]
    simplices = closure(new_cells)
    return OmegaComplex(
        k=k,
        dim=dim,
        rays=rays,
        simplices=simplices,
        refinement_depth=depth,
        geometry=geom,
        base_vertex_count=len(rays),
    )


def cone_complex(mesh: OmegaComplex) -> OmegaComplex:
    """Add an apex (ordered last) and the cones over all simplices."""
    if mesh.apex is not None:
        return mesh
    apex = len(mesh.rays)
    simplices = [list(level) for level in mesh.simplices]
    top = mesh.dim + 1
    while len(simplices) < top + 1:
        simplices.append([])
    if not simplices:
        simplices = [[]]
    simplices[0] = list(simplices[0]) + [(apex,)]
    for d in range(mesh.dim + 1):
        simplices[d + 1] = list(simplices[d + 1]) + [s + (apex,) for s in mesh.simplices[d]]
    simplices = [sorted(level) for level in simplices]
    labels = list(mesh.labels) + [None] if mesh.labels is not None else None
    vlabels = list(mesh.restricted_labels) + [None] if mesh.restricted_labels is not None else None
    return replace(
        mesh,
        rays=list(mesh.rays) + [tuple([1] + [0] * mesh.k)],
        simplices=simplices,
        labels=labels,
        restricted_labels=vlabels,
        apex=apex,
        metadata=dict(mesh.metadata),
    )

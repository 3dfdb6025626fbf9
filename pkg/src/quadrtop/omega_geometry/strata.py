"""Index labels on mesh vertices and certified subcomplexes for the strata.

Vertex labels are exact.  The stratum {i+ >= j} is approximated by the
simplices whose vertices have i+ >= j and whose edges are proved to stay in
{lambda_j > 0}.  Along an edge the pencil is linear in the chord parameter,
and lambda_j is 1-Lipschitz in the spectral norm (Weyl), so bisecting the
chord until every piece satisfies lambda_j(mid) > ||half-piece|| proves the
edge; an edge crossing or touching {lambda_j = 0} is never proved.  This is
what separates regions that touch the zero set without changing the label.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from ..quad_core import (
    DimensionError,
    Inertia,
    QuadraticMap,
    RankError,
    evaluate_pencil,
    inertia_exact,
    rational_rank,
    restrict_to_subspace,
    to_fraction,
)
from ..z2_topology import Subcomplex
from .mesh import OmegaComplex

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# relative slack on Weyl certificates, to stay clear of float rounding
CERT_MARGIN = 1e-10
MAX_SEGMENT_DEPTH = 48
DEFAULT_GAP_FLOOR = 1e-8


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("QUADRTOP_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map, threaded when QUADRTOP_THREADS > 1."""
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class StratumRangeError(ValueError):
    pass


def _check_basis(qmap: QuadraticMap, basis: Sequence[Sequence]) -> tuple[tuple, ...]:
    dim = qmap.n + 1
    fr = tuple(tuple(to_fraction(x) for x in v) for v in basis)
    if any(len(v) != dim for v in fr):
        raise DimensionError("subspace basis vectors must have length n+1")
    if len(fr) != dim - 1 or rational_rank(fr) != dim - 1:
        raise RankError("subspace basis must span a hyperplane")
    return fr


def label_indices(mesh: OmegaComplex, qmap: QuadraticMap, v_basis: Sequence[Sequence] | None = None,
                  known: dict | None = None) -> OmegaComplex:
    """Exact inertia of the pencil at every vertex ray (and of its restriction to V)."""
    if qmap.k != mesh.k:
        raise DimensionError(f"map has k={qmap.k} but mesh has k={mesh.k}")
    known = known if known is not None else {}
    base = list(mesh.base_vertices)

    def lab(v: int):
        ray = mesh.rays[v]
        hit = known.get(ray)
        if hit is not None:
            return hit
        return inertia_exact(evaluate_pencil(qmap, ray))

    labels: list = parallel_map(lab, base)
    if mesh.apex is not None:
        labels.append(None)
    vlabels = None
    vb = None
    if v_basis is not None:
        vb = _check_basis(qmap, v_basis)

        def rlab(v: int):
            return inertia_exact(restrict_to_subspace(evaluate_pencil(qmap, mesh.rays[v]), vb))

        vlabels = parallel_map(rlab, base)
        if mesh.apex is not None:
            vlabels.append(None)
    return replace(mesh, labels=labels, qmap=qmap, restricted_labels=vlabels, v_basis=vb)


def orthonormal_basis(basis: Sequence[Sequence]) -> np.ndarray:
    """Columns spanning the same subspace, orthonormal in floating point."""
    b = np.array([[float(x) for x in v] for v in basis]).T
    q, _ = np.linalg.qr(b)
    return q


def vertex_forms(mesh: OmegaComplex, restricted: bool = False) -> np.ndarray:
    """Float pencil matrices at the unit vertex vectors (apex row is zero)."""
    key = ("forms", restricted)
    got = mesh.cache.get(key)
    if got is None:
        if mesh.qmap is None:
            raise ValueError("mesh carries no quadratic map; call label_indices first")
        got = np.einsum("vi,iab->vab", mesh.units, mesh.qmap.float_stack)
        if restricted:
            u = orthonormal_basis(mesh.v_basis)
            got = np.einsum("ai,vab,bj->vij", u, got, u)
        mesh.cache[key] = got
    return got


def vertex_spectra(mesh: OmegaComplex, restricted: bool = False) -> np.ndarray:
    """Descending float eigenvalues of the pencil at each vertex."""
    key = ("spectra", restricted)
    got = mesh.cache.get(key)
    if got is None:
        got = np.linalg.eigvalsh(vertex_forms(mesh, restricted))[:, ::-1]
        mesh.cache[key] = got
    return got


def _margin(mesh: OmegaComplex, restricted: bool) -> float:
    forms = vertex_forms(mesh, restricted)
    scale = float(np.abs(forms).max()) if forms.size else 1.0
    return CERT_MARGIN * max(1.0, scale)


def _base_edges(mesh: OmegaComplex) -> np.ndarray:
    cx = mesh.complex
    if len(cx.simplices) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(cx.simplices[1], dtype=np.int64)


def certify_segments(a: np.ndarray, b: np.ndarray, value, lipschitz: float, margin: float,
                     max_depth: int = MAX_SEGMENT_DEPTH) -> np.ndarray:
    """Prove value(A) > 0 along each chord from a[i] to b[i] (stacks of matrices).

    value is Lipschitz (constant `lipschitz`) in the spectral norm, so on a
    piece with midpoint M and half-length h it is at least value(M) - L*h.
    Pieces that stay undecided are bisected; a negative midpoint or running
    out of depth leaves the chord unproved.
    """
    m = len(a)
    ok = np.ones(m, dtype=bool)
    owner = np.arange(m)
    lo, hi = a, b
    for _ in range(max_depth + 1):
        if not len(owner):
            break
        mid = 0.5 * (lo + hi)
        half = 0.5 * np.linalg.norm(hi - lo, ord=2, axis=(1, 2))
        val = value(mid)
        proved = val - lipschitz * half > margin
        refuted = val <= margin
        ok[owner[refuted]] = False
        todo = ~proved & ~refuted & ok[owner]
        owner = owner[todo]
        lo, hi, mid = lo[todo], hi[todo], mid[todo]
        owner = np.concatenate([owner, owner])
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    ok[owner] = False
    return ok


def clean_edges(mesh: OmegaComplex, j: int, restricted: bool = False) -> np.ndarray:
    """Per edge: lambda_j > 0 proved along the whole edge (apex edges excluded)."""
    key = ("clean", j, restricted)
    got = mesh.cache.get(key)
    if got is not None:
        return got
    edges = _base_edges(mesh)
    out = np.zeros(len(edges), dtype=bool)
    labels = mesh.restricted_labels if restricted else mesh.labels
    forms = vertex_forms(mesh, restricted)
    if len(edges) and 1 <= j <= forms.shape[1]:
        cand = np.array([
            labels[x] is not None and labels[y] is not None and labels[x].pos >= j and labels[y].pos >= j
            for x, y in edges
        ], dtype=bool)
        idx = np.flatnonzero(cand)
        if len(idx):
            sel = edges[idx]

            def lam_j(mats):
                return np.linalg.eigvalsh(mats)[:, -j]

            out[idx] = certify_segments(forms[sel[:, 0]], forms[sel[:, 1]], lam_j, 1.0, _margin(mesh, restricted))
    mesh.cache[key] = out
    return out


def gap_edges(mesh: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR) -> np.ndarray:
    """Per edge: lambda_j - lambda_{j+1} > 0 proved along the whole edge."""
    key = ("gapedges", j, gap_floor)
    got = mesh.cache.get(key)
    if got is not None:
        return got
    edges = _base_edges(mesh)
    out = np.zeros(len(edges), dtype=bool)
    vg = gap_vertices(mesh, j, gap_floor)
    if len(edges):
        idx = np.flatnonzero(vg[edges[:, 0]] & vg[edges[:, 1]])
        if len(idx):
            forms = vertex_forms(mesh)
            sel = edges[idx]
            scale = float(np.abs(vertex_spectra(mesh)).max())
            margin = max(gap_floor * scale, _margin(mesh, False))

            def gap(mats):
                lam = np.linalg.eigvalsh(mats)
                return lam[:, -j] - lam[:, -j - 1]

            out[idx] = certify_segments(forms[sel[:, 0]], forms[sel[:, 1]], gap, 2.0, margin)
    mesh.cache[key] = out
    return out


def _base_flags(mesh: OmegaComplex) -> np.ndarray:
    flags = np.ones(len(mesh.rays), dtype=bool)
    if mesh.apex is not None:
        flags[mesh.apex] = False
    return flags


def gap_vertices(mesh: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR) -> np.ndarray:
    """Per vertex: lambda_j - lambda_{j+1} exceeds the relative gap floor."""
    lam = vertex_spectra(mesh)
    if j < 1 or j >= lam.shape[1]:
        return np.zeros(len(lam), dtype=bool)
    scale = float(np.abs(lam).max()) if lam.size else 1.0
    slack = max(gap_floor * scale, _margin(mesh, False))
    return (lam[:, j - 1] - lam[:, j] > slack) & _base_flags(mesh)


def filtered_subcomplex(mesh: OmegaComplex, vertex_ok: np.ndarray, edge_ok: np.ndarray) -> Subcomplex:
    """Simplices whose vertices and edges all pass."""
    cx = mesh.complex
    masks = [0] * len(cx.simplices)
    if not cx.simplices:
        return Subcomplex(cx, masks)
    for i, (v,) in enumerate(cx.simplices[0]):
        if vertex_ok[v]:
            masks[0] |= 1 << i
    if len(cx.simplices) > 1:
        idx1 = cx.index[1]
        good_edge = [bool(edge_ok[t]) and bool(vertex_ok[e[0]]) and bool(vertex_ok[e[1]])
                     for t, e in enumerate(cx.simplices[1])]
        for t, g in enumerate(good_edge):
            if g:
                masks[1] |= 1 << t
        for d in range(2, len(cx.simplices)):
            for t, s in enumerate(cx.simplices[d]):
                if all(good_edge[idx1[(s[x], s[y])]] for x in range(d + 1) for y in range(x + 1, d + 1)):
                    masks[d] |= 1 << t
    return Subcomplex(cx, masks)


def base_subcomplex(mesh: OmegaComplex) -> Subcomplex:
    cx = mesh.complex
    if mesh.apex is None:
        return cx.whole()
    apex = mesh.apex
    return cx.full_subcomplex(lambda v: v != apex)


def _stratum(mesh: OmegaComplex, j: int, labels, restricted: bool, certify: bool) -> Subcomplex:
    cx = mesh.complex
    if not certify:
        return cx.full_subcomplex(lambda v: labels[v] is not None and labels[v].pos >= j)
    vertex_ok = np.array([lab is not None and lab.pos >= j for lab in labels], dtype=bool)
    return filtered_subcomplex(mesh, vertex_ok, clean_edges(mesh, j, restricted))


def subcomplex_for(mesh: OmegaComplex, j: int, certify: bool = True) -> Subcomplex:
    """Subcomplex approximating the open stratum {i+ >= j} of Omega.

    With certify=False this is the plain full subcomplex on vertex labels.
    """
    if mesh.labels is None:
        raise ValueError("mesh is not labeled")
    if mesh.qmap is not None and (j < 0 or j > mesh.qmap.n + 1):
        raise StratumRangeError(f"stratum level {j} outside 0..n+1")
    key = ("stratum", j, certify)
    got = mesh.cache.get(key)
    if got is None:
        got = base_subcomplex(mesh) if j == 0 else _stratum(mesh, j, mesh.labels, False, certify)
        mesh.cache[key] = got
    return got


def gap_subcomplex(mesh: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR) -> Subcomplex:
    """Simplices on whose vertices and edges the rank-j eigenvalue gap is proved."""
    key = ("gap", j, gap_floor)
    got = mesh.cache.get(key)
    if got is None:
        got = filtered_subcomplex(mesh, gap_vertices(mesh, j, gap_floor), gap_edges(mesh, j, gap_floor))
        mesh.cache[key] = got
    return got


def omega_V_strata(mesh: OmegaComplex, qmap: QuadraticMap, v_basis: Sequence[Sequence], j: int,
                   certify: bool = True) -> Subcomplex:
    """Subcomplex approximating {i+(pencil restricted to V) >= j}."""
    if j < 1:
        raise StratumRangeError("restricted strata start at j = 1")
    vb = _check_basis(qmap, v_basis)
    if mesh.restricted_labels is None or mesh.v_basis != vb or mesh.qmap != qmap:
        raise ValueError("mesh must be labeled with this map and subspace (label_indices(..., v_basis))")
    key = ("vstratum", j, certify)
    got = mesh.cache.get(key)
    if got is not None:
        return got
    sv = _stratum(mesh, j, mesh.restricted_labels, True, certify)
    upper = subcomplex_for(mesh, j + 1, certify) if j + 1 <= qmap.n + 1 else mesh.complex.empty()
    if not upper.issubset(sv):
        # interlacing makes this automatic up to rounding in the certificates
        log.info("restricted stratum %d enlarged to contain the level-%d stratum", j, j + 1)
        sv = sv | upper
    mesh.cache[key] = sv
    return sv


def mu_of(mesh: OmegaComplex) -> int:
    """Largest vertex index i+ on the mesh (0 for an empty Omega)."""
    labs = [lab.pos for lab in (mesh.labels or []) if lab is not None]
    return max(labs, default=0)


def stratum_tags(mesh: OmegaComplex) -> list[int]:
    """Minimum vertex i+ over each top cell."""
    return [min(mesh.labels[v].pos for v in c) for c in mesh.top_cells()]


def label_summary(labels: Sequence[Inertia | None]) -> dict[int, int]:
    out: dict[int, int] = {}
    for lab in labels:
        if lab is not None:
            out[lab.pos] = out.get(lab.pos, 0) + 1
    return dict(sorted(out.items()))

"""Adaptive longest-edge bisection driven by index labels and certificates."""

from __future__ import annotations

import itertools
import logging
from dataclasses import replace

import numpy as np

from ..quad_core import QuadraticMap
from ..z2_topology import betti
from .mesh import MeshGeometry, OmegaComplex, _Builder, closure
from .strata import (
    DEFAULT_GAP_FLOOR,
    label_indices,
    subcomplex_for,
)

log = logging.getLogger(__name__)


def _builder_for(mesh: OmegaComplex) -> _Builder:
    geom = mesh.geometry
    b = _Builder(list(geom.facet_normals))
    for ray in geom.span_rays:
        b.add(ray)
    if len(b.rays) != len(geom.span_rays):
        raise ValueError("mesh has duplicate vertex rays")
    return b


def _edge_key(units: np.ndarray, a: int, b: int):
    length = float(np.linalg.norm(units[a] - units[b]))
    return (-round(length, 12), min(a, b), max(a, b))


def _cell_flags(mesh: OmegaComplex, gap_floor: float, check_holonomy: bool) -> tuple[np.ndarray, dict]:
    """Boolean per top cell: needs refinement.  Also returns counts by reason."""
    d = mesh.dim
    cx = mesh.complex
    cells = np.array(cx.simplices[d], dtype=np.int64)
    n1 = mesh.qmap.n + 1
    reasons = {"mixed": 0, "unproved": 0, "cover": 0, "holonomy": 0, "restricted": 0}
    pos = np.array([lab.pos for lab in mesh.labels])[cells]
    flags = pos.min(axis=1) != pos.max(axis=1)
    reasons["mixed"] = int(flags.sum())
    if mesh.restricted_labels is not None:
        rpos = np.array([lab.pos for lab in mesh.restricted_labels])[cells]
        mixed_v = rpos.min(axis=1) != rpos.max(axis=1)
        reasons["restricted"] = int((mixed_v & ~flags).sum())
        flags |= mixed_v
    for j in range(1, n1 + 1):
        inside = _cell_mask_array(subcomplex_for(mesh, j), d, len(cells))
        labelled = pos.min(axis=1) >= j
        # every vertex says lambda_j > 0 but an edge touches lambda_j = 0; bisection
        # cannot remove such an edge, so it is only counted
        reasons["unproved"] += int((labelled & ~inside).sum())
        if j < n1:
            upper = _cell_mask_array(subcomplex_for(mesh, j + 1), d, len(cells))
            from ..char_classes import transport_subcomplex

            gap = _cell_mask_array(transport_subcomplex(mesh, j, gap_floor), d, len(cells))
            cover = inside & ~upper & ~gap
            reasons["cover"] += int(cover.sum())
            flags |= cover
    if check_holonomy and d >= 2:
        from ..char_classes import transport_subcomplex, w1_cochain

        idx1 = cx.index[1]
        for j in range(1, n1):
            region = transport_subcomplex(mesh, j, gap_floor)
            w1 = w1_cochain(mesh, j, gap_floor)
            vals = w1.values & w1.domain_mask
            for t, c in enumerate(cx.simplices[d]):
                if not (region.mask(d) >> t) & 1:
                    continue
                for tri in itertools.combinations(c, 3):
                    par = 0
                    for a, b in ((tri[0], tri[1]), (tri[0], tri[2]), (tri[1], tri[2])):
                        par ^= (vals >> idx1[(a, b)]) & 1
                    if par:
                        flags[t] = True
                        reasons["holonomy"] += 1
                        break
    return flags, reasons


def _cell_mask_array(sub, d: int, count: int) -> np.ndarray:
    m = sub.mask(d)
    return np.array([(m >> t) & 1 for t in range(count)], dtype=bool)


def _stratum_betti(mesh: OmegaComplex) -> tuple:
    n1 = mesh.qmap.n + 1
    return tuple(tuple(betti(subcomplex_for(mesh, j))) for j in range(1, n1 + 1))


def _bisect(builder: _Builder, cells: list[tuple[int, ...]], flagged: set, units_of) -> list[tuple[int, ...]]:
    """Two passes of longest-edge bisection on the flagged cells (conforming)."""
    current = set(cells)
    edge_map: dict[tuple[int, int], set] = {}

    def register(c):
        for a, b in itertools.combinations(sorted(c), 2):
            edge_map.setdefault((a, b), set()).add(c)

    def unregister(c):
        for a, b in itertools.combinations(sorted(c), 2):
            s = edge_map.get((a, b))
            if s is not None:
                s.discard(c)
                if not s:
                    del edge_map[(a, b)]

    for c in current:
        register(c)
    marked = set(flagged)
    for _ in range(2):
        units = units_of()
        targets = set()
        for c in marked:
            if c in current:
                a, b = min(itertools.combinations(sorted(c), 2), key=lambda e: _edge_key(units, *e))
                targets.add((a, b))
        children = set()
        for e in sorted(targets, key=lambda e: _edge_key(units, *e)):
            owners = edge_map.get(e)
            if not owners:
                continue
            mid = builder.midpoint(*e)
            for c in sorted(owners):
                unregister(c)
                current.discard(c)
                c1 = tuple(mid if v == e[1] else v for v in c)
                c2 = tuple(mid if v == e[0] else v for v in c)
                for ch in (c1, c2):
                    current.add(ch)
                    register(ch)
                if c in marked or c in children:
                    children.discard(c)
                    children.update((c1, c2))
            units = units_of()
        marked = children
    return sorted(tuple(c) for c in current)


def _rebuild(mesh: OmegaComplex, builder: _Builder, cells, qmap: QuadraticMap, depth_delta: int) -> OmegaComplex:
    geom = mesh.geometry
    new_geom = MeshGeometry(list(geom.span_basis), list(geom.facet_normals), list(builder.rays))
    rays = list(mesh.rays) + [new_geom.to_ambient(y) for y in builder.rays[len(mesh.rays):]]
    known = {mesh.rays[v]: mesh.labels[v] for v in range(len(mesh.rays))}
    fresh = replace(
        mesh,
        rays=rays,
        simplices=closure([tuple(sorted(c)) for c in cells]),
        geometry=new_geom,
        labels=None,
        restricted_labels=None,
        refinement_depth=mesh.refinement_depth + depth_delta,
        metadata=dict(mesh.metadata),
    )
    return label_indices(fresh, qmap, mesh.v_basis, known=known)


def adaptive_refine(mesh: OmegaComplex, qmap: QuadraticMap, max_extra_depth: int,
                    gap_floor: float = DEFAULT_GAP_FLOOR, check_holonomy: bool = True) -> OmegaComplex:
    """Bisect cells whose strata membership is uncertain or whose gap data is inconsistent.

    A round bisects each flagged cell twice.  Stops when nothing is flagged,
    when the Betti numbers of all strata agree over three successive meshes,
    or after max_extra_depth rounds.
    """
    if mesh.labels is None or mesh.qmap != qmap:
        mesh = label_indices(mesh, qmap, mesh.v_basis)
    if mesh.apex is not None:
        raise ValueError("refine the base mesh before coning")
    history = []
    rounds = []
    stop = "depth cap"
    if mesh.dim <= 0:
        stop = "nothing to refine"
        max_extra_depth = 0
    for rnd in range(max_extra_depth + 1):
        flags, reasons = _cell_flags(mesh, gap_floor, check_holonomy)
        sig = _stratum_betti(mesh)
        history.append(sig)
        rounds.append({"cells": len(mesh.top_cells()), "flagged": int(flags.sum()), **reasons})
        if not flags.any():
            stop = "no flagged cells"
            break
        if len(history) >= 3 and history[-1] == history[-2] == history[-3] and reasons["cover"] == 0 and reasons["holonomy"] == 0:
            stop = "strata stable"
            break
        if rnd == max_extra_depth:
            break
        cells = mesh.top_cells()
        flagged = {cells[t] for t in np.flatnonzero(flags)}
        builder = _builder_for(mesh)

        def units_of(b=builder):
            arr = np.array(b.rays, dtype=float)
            return arr / np.linalg.norm(arr, axis=1, keepdims=True)

        new_cells = _bisect(builder, cells, flagged, units_of)
        mesh = _rebuild(mesh, builder, new_cells, qmap, 1)
    meta = dict(mesh.metadata)
    meta["refinement"] = {
        "rounds": rounds,
        "stop": stop,
        "extra_depth": len(rounds) - 1,
        "stratum_betti": [list(s) for s in history[-1]],
    }
    tags: dict[int, int] = {}
    for c in mesh.top_cells():
        t = min(mesh.labels[v].pos for v in c)
        tags[t] = tags.get(t, 0) + 1
    meta["stratum_tags"] = {str(t): n for t, n in sorted(tags.items())}
    return replace(mesh, metadata=meta)

"""End-to-end analysis: mesh, label, refine, cone, E2, differentials, reports."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

from ..char_classes import sw_top_constant_index
from ..hyperplane_section import HyperplaneSpec, assemble_G2
from ..omega_geometry import adaptive_refine, build_mesh, cone_complex, dual_cone, label_indices
from ..omega_geometry.mesh import OmegaComplex
from ..omega_geometry.strata import label_summary
from ..spectral_engine import BettiReport, SpectralTable, assemble_E2, betti_report, inclusion_rank, render_markdown, run_pages
from .problem import ProblemSpec

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    spec: ProblemSpec
    table: SpectralTable
    betti: BettiReport
    inclusion: list
    g2: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    mesh: OmegaComplex | None = field(default=None, repr=False)
    cone: OmegaComplex | None = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.betti.exact and not self.table.bounds_only

    def to_json(self) -> dict:
        out = {
            "problem": self.spec.to_json(),
            "exact": self.exact,
            "betti": self.betti.to_json(),
            "inclusion_rank": self.inclusion,
            "spectral_table": self.table.to_json(),
            "diagnostics": self.diagnostics,
        }
        if self.g2 is not None:
            out["hyperplane"] = self.g2
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def markdown(self) -> str:
        parts = [f"# {self.spec.name or 'problem'} (n={self.spec.n}, k={self.spec.k})", ""]
        for r, grid in sorted(self.table.pages.items()):
            parts += [render_markdown(grid, f"E{r}"), ""]
        if self.g2 is not None:
            parts += [render_markdown(self.g2["G2"], "G2"), ""]
        parts.append(f"Betti numbers: {self.betti.betti} ({'exact' if self.exact else 'bounds'})")
        parts.append(f"Inclusion ranks: {self.inclusion}")
        if self.betti.empty_certified:
            parts.append("X is empty.")
        for note in self.betti.notes:
            parts.append(f"- {note}")
        return "\n".join(parts) + "\n"


def prepare_mesh(spec: ProblemSpec, v_basis=None) -> OmegaComplex:
    """Labeled and refined mesh of Omega for the problem (and for V when given)."""
    opts = spec.options
    qmap = spec.qmap
    mesh = build_mesh(dual_cone(spec.K), int(opts["mesh_depth"]))
    mesh = label_indices(mesh, qmap, v_basis)
    if mesh.dim >= 1:
        mesh = adaptive_refine(mesh, qmap, int(opts["max_extra_depth"]), float(opts["gap_floor"]))
    return mesh


def run_analyze(spec: ProblemSpec, normal=None, timings: bool = False) -> RunReport:
    opts = spec.options
    qmap = spec.qmap
    clock = {}
    t0 = time.perf_counter()
    hyper = HyperplaneSpec(tuple(normal)) if normal is not None else None
    mesh = prepare_mesh(spec, hyper.basis if hyper else None)
    clock["mesh"] = time.perf_counter() - t0
    cone = cone_complex(mesh)
    table = assemble_E2(cone, qmap)
    clock["E2"] = time.perf_counter() - t0
    run_pages(table, cone, mesh, float(opts["gap_floor"]), int(opts["seed"]))
    clock["pages"] = time.perf_counter() - t0
    report = betti_report(table)
    incl = inclusion_rank(table)
    g2 = None
    if hyper is not None:
        g2 = assemble_G2(cone, qmap, hyper).to_json()
        g2["normal"] = [str(x) for x in hyper.normal]
    diag = {
        "mesh": {
            "depth": mesh.refinement_depth,
            "vertices": mesh.n_vertices,
            "top_cells": len(mesh.top_cells()),
            "labels": {str(a): b for a, b in label_summary(mesh.labels).items()},
        },
        "refinement": mesh.metadata.get("refinement"),
        "masked_edges": _masked_edges(cone, table),
    }
    if timings:
        diag["timings_s"] = {key: round(v, 3) for key, v in clock.items()}
    return RunReport(spec, table, report, incl, g2, diag, mesh, cone)


def _masked_edges(cone: OmegaComplex, table: SpectralTable) -> dict:
    """Edges whose eigenframe transport failed, per level (from cached cochains)."""
    out = {}
    for key, val in sorted(cone.cache.items(), key=lambda kv: str(kv[0])):
        if isinstance(key, tuple) and key and key[0] == "w1":
            out[str(key[1])] = val.failed_edges
    return out


def w_top_for(spec: ProblemSpec, mesh: OmegaComplex | None = None) -> int:
    """w_k of the top eigenbundle for a constant-index problem on the full sphere."""
    mesh = mesh or prepare_mesh(spec)
    mu = max(lab.pos for lab in mesh.labels if lab is not None)
    return sw_top_constant_index(mesh, mu, seed=int(spec.options["seed"]))

"""Eigenframe transport and Stiefel-Whitney data of the top-j eigenbundle.

The top-j eigenspace of the pencil defines a j-plane bundle wherever
lambda_j > lambda_{j+1}.  Its first Stiefel-Whitney class is computed edge by
edge as the orientation bit of the overlap between endpoint frames; the
degree-2 class that drives d2 is the coboundary of that edge cochain
extended by zero over the cone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
import numpy as np

from .omega_geometry.mesh import OmegaComplex
from .omega_geometry.strata import DEFAULT_GAP_FLOOR, gap_subcomplex
from .quad_core import QuadraticForm
from .z2_topology import Subcomplex, bits, coboundary

log = logging.getLogger(__name__)

OVERLAP_FLOOR = 1e-6
# edges whose endpoint overlap is less decisive than this get bisected
COMFORT_OVERLAP = 0.5
MAX_EDGE_DEPTH = 18


class GapError(ValueError):
    pass


class OverlapError(ValueError):
    pass


class StratumResolutionError(RuntimeError):
    pass


class DegeneracyError(RuntimeError):
    pass


class ConstantIndexError(ValueError):
    pass


@dataclass(frozen=True)
class EigenFrame:
    """Orthonormal frame of the top-j eigenspace, plus its complement."""

    j: int
    frame: np.ndarray
    complement: np.ndarray
    gap: float
    eigenvalues: np.ndarray
    base_form: QuadraticForm | None = None

    def residual(self, mat: np.ndarray) -> float:
        f = self.frame
        return float(np.linalg.norm(mat @ f - f @ (f.T @ mat @ f)))


def eigensystem(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues and an eigenbasis with determinant +1."""
    vals, vecs = np.linalg.eigh(mat)
    vals = vals[::-1]
    vecs = vecs[:, ::-1].copy()
    if np.linalg.det(vecs) < 0:
        vecs[:, -1] *= -1
    return vals, vecs


def _relative_gap(vals: np.ndarray, j: int) -> tuple[float, float]:
    gap = float(vals[j - 1] - vals[j])
    scale = float(np.abs(vals).max())
    return gap, scale


def frame_from_system(vals, vecs, j: int, gap_floor: float = DEFAULT_GAP_FLOOR, form=None) -> EigenFrame:
    n1 = len(vals)
    if not 1 <= j <= n1:
        raise ValueError(f"frame rank {j} outside 1..{n1}")
    if j == n1:
        gap, scale = float("inf"), 1.0
    else:
        gap, scale = _relative_gap(vals, j)
        if scale == 0 or gap <= gap_floor * scale:
            raise GapError(f"eigenvalue gap {gap:.3g} below floor at rank {j}")
    return EigenFrame(j, vecs[:, :j], vecs[:, j:], gap, vals, form)


def top_eigenframe(form: QuadraticForm | np.ndarray, j: int, gap_floor: float = DEFAULT_GAP_FLOOR) -> EigenFrame:
    """Frame of the span of eigenvectors for the j largest eigenvalues."""
    mat = form.float_shadow if isinstance(form, QuadraticForm) else np.asarray(form, dtype=float)
    vals, vecs = eigensystem(mat)
    return frame_from_system(vals, vecs, j, gap_floor, form if isinstance(form, QuadraticForm) else None)


def transport_sign(frame_a: EigenFrame | np.ndarray, frame_b: EigenFrame | np.ndarray,
                   overlap_floor: float = OVERLAP_FLOOR) -> int:
    """Orientation bit of the overlap between two frames of equal rank."""
    fa = frame_a.frame if isinstance(frame_a, EigenFrame) else frame_a
    fb = frame_b.frame if isinstance(frame_b, EigenFrame) else frame_b
    if fa.shape != fb.shape:
        raise ValueError("frames of different rank")
    det = float(np.linalg.det(fa.T @ fb))
    if abs(det) < overlap_floor:
        raise OverlapError(f"overlap determinant {det:.3g} below floor")
    return int(det < 0)


class PencilFrames:
    """Cached eigensystems of the pencil at mesh vertices and along edges."""

    def __init__(self, stack: np.ndarray, gap_floor: float = DEFAULT_GAP_FLOOR, bottom: bool = False):
        self.stack = stack
        self.gap_floor = gap_floor
        self.bottom = bottom
        self._systems: dict = {}

    def form_at(self, unit: np.ndarray) -> np.ndarray:
        return np.tensordot(unit, self.stack, axes=1)

    def system(self, key, unit: np.ndarray):
        got = self._systems.get(key)
        if got is None:
            got = eigensystem(self.form_at(unit))
            self._systems[key] = got
        return got

    def frame(self, key, unit: np.ndarray, j: int) -> np.ndarray:
        vals, vecs = self.system(key, unit)
        fr = frame_from_system(vals, vecs, j, self.gap_floor)
        return fr.complement if self.bottom else fr.frame

    def edge_bit(self, ka, ua, kb, ub, j: int) -> int:
        """Transport bit along the great-circle arc, bisecting until overlaps are decisive."""
        fa = self.frame(ka, ua, j)
        fb = self.frame(kb, ub, j)
        return self._edge(fa, ua, fb, ub, j, 0)

    def _edge(self, fa, ua, fb, ub, j, depth) -> int:
        det = float(np.linalg.det(fa.T @ fb))
        if abs(det) >= COMFORT_OVERLAP:
            return int(det < 0)
        if depth >= MAX_EDGE_DEPTH:
            raise OverlapError("edge transport did not resolve under bisection")
        um = ua + ub
        um = um / np.linalg.norm(um)
        vals, vecs = eigensystem(self.form_at(um))
        fr = frame_from_system(vals, vecs, j, self.gap_floor)
        fm = fr.complement if self.bottom else fr.frame
        return self._edge(fa, ua, fm, um, j, depth + 1) ^ self._edge(fm, um, fb, ub, j, depth + 1)


@dataclass
class W1Cochain:
    """Edge bits of w1 of the top-j eigenbundle, defined on domain_mask edges."""

    j: int
    values: int
    domain_mask: int
    failed_edges: int = 0

    def restricted(self) -> int:
        return self.values & self.domain_mask


def _frames_for(mesh: OmegaComplex, gap_floor: float, bottom: bool = False) -> PencilFrames:
    key = ("frames", gap_floor, bottom)
    got = mesh.cache.get(key)
    if got is None:
        got = PencilFrames(mesh.qmap.float_stack, gap_floor, bottom)
        mesh.cache[key] = got
    return got


def w1_cochain(mesh: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR,
               certified: bool = True, bottom: bool = False, frames: PencilFrames | None = None) -> W1Cochain:
    """w1 edge bits on base edges.

    With certified=True only edges on which a Weyl bound proves the gap
    enter the domain; otherwise every base edge is attempted and edges whose
    transport fails (gap collapse or unresolved overlap) are masked out.
    """
    if mesh.qmap is None:
        raise ValueError("mesh carries no quadratic map")
    key = ("w1", j, gap_floor, certified, bottom)
    got = mesh.cache.get(key)
    if got is not None and frames is None:
        return got
    cx = mesh.complex
    if len(cx.simplices) < 2:
        return W1Cochain(j, 0, 0)
    frames = frames or _frames_for(mesh, gap_floor, bottom)
    edges = cx.simplices[1]
    if certified:
        region = gap_subcomplex(mesh, j, gap_floor).mask(1)
        cand = np.array([(region >> t) & 1 for t in range(len(edges))], dtype=bool)
    else:
        cand = np.array([mesh.apex not in e for e in edges], dtype=bool)
    values = 0
    domain = 0
    failed = 0
    units = mesh.units
    for t in np.flatnonzero(cand):
        a, b = edges[t]
        try:
            bit = frames.edge_bit(a, units[a], b, units[b], j)
        except (GapError, OverlapError):
            failed += 1
            continue
        domain |= 1 << int(t)
        if bit:
            values |= 1 << int(t)
    out = W1Cochain(j, values, domain, failed)
    if frames is _frames_for(mesh, gap_floor, bottom):
        mesh.cache[key] = out
    return out


def transport_subcomplex(mesh: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR) -> Subcomplex:
    """Gap-certified subcomplex minus simplices with an edge whose transport failed."""
    key = ("dj", j, gap_floor)
    got = mesh.cache.get(key)
    if got is not None:
        return got
    cx = mesh.complex
    gap = gap_subcomplex(mesh, j, gap_floor)
    w1 = w1_cochain(mesh, j, gap_floor)
    bad_edges = gap.mask(1) & ~w1.domain_mask if len(cx.simplices) > 1 else 0
    masks = list(gap.masks)
    if bad_edges:
        masks[1] &= ~bad_edges
        for d in range(2, len(masks)):
            idx1 = cx.index[1]
            keep = 0
            for t in bits(masks[d]):
                s = cx.simplices[d][t]
                if all(not (bad_edges >> idx1[(s[x], s[y])]) & 1 for x in range(len(s)) for y in range(x + 1, len(s))):
                    keep |= 1 << t
            masks[d] = keep
    got = Subcomplex(cx, masks)
    mesh.cache[key] = got
    return got


@dataclass
class GammaCochain:
    """Degree-2 cochain representing the class that drives d2 at level j."""

    j: int
    values: int
    gap_region: Subcomplex
    w1: W1Cochain
    defects: int


def gamma_cochain(cone: OmegaComplex, j: int, gap_floor: float = DEFAULT_GAP_FLOOR, strict: bool = True) -> GammaCochain:
    """Coboundary of the w1 cochain extended by zero over the cone.

    Meridian edges to the apex carry 0: with the identity as the hatting form
    the eigenvectors are constant along meridians.  On triangles inside the
    gap region the result must vanish (w1 is a cocycle there); a nonzero
    value means a holonomy defect that refinement did not resolve.
    """
    if cone.apex is None:
        raise ValueError("gamma cochain lives on the cone; call cone_complex first")
    cx = cone.complex
    w1 = w1_cochain(cone, j, gap_floor)
    region = transport_subcomplex(cone, j, gap_floor)
    ext = w1.values & w1.domain_mask & region.mask(1)
    gamma = coboundary(cx, ext, 1)
    defects = gamma & region.mask(2)
    if defects and strict:
        raise StratumResolutionError(
            f"w1 holonomy is nontrivial on {bin(defects).count('1')} gap-certified triangles at level {j}; "
            "increase --max-refine or --mesh-depth"
        )
    return GammaCochain(j, gamma, region, w1, bin(defects).count("1"))


# ------------------------------------------------------- constant index case


def _check_constant(mesh: OmegaComplex, mu: int) -> None:
    labels = [lab for lab in mesh.labels or [] if lab is not None]
    if not labels or any(lab.pos != mu for lab in labels):
        raise ConstantIndexError(f"index is not identically {mu} on the mesh")


def sw_top_constant_index(mesh: OmegaComplex, mu: int, seed: int = 0, retries: int = 8,
                          section_floor: float = 1e-3) -> int:
    """w_k of the top-mu eigenbundle evaluated on the fundamental class of S^k."""
    _check_constant(mesh, mu)
    k = mesh.dim
    if mesh.apex is not None or k != mesh.k:
        raise ValueError("constant-index evaluation needs the bare mesh of the full sphere")
    if mu < k or mu == 0:
        return 0
    if k == 1:
        w1 = w1_cochain(mesh, mu, gap_floor=0.0, certified=False)
        if w1.domain_mask != mesh.complex.full_mask(1):
            raise DegeneracyError("loop transport failed on some edges")
        return bin(w1.values).count("1") & 1
    if k == 2:
        rng = np.random.default_rng(seed)
        last: Exception | None = None
        for attempt in range(retries):
            try:
                return _euler_mod2(mesh, mu, rng, section_floor)
            except DegeneracyError as exc:
                last = exc
                log.info("w2 section attempt %d degenerate: %s", attempt, exc)
        raise DegeneracyError(f"no generic section found after {retries} attempts: {last}")
    raise ValueError(f"top class evaluation supports k in (1, 2), got {k}")


def _rank2_projector_factory(mesh: OmegaComplex, mu: int, gens: np.ndarray, floor: float):
    stack = mesh.qmap.float_stack

    def rank2_basis(unit: np.ndarray) -> np.ndarray:
        """Orthonormal basis of the complement of the split-off sections."""
        vals, vecs = eigensystem(np.tensordot(unit, stack, axes=1))
        scale = max(abs(vals[0]), abs(vals[-1]), 1e-300)
        if mu < len(vals) and vals[mu - 1] - vals[mu] <= 1e-12 * scale:
            raise DegeneracyError("top eigenvalue gap closes inside a cell")
        frame = vecs[:, :mu]
        if mu == 2:
            return frame
        sec = frame @ (frame.T @ gens)
        q, r = np.linalg.qr(sec)
        if np.min(np.abs(np.diag(r))) < floor:
            raise DegeneracyError("split-off sections become dependent")
        rest = frame - q @ (q.T @ frame)
        u, s, _ = np.linalg.svd(rest, full_matrices=False)
        return u[:, :2]

    return rank2_basis


def _euler_mod2(mesh: OmegaComplex, mu: int, rng: np.random.Generator, floor: float) -> int:
    n1 = mesh.qmap.n + 1
    gens = rng.standard_normal((n1, max(mu - 2, 0)))
    section_vec = rng.standard_normal(n1)
    basis_at = _rank2_projector_factory(mesh, mu, gens, floor)
    units = mesh.units
    cache: dict = {}

    def section(key, unit):
        if key is None:
            b = basis_at(unit)
            return b, b @ (b.T @ section_vec)
        got = cache.get(key)
        if got is None:
            b = basis_at(unit)
            got = (b, b @ (b.T @ section_vec))
            cache[key] = got
        return got

    total = 0
    for tri in mesh.top_cells():
        pts = [units[v] for v in tri]
        total += _triangle_winding(pts, [("v", v) for v in tri], section, basis_at, section_vec, floor, 0)
    return total & 1


def _triangle_winding(pts, keys, section, basis_at, svec, floor, depth) -> int:
    """Winding of the section around a spherical triangle, in the fiber frame at its barycenter."""
    centre = sum(pts)
    centre = centre / np.linalg.norm(centre)
    frame = basis_at(centre)
    samples = []
    ok = True
    for e in range(3):
        pa, pb = pts[e], pts[(e + 1) % 3]
        ka, kb = keys[e], keys[(e + 1) % 3]
        for step in range(8):
            t = step / 8
            if step == 0:
                b, s = section(ka, pa)
            else:
                u = (1 - t) * pa + t * pb
                u = u / np.linalg.norm(u)
                b = basis_at(u)
                s = b @ (b.T @ svec)
            if np.linalg.svd(frame.T @ b, compute_uv=False).min() < 0.5:
                ok = False
                break
            samples.append(frame.T @ s)
        if not ok:
            break
    if ok:
        angles = []
        for c in samples:
            if np.linalg.norm(c) < floor:
                raise DegeneracyError("section nearly vanishes on a cell boundary")
            angles.append(np.arctan2(c[1], c[0]))
        turn = 0.0
        smooth = True
        for i in range(len(angles)):
            d = angles[(i + 1) % len(angles)] - angles[i]
            d = (d + np.pi) % (2 * np.pi) - np.pi
            if abs(d) > np.pi / 3:
                smooth = False
                break
            turn += d
        if smooth:
            return int(round(turn / (2 * np.pi))) & 1
    if depth >= 6:
        raise DegeneracyError("triangle could not be resolved for the section winding")
    # barycentric 4-split: zeros inside sub-triangles add up
    a, b, c = pts
    mids = []
    for x, y in ((a, b), (b, c), (c, a)):
        m = x + y
        mids.append(m / np.linalg.norm(m))
    ab, bc, ca = mids
    kab = kbc = kca = None
    ka, kb, kc = keys
    total = 0
    for sub, sk in (
        ((a, ab, ca), (ka, kab, kca)),
        ((b, bc, ab), (kb, kbc, kab)),
        ((c, ca, bc), (kc, kca, kbc)),
        ((ab, bc, ca), (kab, kbc, kca)),
    ):
        total += _triangle_winding(list(sub), list(sk), section, basis_at, svec, floor, depth + 1)
    return total

"""Independent estimate of b0(X) by sampling the sphere and clustering the retained points."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .problem import ProblemSpec

log = logging.getLogger(__name__)

MAX_ORACLE_N = 4


@dataclass
class OracleResult:
    components: int
    retained: int
    samples: int
    eps: float

    def to_json(self) -> dict:
        return {"components": self.components, "retained": self.retained, "samples": self.samples, "eps": round(self.eps, 6)}


def _violations(spec: ProblemSpec, pts: np.ndarray, normals: np.ndarray, stack: np.ndarray):
    vals = np.einsum("kij,ni,nj->nk", stack, pts, pts)
    proj = vals @ normals.T
    return vals, proj


def polish(spec: ProblemSpec, pts: np.ndarray, iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Newton pull of sphere points onto {p(x) in K}; returns points and residual norms."""
    stack = spec.qmap.float_stack
    normals = np.array(spec.K.facets, dtype=float).reshape(-1, spec.k + 1)
    if len(normals):
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    pencils = np.einsum("mk,kij->mij", normals, stack)
    x = pts.copy()
    for _ in range(iters):
        _, proj = _violations(spec, x, normals, stack)
        active = proj < 0
        if not active.any():
            break
        resid = np.where(active, proj, 0.0)
        jac = 2.0 * np.einsum("mij,nj->nmi", pencils, x) * active[..., None]
        full_r = np.concatenate([resid, (np.sum(x * x, axis=1) - 1.0)[:, None]], axis=1)
        full_j = np.concatenate([jac, 2.0 * x[:, None, :]], axis=1)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(full_j), full_r)
        x = x - step
        x /= np.linalg.norm(x, axis=1, keepdims=True)
    _, proj = _violations(spec, x, normals, stack)
    res = np.linalg.norm(np.minimum(proj, 0.0), axis=1) if len(normals) else np.zeros(len(x))
    return x, res


def default_eps(n: int, retained: int) -> float:
    """Twice the typical spacing of `retained` points spread over S^n, at least 0.15."""
    area = 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
    return max(0.15, 2 * (area / max(retained, 1)) ** (1 / max(n, 1)))


def oracle_b0(spec: ProblemSpec, samples: int = 20000, eps: float | None = None, seed: int = 0,
              tol: float = 1e-9) -> OracleResult:
    """Count eps-connected clusters of sampled points of X in projective space.

    Points are drawn uniformly on S^n, pulled onto X by Gauss-Newton (equality
    constraints have measure zero, so plain rejection would keep nothing) and
    kept when the constraint violation is below tol.  Antipodal points are
    identified before clustering.  The default eps scales with the sampling
    density of a full-dimensional set.
    """
    if spec.n > MAX_ORACLE_N:
        raise ValueError(f"sampling oracle supports n <= {MAX_ORACLE_N}")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((samples, spec.n + 1))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts, res = polish(spec, pts)
    kept = pts[res <= tol]
    retained = len(kept)
    if eps is None:
        eps = default_eps(spec.n, retained)
    if retained == 0:
        return OracleResult(0, 0, samples, eps)
    # one point per grid cell; representatives of adjacent cells stay within eps
    cell = eps / (2 * np.sqrt(spec.n + 1))
    _, first = np.unique(np.floor(kept / cell).astype(np.int64), axis=0, return_index=True)
    kept = kept[np.sort(first)]
    m = len(kept)
    both = np.concatenate([kept, -kept])
    pairs = cKDTree(both).query_pairs(eps, output_type="ndarray")
    rows = np.concatenate([pairs[:, 0] % m, np.arange(m)])
    cols = np.concatenate([pairs[:, 1] % m, np.arange(m)])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    count, _ = connected_components(graph, directed=False)
    return OracleResult(int(count), retained, samples, eps)

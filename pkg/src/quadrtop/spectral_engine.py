"""E2 assembly over the cone on Omega, differentials d2 and d_{k+1}, page turning and Betti reports."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .char_classes import ConstantIndexError, StratumResolutionError, gamma_cochain, sw_top_constant_index
from .omega_geometry.mesh import OmegaComplex
from .omega_geometry.strata import DEFAULT_GAP_FLOOR, mu_of, parallel_map, subcomplex_for
from .quad_core import QuadraticMap
from .z2_topology import CohomologyClassBasis, Z2Matrix, cup_product, relative_cohomology

log = logging.getLogger(__name__)


class SpectralConsistencyError(RuntimeError):
    """A structural identity of the spectral sequence failed (indicates a bug or bad mesh)."""


Grid = list[list[int]]


def _zeros(k: int, n: int) -> Grid:
    return [[0] * (n + 1) for _ in range(k + 2)]


def euler_of(grid: Grid) -> int:
    return sum((-1) ** (i + j) * v for i, col in enumerate(grid) for j, v in enumerate(col))


@dataclass
class SpectralTable:
    """Pages r -> dims[i][j] (0 <= i <= k+1, 0 <= j <= n) with the differentials used to turn them."""

    n: int
    k: int
    pages: dict[int, Grid]
    differentials: dict[tuple[int, int, int], Z2Matrix] = field(default_factory=dict)
    unknown: set = field(default_factory=set)
    degenerate_at: int | None = None
    bounds_only: bool = False
    basis_store: dict[tuple[int, int], CohomologyClassBasis] = field(default_factory=dict, repr=False)
    mu: int = 0
    constant_index: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def current(self) -> int:
        return max(self.pages)

    def dims(self, r: int | None = None) -> Grid:
        return self.pages[self.current if r is None else r]

    def cell(self, r: int, i: int, j: int) -> int:
        if 0 <= i <= self.k + 1 and 0 <= j <= self.n:
            return self.pages[r][i][j]
        return 0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "mu": self.mu,
            "constant_index": self.constant_index,
            "pages": {str(r): g for r, g in sorted(self.pages.items())},
            "differentials": {
                f"d{r}:({i},{j})->({i + r},{j - r + 1})": m.to_lists()
                for (r, i, j), m in sorted(self.differentials.items())
            },
            "unknown_differentials": [f"d{r}:({i},{j})->({i + r},{j - r + 1})" for r, i, j in sorted(self.unknown)],
            "degenerate_at": self.degenerate_at,
            "bounds_only": self.bounds_only,
            "notes": list(self.notes),
        }


def render_markdown(grid: Grid, title: str = "") -> str:
    """Grid with rows j descending and columns i, as printed tables of spectral sequences are laid out."""
    k1 = len(grid)
    n1 = len(grid[0]) if grid else 0
    lines = [f"**{title}**", ""] if title else []
    lines.append("| j \\ i | " + " | ".join(str(i) for i in range(k1)) + " |")
    lines.append("|---" * (k1 + 1) + "|")
    for j in reversed(range(n1)):
        row = ["0" if grid[i][j] == 0 else ("Z2" if grid[i][j] == 1 else f"Z2^{grid[i][j]}") for i in range(k1)]
        lines.append(f"| {j} | " + " | ".join(row) + " |")
    return "\n".join(lines)


# ------------------------------------------------------------------ E2 page


def assemble_E2(cone: OmegaComplex, qmap: QuadraticMap) -> SpectralTable:
    """dims[i][j] = dim H^i(C Omega, Omega^{j+1}) with representative cocycles stored per cell."""
    if cone.apex is None:
        raise ValueError("assemble_E2 needs the cone complex (cone_complex(mesh))")
    if cone.qmap != qmap:
        raise ValueError("cone is labeled with a different quadratic map")
    n, k = qmap.n, qmap.k
    cx = cone.complex
    cells = [(i, j) for j in range(n + 1) for i in range(k + 2)]
    subs = {j: subcomplex_for(cone, j + 1) for j in range(n + 1)}

    def one(cell):
        i, j = cell
        if i > cx.dim:
            return cell, None
        return cell, relative_cohomology(cx, None, subs[j], i)

    grid = _zeros(k, n)
    store = {}
    for (i, j), basis in parallel_map(one, cells):
        if basis is not None:
            grid[i][j] = basis.dim
            store[(i, j)] = basis
    mu = mu_of(cone)
    labels = [lab.pos for lab in cone.labels if lab is not None]
    full_sphere = cone.dim == k and not cone.geometry.facet_normals
    constant = bool(labels) and full_sphere and min(labels) == max(labels)
    return SpectralTable(n, k, {2: grid}, basis_store=store, mu=mu, constant_index=constant)


# ------------------------------------------------------------ differentials


def compute_d2(table: SpectralTable, cone: OmegaComplex, j: int, i: int | None = None,
               gap_floor: float = DEFAULT_GAP_FLOOR) -> dict[tuple[int, int], Z2Matrix]:
    """Matrices of x -> x cup gamma_{1,j} from E2^{i,j} to E2^{i+2,j-1}, in the stored bases."""
    out = {}
    rows = range(table.k + 2) if i is None else [i]
    gamma = None
    cx = cone.complex
    lower = subcomplex_for(cone, j)
    for ii in rows:
        src = table.basis_store.get((ii, j))
        tgt = table.basis_store.get((ii + 2, j - 1))
        if src is None or tgt is None or src.dim == 0 or tgt.dim == 0:
            continue
        if gamma is None:
            gamma = gamma_cochain(cone, j, gap_floor)
        cols = []
        for rep in src.representatives:
            y = cup_product(cx, rep, ii, gamma.values, 2)
            if y & lower.mask(ii + 2):
                raise StratumResolutionError(
                    f"cup product with gamma at level {j} does not vanish on the level-{j} stratum; "
                    "increase --max-refine or --mesh-depth"
                )
            cols.append(tgt.coordinates(y))
        out[(ii, j)] = Z2Matrix.from_columns(tgt.dim, cols)
    return out


def compute_dk1_constant(table: SpectralTable, mesh: OmegaComplex, seed: int = 0) -> dict[tuple[int, int], Z2Matrix]:
    """d_{k+1}: E^{0,b} -> E^{k+1,b-k} as multiplication by w_k of the top-mu eigenbundle."""
    if not table.constant_index:
        raise ConstantIndexError("index function is not constant on the full sphere")
    k, mu = table.k, table.mu
    w = sw_top_constant_index(mesh, mu, seed=seed)
    r = k + 1
    out = {}
    for b in range(mu, table.n + 1):
        src = table.cell(r, 0, b) if r in table.pages else 0
        tgt = table.cell(r, k + 1, b - k) if r in table.pages else 0
        if src and tgt:
            if src != 1 or tgt != 1:
                raise SpectralConsistencyError("constant-index cells must be one-dimensional")
            out[(0, b)] = Z2Matrix.from_dense([[w]])
    table.notes.append(f"d{r} from w{k} of the top-{mu} eigenbundle = {w}")
    return out


# ----------------------------------------------------------------- paging


def page_turn(table: SpectralTable, r: int | None = None) -> SpectralTable:
    """Pass from page r to r+1 using the differentials stored for page r.

    Cells touched by a potentially nonzero differential that was not computed
    are recorded as unknown; their later dims are upper bounds only.
    """
    r = table.current if r is None else r
    grid = table.pages[r]
    k, n = table.k, table.n
    nxt = [col[:] for col in grid]
    for i in range(k + 2):
        for j in range(n + 1):
            ti, tj = i + r, j - r + 1
            if not (0 <= ti <= k + 1 and 0 <= tj <= n) or not grid[i][j] or not grid[ti][tj]:
                continue
            m = table.differentials.get((r, i, j))
            if m is None:
                table.unknown.add((r, i, j))
                continue
            if (m.nrows, m.ncols) != (grid[ti][tj], grid[i][j]):
                raise SpectralConsistencyError(f"d{r} at ({i},{j}) has the wrong shape")
            rk = m.rank()
            nxt[i][j] -= rk
            nxt[ti][tj] -= rk
    for (rr, i, j), m in table.differentials.items():
        if rr != r:
            continue
        nxt_m = table.differentials.get((r, i + r, j - r + 1))
        if nxt_m is not None and not (nxt_m @ m).is_zero():
            raise SpectralConsistencyError(f"d{r} composed with d{r} is nonzero at ({i},{j})")
    if euler_of(nxt) != euler_of(grid):
        raise SpectralConsistencyError("Euler characteristic changed between pages")
    table.pages[r + 1] = nxt
    return table


def _structurally_final(table: SpectralTable, r: int) -> bool:
    """True when every differential d_s, s >= r, has zero source or target on page r."""
    grid = table.pages[r]
    k, n = table.k, table.n
    for s in range(r, k + 2):
        for i in range(k + 2):
            for j in range(n + 1):
                ti, tj = i + s, j - s + 1
                if 0 <= ti <= k + 1 and 0 <= tj <= n and grid[i][j] and grid[ti][tj]:
                    return False
    return True


def run_pages(table: SpectralTable, cone: OmegaComplex, mesh: OmegaComplex | None = None,
              gap_floor: float = DEFAULT_GAP_FLOOR, seed: int = 0) -> SpectralTable:
    """d2 everywhere, d_{k+1} in the constant-index case, then pages until nothing can change.

    mesh is the bare (uncone'd) mesh; it is needed only in the constant-index case.
    """
    n, k = table.n, table.k
    js = range(1, n + 1)
    for mats in parallel_map(lambda j: compute_d2(table, cone, j, gap_floor=gap_floor), js):
        for (i, j), m in mats.items():
            table.differentials[(2, i, j)] = m
    if table.constant_index and mesh is None:
        raise ValueError("constant-index differentials need the bare mesh")
    if table.constant_index and k == 1:
        # d2 is d_{k+1} here; cross-check the cup product route against loop holonomy
        for (i, j), m in compute_dk1_constant(table, mesh, seed).items():
            got = table.differentials.get((2, i, j))
            if got is not None and got.to_lists() != m.to_lists():
                raise SpectralConsistencyError(f"d2 at ({i},{j}) disagrees with the holonomy of the eigenbundle")
    r = 2
    while not _structurally_final(table, r):
        if r == k + 1 and r > 2 and table.constant_index:
            for (i, j), m in compute_dk1_constant(table, mesh, seed).items():
                table.differentials[(r, i, j)] = m
        page_turn(table, r)
        r += 1
    table.degenerate_at = r
    if table.unknown:
        table.bounds_only = True
        table.degenerate_at = None
        table.notes.append("higher differentials outside the computable regimes; Betti numbers reported as bounds")
    return table


# ---------------------------------------------------------------- reports


@dataclass
class BettiReport:
    """b_0..b_n of X (int when exact, [lower, upper] otherwise)."""

    betti: list
    empty_certified: bool
    mu: int
    exact: bool
    guaranteed_degrees: list[int]
    low_degree_consistent: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "betti": self.betti,
            "exact": self.exact,
            "empty_certified": self.empty_certified,
            "mu": self.mu,
            "guaranteed_degrees": self.guaranteed_degrees,
            "low_degree_consistent": self.low_degree_consistent,
            "notes": list(self.notes),
        }


def _cell_bounds(table: SpectralTable) -> tuple[Grid, Grid]:
    """Lower and upper bounds for E_infinity cellwise.

    Unknown differentials are never subtracted from the pages, so the last
    page is an upper bound; each unknown d_r can remove at most the smaller
    of its page-r source and target.
    """
    upper = table.dims()
    lower = [col[:] for col in upper]
    for r, i, j in table.unknown:
        ti, tj = i + r, j - r + 1
        loss = min(table.pages[r][i][j], table.pages[r][ti][tj])
        lower[i][j] -= loss
        lower[ti][tj] -= loss
    return [[max(v, 0) for v in col] for col in lower], upper


def guaranteed_degrees(n: int, mu: int, k: int) -> tuple[list[int], int | None]:
    """Degrees b where H_b(X) = Z2 is forced, and the boundary degree where only b_b >= 1 is forced.

    Only E^{0,n-b} lies on the antidiagonal for b < n - mu - k; at b = n - mu - k
    the cell E^{k+1,mu-1} = H^k of Omega^mu can also contribute.
    """
    top = n - mu - k
    return list(range(0, max(top, 0))), (top if top >= 0 else None)


def betti_report(table: SpectralTable) -> BettiReport:
    n, k = table.n, table.k
    lower, upper = _cell_bounds(table)
    betti = []
    exact = True
    for b in range(n + 1):
        lo = sum(lower[i][n - b - i] for i in range(k + 2) if 0 <= n - b - i <= n)
        hi = sum(upper[i][n - b - i] for i in range(k + 2) if 0 <= n - b - i <= n)
        if lo == hi:
            betti.append(hi)
        else:
            exact = False
            betti.append([lo, hi])
    notes = list(table.notes)
    forced, boundary = guaranteed_degrees(n, table.mu, k)
    consistent = True
    for b in forced:
        v = betti[b]
        if (v != 1) if isinstance(v, int) else not (v[0] <= 1 <= v[1]):
            consistent = False
        elif not isinstance(v, int):
            betti[b] = 1
            notes.append(f"b{b} fixed to 1 by the low-degree nonemptiness bound")
    if boundary is not None:
        v = betti[boundary]
        if (v if isinstance(v, int) else v[1]) < 1:
            consistent = False
        elif not isinstance(v, int) and v[0] < 1:
            betti[boundary] = [1, v[1]]
    if not consistent:
        notes.append("table contradicts the low-degree nonemptiness bound; mesh is likely under-resolved")
    exact = all(isinstance(v, int) for v in betti)
    empty = exact and all(v == 0 for v in betti)
    return BettiReport(betti, empty, table.mu, exact, forced + ([boundary] if boundary is not None else []),
                       consistent, notes)


def inclusion_rank(table: SpectralTable) -> list:
    """rank of H_a(X) -> H_a(P^n) for a = 0..n, read off column 0 of E_infinity."""
    n = table.n
    lower, upper = _cell_bounds(table)
    out = []
    for a in range(n + 1):
        lo, hi = lower[0][n - a], upper[0][n - a]
        out.append(hi if lo == hi else [lo, hi])
        if a > n - table.mu and hi != 0:
            raise SpectralConsistencyError(f"inclusion rank in degree {a} > n - mu must vanish")
    return out

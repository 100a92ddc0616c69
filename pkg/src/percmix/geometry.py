"""Geometric probes of a percolation configuration.

Three instruments, all pure functions of a bond configuration:

* first-passage distances on the planar dual, where a dual edge costs 1 when
  the primal edge it crosses is open and 0 otherwise (so dual geodesics trace
  cheap cut curves; traversal stays on interior faces, since routing through
  the merged outer face has no analogue off the finite box);
* a renormalized good-site field: a block site is good when its window holds
  an open cluster touching all faces that absorbs every component of
  non-trivial diameter;
* window-occupancy coarse-graining of vertex sets onto the block lattice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DomainError, UnsupportedDimensionError
from .lattice import BoxSpec, build_box, dual_lattice
from .percolation import BondConfig, bernoulli_site_field, sample_bond_config


class DualFppField:
    """0/1 edge weights on the interior dual lattice of a d=2 configuration.

    Weight(dual edge) = 1 iff the crossed primal edge is open. Distances are
    0-1 shortest paths over interior faces (deque BFS).
    """

    def __init__(self, config: BondConfig):
        if config.box.d != 2:
            raise UnsupportedDimensionError("dual first-passage needs d=2")
        self.config = config
        box = build_box(config.box)
        self.dual = dual_lattice(box)
        u, v = self.dual.dual_u, self.dual.dual_v
        interior = (u != self.dual.outer_face) & (v != self.dual.outer_face)
        uu, vv = u[interior], v[interior]
        ww = config.open_mask[interior].astype(np.int64)
        size = self.dual.num_inner_faces
        g = sparse.coo_matrix((np.arange(uu.size) + 1, (uu, vv)), shape=(size, size))
        g = (g + g.T).tocsr()
        self._indptr = g.indptr
        self._indices = g.indices
        self._weights = ww[(g.data - 1)]
        self.num_faces = size

    def weight(self, dual_edge_id: int) -> int:
        """Weight of the dual edge paired with primal EdgeId ``dual_edge_id``."""
        return int(self.config.open_mask[dual_edge_id])

    def distance(self, x_face, y_face) -> int:
        """0-1 weighted distance between two dual vertices (face coordinates)."""
        src = int(self.dual.coord_to_face(np.asarray(x_face)))
        dst = int(self.dual.coord_to_face(np.asarray(y_face)))
        if src == dst:
            return 0
        dist = np.full(self.num_faces, -1, dtype=np.int64)
        dist[src] = 0
        dq = deque([src])
        indptr, indices, weights = self._indptr, self._indices, self._weights
        while dq:
            node = dq.popleft()
            base = dist[node]
            if node == dst:
                return int(base)
            for k in range(indptr[node], indptr[node + 1]):
                nb = indices[k]
                w = weights[k]
                nd = base + w
                if dist[nb] == -1 or nd < dist[nb]:
                    dist[nb] = nd
                    if w == 0:
                        dq.appendleft(nb)
                    else:
                        dq.append(nb)
        raise DomainError("dual vertices are not connected")  # unreachable on a box

    def distances_from(self, x_face) -> np.ndarray:
        """0-1 distances from one dual vertex to every interior face."""
        src = int(self.dual.coord_to_face(np.asarray(x_face)))
        dist = np.full(self.num_faces, np.iinfo(np.int64).max, dtype=np.int64)
        dist[src] = 0
        dq = deque([src])
        indptr, indices, weights = self._indptr, self._indices, self._weights
        while dq:
            node = dq.popleft()
            base = dist[node]
            for k in range(indptr[node], indptr[node + 1]):
                nb = indices[k]
                nd = base + weights[k]
                if nd < dist[nb]:
                    dist[nb] = nd
                    if weights[k] == 0:
                        dq.appendleft(nb)
                    else:
                        dq.append(nb)
        return dist


def dual_fpp_distance(config: BondConfig, x_face, y_face) -> int:
    """One-off dual first-passage distance; use DualFppField for batches."""
    return DualFppField(config).distance(x_face, y_face)


@dataclass(frozen=True)
class FppRegression:
    slope: float
    intercept: float
    r_squared: float
    n_pairs: int
    pairs: tuple  # (l1, distance) for every sampled pair


def fpp_regression(config: BondConfig, n_pairs: int = 300,
                   l1_range: tuple = (10, 60), margin: int = 5,
                   rng_seed: int = 0, n_targets: int = 11) -> FppRegression:
    """Linear growth fit of dual FPP distance against L1 separation.

    Pairs are drawn from faces at least ``margin`` steps from the boundary,
    stratified over ``n_targets`` L1 separations spanning ``l1_range``. The
    line is fitted to the per-separation mean distances: single-pair
    distances fluctuate on the scale of a few edges independently of the
    separation, so averaging within each separation isolates the growth rate.
    All sampled (l1, distance) pairs are retained on the result.
    """
    from .fitting import fit_linear

    field = DualFppField(config)
    n = config.box.n
    lo, hi = -n + margin, n - 1 - margin
    if hi <= lo:
        raise DomainError("box too small for the requested boundary margin")
    if l1_range[1] > (hi - lo) * 2:
        raise DomainError("L1 range exceeds the interior span")
    rng = np.random.default_rng(rng_seed)
    targets = np.unique(np.linspace(l1_range[0], l1_range[1], n_targets).round()
                        .astype(np.int64))
    per = max(1, n_pairs // len(targets))
    pairs = []
    means = []
    for t in targets:
        acc = []
        attempts = 0
        while len(acc) < per:
            attempts += 1
            if attempts > 10_000 * per:
                raise DomainError("could not sample enough admissible face pairs")
            a = rng.integers(lo, hi + 1, size=2)
            dx = int(rng.integers(-t, t + 1))
            dy = t - abs(dx)
            if rng.integers(2):
                dy = -dy
            b = a + np.array([dx, dy])
            if not (lo <= b[0] <= hi and lo <= b[1] <= hi):
                continue
            d = field.distance(a, b)
            acc.append(d)
            pairs.append((int(t), int(d)))
        means.append(float(np.mean(acc)))
    fit = fit_linear(targets.astype(float), np.asarray(means))
    return FppRegression(slope=fit.slope, intercept=fit.intercept,
                         r_squared=fit.r_squared, n_pairs=len(pairs),
                         pairs=tuple(pairs))


# ---------------------------------------------------------------------------
# renormalized good-site field

MIN_BLOCK_SCALE = 8


def _window_radius(block: int) -> int:
    return (5 * block) // 4


def block_sites(box: BoxSpec, block: int) -> np.ndarray:
    """All sites of (block Z)^d inside the box, shape (S, d)."""
    n = box.n
    per_axis = np.arange(-(n // block) * block, n + 1, block, dtype=np.int64)
    grids = np.meshgrid(*([per_axis] * box.d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


@dataclass
class GoodSiteField:
    """Good/bad classification of interior block sites for one configuration.

    ``classified`` marks sites whose full window fits in the box; boundary
    sites stay unclassified. ``witness`` holds the smallest global VertexId of
    the face-crossing cluster for good sites, -1 otherwise.
    """

    block: int
    box: BoxSpec
    p: float
    seed: int
    sites: np.ndarray
    classified: np.ndarray
    crossing_cluster: np.ndarray  # condition 1 per classified site
    good: np.ndarray
    witness: np.ndarray

    @property
    def num_classified(self) -> int:
        return int(self.classified.sum())

    def density(self) -> float:
        k = self.num_classified
        if k == 0:
            raise DomainError("no interior sites at this block scale")
        return float(self.good[self.classified].sum()) / k

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            coord_cols = ",".join(f"v{a}" for a in range(self.box.d))
            fh.write(f"{coord_cols},classified,good,witness\n")
            for i in range(self.sites.shape[0]):
                coords = ",".join(str(int(c)) for c in self.sites[i])
                fh.write(f"{coords},{int(self.classified[i])},"
                         f"{int(self.good[i])},{int(self.witness[i])}\n")


def classify_good_vertices(config: BondConfig, block: int) -> GoodSiteField:
    """Classify block sites by the crossing-cluster / absorbed-components rule.

    A site is good when some open cluster of its window touches all 2d window
    faces and every open component of L-infinity diameter above block/10
    intersects (hence equals) that cluster. Thresholds use exact rational
    comparisons; the window radius floor(5*block/4) needs block >= 8 to stay
    meaningful.
    """
    if block < MIN_BLOCK_SCALE:
        raise DomainError(f"block scale must be at least {MIN_BLOCK_SCALE}")
    box = build_box(config.box)
    n, d = config.box.n, config.box.d
    radius = _window_radius(block)
    sites = block_sites(config.box, block)
    num_sites = sites.shape[0]
    classified = (np.abs(sites) + radius <= n).all(axis=1)
    crossing = np.zeros(num_sites, dtype=bool)
    good = np.zeros(num_sites, dtype=bool)
    witness = np.full(num_sites, -1, dtype=np.int64)

    open_mask = config.open_mask
    side = 2 * radius + 1
    for si in np.nonzero(classified)[0]:
        v = sites[si]
        grid = box.window_vertex_ids(v - radius, v + radius)
        flat = grid.ravel()
        local = np.arange(flat.size, dtype=np.int64).reshape(grid.shape)
        # open edges with both endpoints in the window, per axis
        rows, cols = [], []
        for a in range(d):
            sl_tail = [slice(None)] * d
            sl_tail[a] = slice(0, side - 1)
            sl_head = [slice(None)] * d
            sl_head[a] = slice(1, side)
            tails = grid[tuple(sl_tail)].ravel()
            eids = box.edge_lookup[tails, a]
            keep = open_mask[eids]
            rows.append(local[tuple(sl_tail)].ravel()[keep])
            cols.append(local[tuple(sl_head)].ravel()[keep])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        adj = sparse.coo_matrix(
            (np.ones(rows.size, dtype=np.int8), (rows, cols)),
            shape=(flat.size, flat.size),
        )
        ncomp, labels = csgraph.connected_components(
            (adj + adj.T).tocsr(), directed=False
        )
        shaped = labels.reshape(grid.shape)

        touches = np.zeros((ncomp, 2 * d), dtype=bool)
        for a in range(d):
            sl0 = [slice(None)] * d
            sl0[a] = 0
            sl1 = [slice(None)] * d
            sl1[a] = side - 1
            touches[np.unique(shaped[tuple(sl0)]), 2 * a] = True
            touches[np.unique(shaped[tuple(sl1)]), 2 * a + 1] = True
        crossing_labels = np.nonzero(touches.all(axis=1))[0]

        coords_local = np.stack(
            np.meshgrid(*([np.arange(side)] * d), indexing="ij"), axis=-1
        ).reshape(-1, d)
        diam = np.zeros(ncomp, dtype=np.int64)
        for a in range(d):
            cmax = np.full(ncomp, -1, dtype=np.int64)
            cmin = np.full(ncomp, side, dtype=np.int64)
            np.maximum.at(cmax, labels, coords_local[:, a])
            np.minimum.at(cmin, labels, coords_local[:, a])
            diam = np.maximum(diam, cmax - cmin)
        big = np.nonzero(10 * diam > block)[0]

        if crossing_labels.size >= 1:
            crossing[si] = True
            if crossing_labels.size == 1:
                star = crossing_labels[0]
                if np.all(np.isin(big, [star])):
                    good[si] = True
                    witness[si] = int(flat[labels == star].min())
    return GoodSiteField(
        block=block, box=config.box, p=config.p, seed=config.seed,
        sites=sites, classified=classified, crossing_cluster=crossing,
        good=good, witness=witness,
    )


def coarse_grain(box: BoxSpec, vertex_ids, block: int) -> np.ndarray:
    """Block-lattice image of a vertex set by window-occupancy thresholding.

    A site v of (block Z)^d inside the box enters the image when its window
    (radius floor(5*block/4), truncated at the box) holds at least block/10
    vertices of the set; the count comparison 10*count >= block is exact.
    Returns site coordinates, shape (S', d).
    """
    graph = build_box(box)
    vertex_ids = np.asarray(vertex_ids, dtype=np.int64)
    sites = block_sites(box, block)
    if vertex_ids.size == 0:
        return sites[:0]
    coords = graph.vertex_coords(vertex_ids)
    radius = _window_radius(block)
    keep = []
    for i in range(sites.shape[0]):
        count = int((np.abs(coords - sites[i]) <= radius).all(axis=1).sum())
        if 10 * count >= block:
            keep.append(i)
    return sites[keep]


def sites_connected(site_coords: np.ndarray, block: int) -> bool:
    """Connectivity of a site set under nearest-neighbour block adjacency."""
    s = np.asarray(site_coords, dtype=np.int64)
    if s.shape[0] == 0:
        raise DomainError("empty site set")
    if s.shape[0] == 1:
        return True
    index = {tuple(row): i for i, row in enumerate(s)}
    seen = {0}
    stack = [0]
    d = s.shape[1]
    while stack:
        i = stack.pop()
        for a in range(d):
            for sign in (-1, 1):
                nb = s[i].copy()
                nb[a] += sign * block
                j = index.get(tuple(nb))
                if j is not None and j not in seen:
                    seen.add(j)
                    stack.append(j)
    return len(seen) == s.shape[0]


@dataclass(frozen=True)
class DensityRow:
    p: float
    block: int
    seed: int
    n_classified: int
    n_good: int
    density: float
    site_reference_density: float


def good_density_curve(d: int, n: int, p: float, blocks, seeds) -> list:
    """Good-site density per (block, seed), with site-percolation references.

    For each block scale the reference column carries the empirical density of
    a Bernoulli site field drawn on the same block grid with parameter equal
    to the mean measured good density, for side-by-side comparison with the
    dominating site-percolation picture.
    """
    box = BoxSpec(d, n)
    out = []
    for block in blocks:
        per_seed = []
        for seed in seeds:
            field = classify_good_vertices(sample_bond_config(box, p, seed), block)
            k = field.num_classified
            g = int(field.good[field.classified].sum())
            per_seed.append((seed, k, g))
        mean_density = (
            sum(g for _, k, g in per_seed) / max(1, sum(k for _, k, _ in per_seed))
        )
        for seed, k, g in per_seed:
            ref = float(bernoulli_site_field(seed, k, mean_density).mean()) if k else 0.0
            out.append(DensityRow(
                p=p, block=block, seed=seed, n_classified=k, n_good=g,
                density=g / k if k else 0.0, site_reference_density=ref,
            ))
    return out


def density_rows_to_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("p,block,seed,n_classified,n_good,density,site_reference_density\n")
        for r in rows:
            fh.write(f"{r.p!r},{r.block},{r.seed},{r.n_classified},{r.n_good},"
                     f"{r.density!r},{r.site_reference_density!r}\n")

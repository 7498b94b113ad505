"""Marching cubes over a ScalarGrid with pluggable crossing solvers.

Vertices are deduplicated by grid edge: EdgeId (i, j, k, axis) names the edge
from node (i,j,k) to its +axis neighbor, and every vertex is owned by exactly
one such edge.  Vertex order is lexicographic in (i, j, k, axis), which makes
extraction deterministic down to the byte.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import mc_tables as mct
from .interpolants import Method, linear_crossing, solve_crossing
from .volume import AXES, BoundaryPolicy, ScalarGrid, resolve_indices


class EdgeId(NamedTuple):
    i: int
    j: int
    k: int
    axis: int


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in world coordinates (inclusive bounds)."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box min/max must be 3-vectors")
        if not all(h > l for l, h in zip(lo, hi)):
            raise ValueError(f"box max must exceed min componentwise: {lo} .. {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        lo = np.asarray(self.min)
        hi = np.asarray(self.max)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def intersects_grid(self, grid: ScalarGrid) -> bool:
        glo = np.asarray(grid.origin)
        ghi = glo + (np.asarray(grid.dims) - 1) * np.asarray(grid.spacing)
        return bool(np.all(np.asarray(self.min) <= ghi) and np.all(np.asarray(self.max) >= glo))


@dataclass(frozen=True)
class ExtractionConfig:
    isovalue: float
    method: Method = Method.LINEAR
    boundary: BoundaryPolicy = BoundaryPolicy.CLAMP
    region_mask: Box | None = None

    def __post_init__(self):
        if not np.isfinite(self.isovalue):
            raise ValueError("isovalue must be finite")
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method(self.method))


class IndexedMesh:
    """Deduplicated triangle mesh with named per-vertex scalar channels.

    ``edge_ids`` carries each vertex's generating grid edge (rows of -1 for
    synthesized vertices such as crack-patch fan centers); ``crossing_valid``
    records whether the configured solver produced the crossing or fell back
    to the linear one.
    """

    def __init__(self, vertices, triangles, channels=None, edge_ids=None, crossing_valid=None):
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        self.channels: dict[str, np.ndarray] = {}
        for name, vals in (channels or {}).items():
            self.channels[name] = np.asarray(vals, dtype=np.float64).reshape(-1)
        self.edge_ids = None if edge_ids is None else np.asarray(edge_ids, dtype=np.int64).reshape(-1, 4)
        self.crossing_valid = (
            None if crossing_valid is None else np.asarray(crossing_valid, dtype=bool).reshape(-1)
        )
        self.validate()

    def validate(self):
        nv = len(self.vertices)
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise ValueError("triangle index out of range")
        if len(self.triangles):
            t = self.triangles
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise ValueError("degenerate triangle (repeated vertex index)")
        for name, vals in self.channels.items():
            if len(vals) != nv:
                raise ValueError(f"channel {name!r} length {len(vals)} != vertex count {nv}")
        if self.edge_ids is not None and len(self.edge_ids) != nv:
            raise ValueError("edge_ids length mismatch")
        if self.crossing_valid is not None and len(self.crossing_valid) != nv:
            raise ValueError("crossing_valid length mismatch")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def with_channels(self, extra: dict[str, np.ndarray]) -> "IndexedMesh":
        # geometry is unchanged and already validated, so only the new
        # channels need checking; skipping re-validation keeps channel
        # attachment a small fraction of extraction time
        merged = dict(self.channels)
        nv = len(self.vertices)
        for name, vals in extra.items():
            arr = np.asarray(vals, dtype=np.float64).reshape(-1)
            if len(arr) != nv:
                raise ValueError(f"channel {name!r} length {len(arr)} != vertex count {nv}")
            merged[name] = arr
        out = IndexedMesh.__new__(IndexedMesh)
        out.vertices = self.vertices
        out.triangles = self.triangles
        out.channels = merged
        out.edge_ids = self.edge_ids
        out.crossing_valid = self.crossing_valid
        return out


# The Bourke tables wind triangles counterclockwise when seen from the
# f < k side under the "corner inside iff f >= k" classification used here,
# which makes right-handed normals point toward increasing f - k.  Reversing
# each triple orients normals toward decreasing f - k (outward for a field
# that is negative outside), which is the convention this module guarantees.
_REVERSE_TRIANGLES = True


def _crossed_edges(inside: np.ndarray) -> list[np.ndarray]:
    masks = []
    for ax in AXES:
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        masks.append(inside[tuple(lo)] != inside[tuple(hi)])
    return masks


def _edge_arrays(grid: ScalarGrid, masks) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate crossed-edge indices and return (edges (N,4), order (N,)).

    ``order`` ranks each edge in lexicographic (i, j, k, axis) order; the
    vertex id of edge row r is rank[r].
    """
    cols = []
    for ax, mask in enumerate(masks):
        idx = np.nonzero(mask)
        n = idx[0].size
        cols.append(
            np.column_stack([idx[0], idx[1], idx[2], np.full(n, ax, dtype=np.int64)])
        )
    edges = np.concatenate(cols, axis=0) if cols else np.zeros((0, 4), dtype=np.int64)
    if len(edges) == 0:
        return edges, np.zeros(0, dtype=np.int64)
    order = np.lexsort((edges[:, 3], edges[:, 2], edges[:, 1], edges[:, 0]))
    ranks = np.empty(len(edges), dtype=np.int64)
    ranks[order] = np.arange(len(edges))
    return edges, ranks


def _axis_plane_values(grid: ScalarGrid, axis: int, offset: int, policy: BoundaryPolicy) -> np.ndarray:
    """Samples at node index (edge_low + offset) for every edge along ``axis``."""
    n = grid.dims[axis]
    idx = resolve_indices(np.arange(n - 1) + offset, n, policy)
    return np.take(grid.values, idx, axis=axis)


def _linear_alphas(f0: np.ndarray, f1: np.ndarray, k: float) -> np.ndarray:
    return np.clip((k - f0) / (f1 - f0), 0.0, 1.0)


def _method_edge_mask(grid: ScalarGrid, edges: np.ndarray, cfg: ExtractionConfig) -> np.ndarray:
    """Which crossed edges use cfg.method (inside region_mask; midpoint rule)."""
    if cfg.region_mask is None:
        return np.ones(len(edges), dtype=bool)
    origin = np.asarray(grid.origin)
    spacing = np.asarray(grid.spacing)
    mid = origin + edges[:, :3] * spacing
    mid[np.arange(len(edges)), edges[:, 3]] += 0.5 * spacing[edges[:, 3]]
    return cfg.region_mask.contains(mid)


def _solve_alphas(
    grid: ScalarGrid,
    edges: np.ndarray,
    k: float,
    method: Method,
    policy: BoundaryPolicy,
    use_method: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge crossing parameters (and validity) for concatenated edge rows."""
    n_edges = len(edges)
    alphas = np.empty(n_edges)
    valid = np.ones(n_edges, dtype=bool)
    for ax in AXES:
        sel = np.nonzero(edges[:, 3] == ax)[0]
        if sel.size == 0:
            continue
        ii, jj, kk = edges[sel, 0], edges[sel, 1], edges[sel, 2]
        naxis = grid.dims[ax]
        coords = [ii, jj, kk]

        def take(offset):
            idx = list(coords)
            idx[ax] = resolve_indices(coords[ax] + offset, naxis, policy)
            return grid.values[idx[0], idx[1], idx[2]]

        f0 = take(0)
        f1 = take(1)
        lin = _linear_alphas(f0, f1, k)
        if method is Method.LINEAR:
            alphas[sel] = lin
            continue
        fm2, fm1, f2 = take(-2), take(-1), take(2)
        h = grid.spacing[ax]
        sub = np.ones(sel.size, dtype=bool) if use_method is None else use_method[sel]
        out = lin.copy()
        ok = np.ones(sel.size, dtype=bool)
        for row in np.nonzero(sub)[0]:
            sol = solve_crossing(method, (fm2[row], fm1[row], f0[row], f1[row], f2[row]), h, k)
            out[row] = sol.alpha
            ok[row] = sol.valid
        alphas[sel] = out
        valid[sel] = ok
    return alphas, valid


def _vertex_positions(grid: ScalarGrid, edges: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    origin = np.asarray(grid.origin)
    spacing = np.asarray(grid.spacing)
    pos = origin + edges[:, :3].astype(np.float64) * spacing
    pos[np.arange(len(edges)), edges[:, 3]] += alphas * spacing[edges[:, 3]]
    return pos


def _assemble_triangles(
    inside: np.ndarray, masks, ranks: np.ndarray, dims
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], np.ndarray]:
    """Triangles in lexicographic cell order, plus cell ids and vid lattices."""
    ncx, ncy, ncz = dims[0] - 1, dims[1] - 1, dims[2] - 1
    cube = np.zeros((ncx, ncy, ncz), dtype=np.int32)
    for c, (dx, dy, dz) in enumerate(mct.CORNER_OFFSETS):
        cube |= inside[dx : dx + ncx, dy : dy + ncy, dz : dz + ncz].astype(np.int32) << c

    # Vertex-id lattices per axis.
    vid = [np.full(m.shape, -1, dtype=np.int64) for m in masks]
    start = 0
    for ax, m in enumerate(masks):
        cnt = int(m.sum())
        vid[ax][m] = ranks[start : start + cnt]
        start += cnt

    crossed = mct.EDGE_TABLE[cube] != 0
    ci, cj, ck = np.nonzero(crossed)
    if ci.size == 0:
        return np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.int64), vid, cube
    rows = mct.TRI_TABLE[cube[ci, cj, ck]]

    gvid = np.empty((ci.size, 12), dtype=np.int64)
    for e in range(12):
        ax = int(mct.EDGE_AXIS[e])
        ox, oy, oz = mct.EDGE_ORIGIN[e]
        gvid[:, e] = vid[ax][ci + ox, cj + oy, ck + oz]

    tri_edges = rows[:, :15].reshape(-1, 5, 3)
    has_tri = tri_edges[:, :, 0] >= 0
    cells, slots = np.nonzero(has_tri)
    local = tri_edges[cells, slots, :]
    tris = gvid[cells[:, None], local]
    if _REVERSE_TRIANGLES:
        tris = tris[:, ::-1]
    tri_cells = np.column_stack([ci[cells], cj[cells], ck[cells]])
    return tris, tri_cells, vid, cube


@dataclass
class ExtractionData:
    """Internals of one extraction pass (consumed by refinement/uncertainty)."""

    edges: np.ndarray        # (N,4) crossed edges in vertex-id order
    alphas: np.ndarray       # (N,) crossing parameter per vertex
    valid: np.ndarray        # (N,) solver validity per vertex
    triangles: np.ndarray    # (T,3) vertex ids
    tri_cells: np.ndarray    # (T,3) owning cell per triangle
    vid_lattices: list[np.ndarray]  # per-axis edge lattice -> vertex id (-1 if uncrossed)
    cube_index: np.ndarray   # (ncx,ncy,ncz) marching-cubes case per cell


def extract_full(grid: ScalarGrid, cfg: ExtractionConfig) -> tuple[IndexedMesh, ExtractionData]:
    """Marching cubes returning both the mesh and the pass internals.

    Corner classification is "inside iff f >= k" (values equal to k are
    inside).  Returns an empty mesh when no cell is crossed.
    """
    if cfg.region_mask is not None and not cfg.region_mask.intersects_grid(grid):
        raise ValueError("region_mask does not intersect the grid")
    k = float(cfg.isovalue)
    inside = grid.values >= k
    masks = _crossed_edges(inside)
    edges, ranks = _edge_arrays(grid, masks)
    tris, tri_cells, vid, cube = _assemble_triangles(inside, masks, ranks, grid.dims)
    if len(edges) == 0:
        mesh = IndexedMesh(
            np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), {},
            np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=bool),
        )
        data = ExtractionData(
            np.zeros((0, 4), dtype=np.int64), np.zeros(0), np.zeros(0, dtype=bool),
            tris, tri_cells, vid, cube,
        )
        return mesh, data

    use_method = None
    if cfg.method is not Method.LINEAR and cfg.region_mask is not None:
        use_method = _method_edge_mask(grid, edges, cfg)
    alphas, valid = _solve_alphas(grid, edges, k, cfg.method, cfg.boundary, use_method)
    positions = _vertex_positions(grid, edges, alphas)

    order = np.empty(len(edges), dtype=np.int64)
    order[ranks] = np.arange(len(edges))
    mesh = IndexedMesh(positions[order], tris, {}, edges[order], valid[order])
    data = ExtractionData(edges[order], alphas[order], valid[order], tris, tri_cells, vid, cube)
    return mesh, data


def extract(grid: ScalarGrid, cfg: ExtractionConfig) -> IndexedMesh:
    """Marching cubes: one vertex per crossed edge, standard 256-case topology."""
    return extract_full(grid, cfg)[0]


_METHOD_LETTER = {Method.LINEAR: "L", Method.CUBIC: "C", Method.WENO: "W"}
_CANONICAL_ORDER = (Method.LINEAR, Method.CUBIC, Method.WENO)


def extract_compare(
    grid: ScalarGrid,
    k: float,
    methods: Sequence[Method | str],
    boundary: BoundaryPolicy = BoundaryPolicy.CLAMP,
) -> IndexedMesh:
    """One topology pass, one crossing per method, pairwise variation channels.

    Geometry comes from the first listed method; channels "variation_AB"
    (world length |alpha_A - alpha_B| * h) appear for each pair in canonical
    L, C, W order, plus "variation_max" = the pointwise max over pairs.
    """
    mlist: list[Method] = []
    for m in methods:
        m = Method(m)
        if m not in mlist:
            mlist.append(m)
    if len(mlist) < 2:
        raise ValueError("extract_compare needs at least two distinct methods")

    kf = float(k)
    inside = grid.values >= kf
    masks = _crossed_edges(inside)
    edges, ranks = _edge_arrays(grid, masks)
    if len(edges) == 0:
        return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), {},
                           np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=bool))

    alphas: dict[Method, np.ndarray] = {}
    valids: dict[Method, np.ndarray] = {}
    for m in mlist:
        alphas[m], valids[m] = _solve_alphas(grid, edges, kf, m, boundary)

    first = mlist[0]
    positions = _vertex_positions(grid, edges, alphas[first])
    order = np.empty(len(edges), dtype=np.int64)
    order[ranks] = np.arange(len(edges))
    tris, _, _, _ = _assemble_triangles(inside, masks, ranks, grid.dims)

    h_edge = np.asarray(grid.spacing)[edges[:, 3]]
    channels: dict[str, np.ndarray] = {}
    ordered = [m for m in _CANONICAL_ORDER if m in mlist]
    pair_names = []
    for a_i in range(len(ordered)):
        for b_i in range(a_i + 1, len(ordered)):
            a, b = ordered[a_i], ordered[b_i]
            name = f"variation_{_METHOD_LETTER[a]}{_METHOD_LETTER[b]}"
            channels[name] = (np.abs(alphas[a] - alphas[b]) * h_edge)[order]
            pair_names.append(name)
    channels["variation_max"] = np.max(np.stack([channels[n] for n in pair_names]), axis=0)

    return IndexedMesh(positions[order], tris, channels, edges[order], valids[first][order])

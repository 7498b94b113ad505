"""Hidden-feature detection and selective cell refinement with crack sealing.

Detection marks a grid edge as suspicious when two of the three consecutive
first divided differences around it (left of, on, and right of the edge)
have strictly opposite signs — the local slope pattern of a bump or neck
passing between lattice nodes.  A cell is flagged when any of its 12 edges
is suspicious.

Refinement re-samples flagged cells that the coarse pass left empty on an
s^3 sub-lattice using the cell's tri-cubic interpolant and runs marching
cubes per subcell.  Cells the coarse pass already triangulated keep their
coarse triangles; refinement only grows into them when a refined contour
exits through a shared face with no coarse counterpart (otherwise the new
surface would end in an open ring).  Interfaces between refined and
unrefined cells are sealed exactly:

* sub-lattice values along any coarse edge observed by an unrefined cell are
  linearized, so refined boundary crossings land exactly on the coarse
  crossing vertex (weld distance zero);
* within a shared face, the union of coarse contour segments and refined
  chain edges forms closed loops; each loop is triangulated by fanning from
  its centroid.  A loop that cannot be closed is counted as a patch failure
  and left open rather than guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import mc_tables as mct
from .extract import Box, ExtractionConfig, IndexedMesh, extract_full
from .interpolants import (
    Method,
    NoCrossingError,
    DegenerateEdgeError,
    TricubicCell,
    TrilinearCell,
    WINDOW_SLACK,
    cubic_real_roots,
    gather_cell_neighborhood,
    linear_crossing,
    weno_crossing,
)
from .volume import BoundaryPolicy, ScalarGrid, resolve_indices

MAX_GROW_ROUNDS = 12

#: Slope indices used in trigger pair records: 0 = difference over [i-1,i],
#: 1 = over [i,i+1] (the edge itself), 2 = over [i+1,i+2].
SLOPE_PAIRS = ((0, 1), (0, 2), (1, 2))


class EdgeTrigger(NamedTuple):
    edge: tuple[int, int, int, int]  # (i, j, k, axis) of the suspicious edge
    pairs: tuple[tuple[int, int], ...]  # which slope pairs disagreed


@dataclass(frozen=True)
class FeatureReport:
    """Detection result: flagged cells with their triggering edges."""

    flagged_cells: np.ndarray  # (F,3) int64, lexicographically sorted
    crossed: np.ndarray  # (F,) bool: cell already triangulated by the coarse pass
    triggers: dict[tuple[int, int, int], list[EdgeTrigger]]

    @property
    def count(self) -> int:
        return len(self.flagged_cells)

    def to_json(self, patch_failures: int = 0) -> dict:
        trig = {}
        for cell, lst in self.triggers.items():
            key = ",".join(str(int(c)) for c in cell)
            trig[key] = [
                {"edge": [int(v) for v in t.edge], "pairs": [list(p) for p in t.pairs]}
                for t in lst
            ]
        return {
            "flagged": [[int(v) for v in c] for c in self.flagged_cells],
            "crossed": [bool(b) for b in self.crossed],
            "triggers": trig,
            "patch_failures": int(patch_failures),
        }


class RefinementTarget(str, Enum):
    FLAGGED_CELLS = "flagged"
    SELECTION_BOX = "box"


class SubcellSampler(str, Enum):
    TRICUBIC = "tricubic"
    TRILINEAR = "trilinear"


@dataclass(frozen=True)
class RefinementConfig:
    subdivision: int = 4
    apply_to: RefinementTarget = RefinementTarget.FLAGGED_CELLS
    sampler: SubcellSampler = SubcellSampler.TRICUBIC

    def __post_init__(self):
        object.__setattr__(self, "apply_to", RefinementTarget(self.apply_to))
        object.__setattr__(self, "sampler", SubcellSampler(self.sampler))
        s = int(self.subdivision)
        if not 2 <= s <= 8:
            raise ValueError(f"subdivision must be in [2, 8], got {self.subdivision}")
        object.__setattr__(self, "subdivision", s)


def _crossed_cells(grid: ScalarGrid, k: float) -> np.ndarray:
    """(ncx,ncy,ncz) bool: cells the coarse pass triangulates."""
    inside = grid.values >= k
    ncx, ncy, ncz = (d - 1 for d in grid.dims)
    cube = np.zeros((ncx, ncy, ncz), dtype=np.int32)
    for c, (dx, dy, dz) in enumerate(mct.CORNER_OFFSETS):
        cube |= inside[dx : dx + ncx, dy : dy + ncy, dz : dz + ncz].astype(np.int32) << c
    return mct.EDGE_TABLE[cube] != 0


def detect_hidden(
    grid: ScalarGrid, k: float, policy: BoundaryPolicy = BoundaryPolicy.CLAMP
) -> FeatureReport:
    """Flag cells whose edges show sign-alternating consecutive slopes."""
    vals = grid.values
    dims = grid.dims
    trig = []
    pair_masks = []
    for axis in range(3):
        n = dims[axis]
        h = grid.spacing[axis]
        base = np.arange(n - 1)
        f0 = np.take(vals, base, axis=axis)
        f1 = np.take(vals, base + 1, axis=axis)
        fm1 = np.take(vals, resolve_indices(base - 1, n, policy), axis=axis)
        f2 = np.take(vals, resolve_indices(base + 2, n, policy), axis=axis)
        s_l = (f0 - fm1) / h
        s_c = (f1 - f0) / h
        s_r = (f2 - f1) / h
        p01 = s_l * s_c < 0.0
        p02 = s_l * s_r < 0.0
        p12 = s_c * s_r < 0.0
        trig.append(p01 | p02 | p12)
        pair_masks.append((p01, p02, p12))

    ncx, ncy, ncz = (d - 1 for d in dims)
    flagged = np.zeros((ncx, ncy, ncz), dtype=bool)
    # OR each axis's edge-trigger lattice over the four edges per cell
    tx, ty, tz = trig
    flagged |= tx[:, :ncy, :ncz] | tx[:, 1:, :ncz] | tx[:, :ncy, 1:] | tx[:, 1:, 1:]
    flagged |= ty[:ncx, :, :ncz] | ty[1:, :, :ncz] | ty[:ncx, :, 1:] | ty[1:, :, 1:]
    flagged |= tz[:ncx, :ncy, :] | tz[1:, :ncy, :] | tz[:ncx, 1:, :] | tz[1:, 1:, :]

    cells = np.argwhere(flagged).astype(np.int64)
    crossed_lat = _crossed_cells(grid, float(k))
    crossed = crossed_lat[cells[:, 0], cells[:, 1], cells[:, 2]] if len(cells) else np.zeros(0, bool)

    triggers: dict[tuple[int, int, int], list[EdgeTrigger]] = {}
    for cell in map(tuple, cells):
        lst = []
        for e in range(12):
            ax = int(mct.EDGE_AXIS[e])
            o = mct.EDGE_ORIGIN[e]
            ei, ej, ek = cell[0] + o[0], cell[1] + o[1], cell[2] + o[2]
            if not trig[ax][ei, ej, ek]:
                continue
            pairs = tuple(
                SLOPE_PAIRS[p] for p in range(3) if pair_masks[ax][p][ei, ej, ek]
            )
            lst.append(EdgeTrigger((ei, ej, ek, ax), pairs))
        if lst:
            triggers[tuple(int(v) for v in cell)] = lst
    return FeatureReport(cells, np.asarray(crossed, dtype=bool), triggers)


@dataclass
class RecoveryResult:
    base: IndexedMesh
    recovered: IndexedMesh
    report: FeatureReport
    refined_cells: np.ndarray  # (R,3) int64, sorted
    patch_faces: int
    patch_failures: int
    rounds: int

    def __iter__(self):
        # allows `base, recovered = extract_with_recovery(...)`
        return iter((self.base, self.recovered))


class _Refiner:
    """One refinement pass: sub-lattice extraction, growth, patching, assembly."""

    def __init__(self, grid: ScalarGrid, cfg: ExtractionConfig, rcfg: RefinementConfig):
        self.grid = grid
        self.cfg = cfg
        self.rcfg = rcfg
        self.k = float(cfg.isovalue)
        self.s = rcfg.subdivision
        self.base, self.xdata = extract_full(grid, cfg)
        self.ncells = tuple(d - 1 for d in grid.dims)
        self.crossed = mct.EDGE_TABLE[self.xdata.cube_index] != 0
        self.cell_tris: dict[tuple[int, int, int], list[int]] = {}
        for t, c in enumerate(map(tuple, self.xdata.tri_cells)):
            self.cell_tris.setdefault(c, []).append(t)
        self.V0 = self.base.vertex_count
        self.refine_set: set[tuple[int, int, int]] = set()
        self.fine_spacing = np.asarray(grid.spacing) / self.s
        self.report = detect_hidden(grid, self.k, cfg.boundary)

    # -- refine-set seeding ------------------------------------------------

    def seed(self, force_cells=None) -> None:
        if force_cells is not None:
            for c in force_cells:
                c = tuple(int(v) for v in c)
                for ax in range(3):
                    if not 0 <= c[ax] < self.ncells[ax]:
                        raise ValueError(f"cell {c} out of range")
                self.refine_set.add(c)
            return
        if self.rcfg.apply_to is RefinementTarget.FLAGGED_CELLS:
            for i, cell in enumerate(map(tuple, self.report.flagged_cells)):
                if not self.report.crossed[i]:
                    self.refine_set.add(cell)
        else:
            box = self.cfg.region_mask
            if box is None:
                raise ValueError("SelectionBox refinement requires cfg.region_mask")
            origin = np.asarray(self.grid.origin)
            h = np.asarray(self.grid.spacing)
            lo = np.maximum(np.floor((np.asarray(box.min) - origin) / h).astype(int), 0)
            hi = np.minimum(
                np.ceil((np.asarray(box.max) - origin) / h).astype(int) - 1,
                np.asarray(self.ncells) - 1,
            )
            for ci in range(lo[0], hi[0] + 1):
                for cj in range(lo[1], hi[1] + 1):
                    for ck in range(lo[2], hi[2] + 1):
                        if not self.crossed[ci, cj, ck]:
                            self.refine_set.add((ci, cj, ck))

    # -- per-round state ---------------------------------------------------

    def _reset_round(self) -> None:
        self.new_positions: list[np.ndarray] = []
        self.new_meta: list[tuple] = []
        self.new_valid: list[bool] = []
        self.fine_vid: dict[tuple[int, int, int, int], int] = {}
        self.cell_subtris: dict[tuple[int, int, int], list[tuple[int, int, int]]] = {}
        self._interp_cache: dict[tuple[int, int, int], object] = {}

    def _interp(self, cell):
        it = self._interp_cache.get(cell)
        if it is None:
            if self.rcfg.sampler is SubcellSampler.TRICUBIC:
                it = TricubicCell(gather_cell_neighborhood(self.grid, cell, self.cfg.boundary))
            else:
                ci, cj, ck = cell
                it = TrilinearCell(self.grid.values[ci : ci + 2, cj : cj + 2, ck : ck + 2])
            self._interp_cache[cell] = it
        return it

    def _edge_conformed(self, edge: tuple[int, int, int, int]) -> bool:
        """True when some in-grid cell incident to this coarse edge is unrefined."""
        i, j, k, ax = edge
        lo = [i, j, k]
        for d1 in (-1, 0):
            for d2 in (-1, 0):
                c = list(lo)
                t1, t2 = ((1, 2), (0, 2), (0, 1))[ax]
                c[t1] += d1
                c[t2] += d2
                if all(0 <= c[a] < self.ncells[a] for a in range(3)):
                    if tuple(c) not in self.refine_set:
                        return True
        return False

    def _lattice(self, cell) -> np.ndarray:
        s = self.s
        lat = self._interp(cell).lattice(s)
        g = self.grid.values
        for e in range(12):
            ax = int(mct.EDGE_AXIS[e])
            o = mct.EDGE_ORIGIN[e]
            edge = (cell[0] + o[0], cell[1] + o[1], cell[2] + o[2], ax)
            if not self._edge_conformed(edge):
                continue
            f0 = g[edge[0], edge[1], edge[2]]
            hi = list(edge[:3])
            hi[ax] += 1
            f1 = g[hi[0], hi[1], hi[2]]
            line = f0 + (f1 - f0) * (np.arange(s + 1) / s)
            sel: list = [o[0] * s, o[1] * s, o[2] * s]
            sel[ax] = slice(None)
            lat[tuple(sel)] = line
        return lat

    # -- per-cell subcell extraction ----------------------------------------

    def _refine_all(self) -> None:
        self._reset_round()
        for cell in sorted(self.refine_set):
            lat = self._lattice(cell)
            inside = lat >= self.k
            if inside.all() or not inside.any():
                self.cell_subtris[cell] = []
                continue
            self.cell_subtris[cell] = self._subcell_mc(cell, lat, inside)

    def _subcell_mc(self, cell, lat, inside) -> list[tuple[int, int, int]]:
        s = self.s
        cube = np.zeros((s, s, s), dtype=np.int32)
        for c, (dx, dy, dz) in enumerate(mct.CORNER_OFFSETS):
            cube |= inside[dx : dx + s, dy : dy + s, dz : dz + s].astype(np.int32) << c
        tris: list[tuple[int, int, int]] = []
        for u, v, w in zip(*np.nonzero(mct.EDGE_TABLE[cube] != 0)):
            rows = mct.TRI_TABLE[cube[u, v, w]]
            vids: dict[int, int] = {}
            for slot in range(0, 15, 3):
                if rows[slot] < 0:
                    break
                tri = []
                for e in (rows[slot], rows[slot + 1], rows[slot + 2]):
                    e = int(e)
                    vid = vids.get(e)
                    if vid is None:
                        vid = self._subedge_vertex(cell, lat, (int(u), int(v), int(w)), e)
                        vids[e] = vid
                    tri.append(vid)
                tris.append((tri[2], tri[1], tri[0]))  # same winding flip as the coarse pass
        return tris

    def _subedge_vertex(self, cell, lat, sub, e: int) -> int:
        s = self.s
        ax = int(mct.EDGE_AXIS[e])
        o = mct.EDGE_ORIGIN[e]
        lu, lv, lw = sub[0] + o[0], sub[1] + o[1], sub[2] + o[2]
        fkey = (cell[0] * s + lu, cell[1] * s + lv, cell[2] * s + lw, ax)
        vid = self.fine_vid.get(fkey)
        if vid is not None:
            return vid

        # A fine edge riding a conformed coarse edge welds to the coarse vertex.
        t1, t2 = ((1, 2), (0, 2), (0, 1))[ax]
        local = (lu, lv, lw)
        if fkey[t1] % s == 0 and fkey[t2] % s == 0:
            coarse = [fkey[0] // s, fkey[1] // s, fkey[2] // s]
            coarse[ax] = fkey[ax] // s
            cedge = (coarse[0], coarse[1], coarse[2], ax)
            if self._edge_conformed(cedge):
                cvid = int(self.xdata.vid_lattices[ax][cedge[0], cedge[1], cedge[2]])
                if cvid >= 0:
                    self.fine_vid[fkey] = cvid
                    return cvid

        f0 = float(lat[lu, lv, lw])
        hi = [lu, lv, lw]
        hi[ax] += 1
        f1 = float(lat[hi[0], hi[1], hi[2]])
        t_sub, valid = self._solve_sub(cell, local, ax, f0, f1)
        pos = (
            np.asarray(self.grid.origin)
            + np.asarray(fkey[:3], dtype=np.float64) * self.fine_spacing
        )
        pos[ax] += t_sub * self.fine_spacing[ax]
        vid = self.V0 + len(self.new_positions)
        self.new_positions.append(pos)
        self.new_meta.append(("f",) + fkey)
        self.new_valid.append(valid)
        self.fine_vid[fkey] = vid
        return vid

    def _solve_sub(self, cell, local, ax: int, f0: float, f1: float) -> tuple[float, bool]:
        """Crossing parameter in [0,1] along one fine edge, plus validity."""
        method = self.cfg.method
        if method is not Method.LINEAR and self.cfg.region_mask is not None:
            mid = (
                np.asarray(self.grid.origin)
                + (np.asarray(cell) * self.s + np.asarray(local)) * self.fine_spacing
            )
            mid[ax] += 0.5 * self.fine_spacing[ax]
            if not bool(self.cfg.region_mask.contains(mid[None, :])[0]):
                method = Method.LINEAR

        s = self.s
        t0 = local[ax] / s
        t1 = t0 + 1.0 / s
        if method is not Method.LINEAR:
            ta, tb = ((1, 2), (0, 2), (0, 1))[ax]
            coeffs = self._interp(cell).line_coeffs(ax, local[ta] / s, local[tb] / s)
            if method is Method.CUBIC:
                c = coeffs.copy()
                c[0] -= self.k
                slack = WINDOW_SLACK / s
                roots = [
                    r for r in cubic_real_roots(c[0], c[1], c[2], c[3])
                    if t0 - slack <= r <= t1 + slack
                ]
                if roots:
                    roots.sort()
                    dedup = [roots[0]]
                    for r in roots[1:]:
                        if r - dedup[-1] > 1e-9 / s:
                            dedup.append(r)
                    r = dedup[(len(dedup) - 1) // 2]
                    return min(max((r - t0) * s, 0.0), 1.0), True
            else:  # WENO
                ts = t0 + (np.arange(5) - 2.0) / s
                vals = np.polynomial.polynomial.polyval(ts, coeffs)
                try:
                    sol, _ = weno_crossing(tuple(vals), float(self.fine_spacing[ax]), self.k)
                    if sol.valid:
                        return float(sol.alpha), True
                except (NoCrossingError, DegenerateEdgeError):
                    pass
        try:
            alpha = linear_crossing(f0, f1, self.k).alpha
            return float(alpha), method is Method.LINEAR
        except (NoCrossingError, DegenerateEdgeError):  # pragma: no cover - defensive
            return 0.5, False

    # -- interface bookkeeping ----------------------------------------------

    def _meta(self, vid: int) -> tuple:
        if vid < self.V0:
            r = self.base.edge_ids[vid]
            return ("c", int(r[0]), int(r[1]), int(r[2]), int(r[3]))
        return self.new_meta[vid - self.V0]

    def _position(self, vid: int) -> np.ndarray:
        if vid < self.V0:
            return self.base.vertices[vid]
        return self.new_positions[vid - self.V0]

    def _on_plane(self, vid: int, axis: int, plane: int) -> bool:
        m = self._meta(vid)
        if m[0] == "c":
            return m[4] != axis and m[1 + axis] == plane
        if m[0] == "f":
            return m[4] != axis and m[1 + axis] == plane * self.s
        return False

    def _face_chain_edges(self, cell, axis: int, plane: int) -> list[tuple[int, int]]:
        out = []
        for a, b, c in self.cell_subtris.get(cell, ()):
            for p, q in ((a, b), (b, c), (c, a)):
                if self._on_plane(p, axis, plane) and self._on_plane(q, axis, plane):
                    out.append((p, q))
        return out

    def _face_coarse_segments(self, ucell, axis: int, plane: int) -> list[tuple[int, int]]:
        segs = []
        for t in self.cell_tris.get(ucell, ()):
            a, b, c = (int(v) for v in self.base.triangles[t])
            for p, q in ((a, b), (b, c), (c, a)):
                if self._on_plane(p, axis, plane) and self._on_plane(q, axis, plane):
                    segs.append((p, q))
        return segs

    def _interface_faces(self):
        """(cell, axis, plane, neighbor) for refined cells facing unrefined ones."""
        for cell in sorted(self.refine_set):
            for axis in range(3):
                for dirn in (0, 1):
                    ncell = list(cell)
                    ncell[axis] += 1 if dirn else -1
                    if not 0 <= ncell[axis] < self.ncells[axis]:
                        continue
                    ncell = tuple(ncell)
                    if ncell in self.refine_set:
                        continue
                    yield cell, axis, cell[axis] + dirn, ncell

    def _propagation_candidates(self) -> set[tuple[int, int, int]]:
        grow: set[tuple[int, int, int]] = set()
        for cell, axis, plane, ncell in self._interface_faces():
            chains = self._face_chain_edges(cell, axis, plane)
            if not chains:
                continue
            if self._has_unanchored_component(chains):
                grow.add(ncell)
        return grow

    def _has_unanchored_component(self, chains) -> bool:
        adj: dict[int, list[int]] = {}
        for a, b in chains:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        seen: set[int] = set()
        for start in adj:
            if start in seen:
                continue
            stack = [start]
            comp = []
            seen.add(start)
            while stack:
                n = stack.pop()
                comp.append(n)
                for m in adj[n]:
                    if m not in seen:
                        seen.add(m)
                        stack.append(m)
            if not any(v < self.V0 for v in comp):
                return True
        return False

    # -- crack patching ------------------------------------------------------

    def _patch(self) -> tuple[list[tuple[int, int, int]], int, int]:
        patch_tris: list[tuple[int, int, int]] = []
        failures = 0
        faces = 0
        for cell, axis, plane, ncell in self._interface_faces():
            chains = self._face_chain_edges(cell, axis, plane)
            if not chains:
                continue
            segs = self._face_coarse_segments(ncell, axis, plane)
            faces += 1
            tris, fails = self._patch_face(chains, segs)
            patch_tris.extend(tris)
            failures += fails
        return patch_tris, faces, failures

    def _patch_face(self, chains, segs) -> tuple[list[tuple[int, int, int]], int]:
        edges = [(a, b, "f") for a, b in chains] + [(a, b, "c") for a, b in segs]
        adj: dict[int, list[int]] = {}
        for eid, (a, b, _) in enumerate(edges):
            adj.setdefault(a, []).append(eid)
            adj.setdefault(b, []).append(eid)
        for lst in adj.values():
            lst.sort()

        used = [False] * len(edges)
        tris: list[tuple[int, int, int]] = []
        failures = 0
        for eid0 in range(len(edges)):
            if used[eid0] or edges[eid0][2] != "c":
                continue
            # walk the loop starting along this coarse segment
            p, q, _ = edges[eid0]
            used[eid0] = True
            walk = [p, q]
            ok = True
            while walk[-1] != walk[0]:
                nxt = None
                for eid in adj[walk[-1]]:
                    if not used[eid]:
                        nxt = eid
                        break
                if nxt is None:
                    ok = False
                    break
                used[nxt] = True
                a, b, _ = edges[nxt]
                walk.append(b if a == walk[-1] else a)
                if len(walk) > 4 * len(edges) + 4:  # pragma: no cover - defensive
                    ok = False
                    break
            if not ok:
                failures += 1
                continue
            nodes = walk[:-1]
            if len(nodes) == 2:
                continue  # coarse segment exactly matched by one chain edge
            # the coarse segment was walked p->q; the patch must traverse q->p
            cycle = [nodes[0]] + nodes[1:][::-1]
            centroid = np.mean([self._position(v) for v in nodes], axis=0)
            cvid = self.V0 + len(self.new_positions)
            self.new_positions.append(centroid)
            self.new_meta.append(("p",))
            self.new_valid.append(True)
            m = len(cycle)
            for i in range(m):
                a, b = cycle[i], cycle[(i + 1) % m]
                tris.append((cvid, a, b))
        # chain-only components never get walked from a coarse seed; they are
        # cracks we could not grow shut (round cap) — count them as failures
        for eid in range(len(edges)):
            if not used[eid] and edges[eid][2] == "f":
                comp_unused = self._mark_component(edges, adj, used, eid)
                if comp_unused:
                    failures += 1
        return tris, failures

    @staticmethod
    def _mark_component(edges, adj, used, eid0) -> bool:
        stack = [eid0]
        any_marked = False
        while stack:
            eid = stack.pop()
            if used[eid]:
                continue
            used[eid] = True
            any_marked = True
            for node in edges[eid][:2]:
                stack.extend(e for e in adj[node] if not used[e])
        return any_marked

    # -- assembly ------------------------------------------------------------

    def run(self, force_cells=None) -> RecoveryResult:
        self.seed(force_cells)
        rounds = 0
        self._refine_all()
        while rounds < MAX_GROW_ROUNDS:
            grow = self._propagation_candidates()
            if not grow:
                break
            self.refine_set |= grow
            self._refine_all()
            rounds += 1

        patch_tris, patch_faces, patch_failures = self._patch()

        kept = [
            t
            for t in range(self.base.triangle_count)
            if tuple(self.xdata.tri_cells[t]) not in self.refine_set
        ]
        all_tris: list[tuple[int, int, int]] = [
            tuple(int(v) for v in self.base.triangles[t]) for t in kept
        ]
        for cell in sorted(self.refine_set):
            all_tris.extend(self.cell_subtris.get(cell, ()))
        all_tris.extend(patch_tris)

        if self.new_positions:
            vertices = np.vstack([self.base.vertices, np.asarray(self.new_positions)])
            edge_ids = np.vstack(
                [self.base.edge_ids, np.full((len(self.new_positions), 4), -1, dtype=np.int64)]
            )
            valid = np.concatenate(
                [self.base.crossing_valid, np.asarray(self.new_valid, dtype=bool)]
            )
        else:
            vertices = self.base.vertices
            edge_ids = self.base.edge_ids
            valid = self.base.crossing_valid

        tris = (
            np.asarray(all_tris, dtype=np.int64)
            if all_tris
            else np.zeros((0, 3), dtype=np.int64)
        )
        if len(tris):
            used_v = np.unique(tris)
            remap = np.full(len(vertices), -1, dtype=np.int64)
            remap[used_v] = np.arange(len(used_v))
            recovered = IndexedMesh(
                vertices[used_v], remap[tris], {}, edge_ids[used_v], valid[used_v]
            )
        else:
            recovered = IndexedMesh(
                np.zeros((0, 3)), tris, {}, np.zeros((0, 4), dtype=np.int64),
                np.zeros(0, dtype=bool),
            )

        refined = (
            np.asarray(sorted(self.refine_set), dtype=np.int64)
            if self.refine_set
            else np.zeros((0, 3), dtype=np.int64)
        )
        return RecoveryResult(
            base=self.base,
            recovered=recovered,
            report=self.report,
            refined_cells=refined,
            patch_faces=patch_faces,
            patch_failures=patch_failures,
            rounds=rounds,
        )


def extract_with_recovery(
    grid: ScalarGrid,
    cfg: ExtractionConfig,
    rcfg: RefinementConfig | None = None,
    force_cells=None,
) -> RecoveryResult:
    """Coarse extraction plus sub-lattice recovery of flagged (or boxed) cells.

    Returns the coarse mesh, the recovered mesh (coarse triangles outside the
    refined cells, sub-lattice triangles inside, interfaces sealed), the
    detection report, and patching statistics.  ``force_cells`` overrides the
    seeding rule with an explicit cell list (contour growth still applies).
    """
    if rcfg is None:
        rcfg = RefinementConfig()
    return _Refiner(grid, cfg, rcfg).run(force_cells)

"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own code paths: root
finding by bisection, point-to-triangle distance by a barycentric-region
case analysis, and connected components by breadth-first search.
"""

from __future__ import annotations

import numpy as np
import pytest

from isomarch.volume import make_field, sample_to_grid


# ---------------------------------------------------------------------------
# oracles


def bisection_root(fn, lo: float, hi: float, iters: int = 100) -> float:
    """Root of a continuous sign-changing function, to ~1 ulp of the bracket."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    assert flo * fhi < 0.0, "bisection oracle needs a sign change"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def oracle_point_triangle(p, a, b, c) -> float:
    """Closest distance point-to-triangle via Voronoi-region case analysis."""
    p, a, b, c = (np.asarray(v, dtype=np.float64) for v in (p, a, b, c))
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0.0 and d2 <= 0.0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0.0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3) if d1 != d3 else 0.0
        return float(np.linalg.norm(p - (a + t * ab)))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0.0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6) if d2 != d6 else 0.0
        return float(np.linalg.norm(p - (a + t * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        denom = (d4 - d3) + (d5 - d6)
        t = (d4 - d3) / denom if denom != 0.0 else 0.0
        return float(np.linalg.norm(p - (b + t * (c - b))))
    denom = va + vb + vc
    if denom == 0.0:  # degenerate triangle: fall back to the nearest edge
        return min(
            _oracle_point_segment(p, a, b),
            _oracle_point_segment(p, b, c),
            _oracle_point_segment(p, c, a),
        )
    v, w = vb / denom, vc / denom
    closest = a + ab * v + ac * w
    return float(np.linalg.norm(p - closest))


def _oracle_point_segment(p, a, b) -> float:
    d = b - a
    denom = d @ d
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ d / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * d)))


def brute_mesh_distance(points, mesh) -> np.ndarray:
    """Exhaustive min distance from each point to every mesh triangle."""
    verts = mesh.vertices
    tris = mesh.triangles
    out = np.empty(len(points))
    for i, p in enumerate(np.asarray(points, dtype=np.float64)):
        best = np.inf
        for t in tris:
            best = min(best, oracle_point_triangle(p, verts[t[0]], verts[t[1]], verts[t[2]]))
        out[i] = best
    return out


def bfs_components(triangles, n_vertices: int | None = None) -> int:
    """Connected components over vertices referenced by triangles (pure BFS)."""
    tris = np.asarray(triangles)
    if len(tris) == 0:
        return 0
    adj: dict[int, set[int]] = {}
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            adj.setdefault(int(u), set()).add(int(v))
            adj.setdefault(int(v), set()).add(int(u))
    seen: set[int] = set()
    comps = 0
    for start in adj:
        if start in seen:
            continue
        comps += 1
        queue = [start]
        seen.add(start)
        while queue:
            node = queue.pop()
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return comps


def fit_order(hs, errs) -> float:
    """Least-squares convergence order from step sizes and error norms."""
    hs = np.asarray(hs, dtype=np.float64)
    errs = np.asarray(errs, dtype=np.float64)
    keep = errs > 0
    return float(np.polyfit(np.log(hs[keep]), np.log(errs[keep]), 1)[0])


# ---------------------------------------------------------------------------
# shared grids (session scope: sampling is pure so reuse is safe)


@pytest.fixture(scope="session")
def tangle32():
    return sample_to_grid(make_field("tangle"), (32, 32, 32), (-1.0,) * 3, (1.0,) * 3)


@pytest.fixture(scope="session")
def teardrop32():
    return sample_to_grid(make_field("teardrop"), (32, 32, 32), (-1.0,) * 3, (1.0,) * 3)


@pytest.fixture(scope="session")
def sphere16():
    return sample_to_grid(make_field("sphere"), (16, 16, 16), (-1.0,) * 3, (1.0,) * 3)


@pytest.fixture(scope="session")
def torus64():
    return sample_to_grid(make_field("torus"), (64, 64, 64), (-1.0,) * 3, (1.0,) * 3)

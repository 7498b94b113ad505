from __future__ import annotations

import numpy as np
import pytest

from conftest import bfs_components
from isomarch.extract import (
    Box,
    ExtractionConfig,
    IndexedMesh,
    extract,
    extract_compare,
    extract_full,
)
from isomarch.interpolants import Method
from isomarch.volume import ScalarGrid, eval_analytic, make_field, sample_to_grid


def test_empty_when_isovalue_outside_range(sphere16):
    mesh = extract(sphere16, ExtractionConfig(isovalue=99.0))
    assert mesh.vertex_count == 0 and mesh.triangle_count == 0


def test_sphere_vertices_lie_near_surface(sphere16):
    f = make_field("sphere")
    mesh = extract(sphere16, ExtractionConfig(isovalue=0.0))
    assert mesh.triangle_count > 100
    residuals = np.abs(eval_analytic(f, mesh.vertices))
    # linear crossings on a 16^3 lattice: field residual bounded by O(h^2)
    h = 2.0 / 15.0
    assert residuals.max() < h * h * 2.0


def test_sphere_is_watertight_single_component(sphere16):
    mesh = extract(sphere16, ExtractionConfig(isovalue=0.0))
    tris = mesh.triangles
    # every edge shared by exactly two triangles
    edges = np.sort(
        np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1
    )
    _, counts = np.unique(edges, axis=0, return_counts=True)
    assert np.all(counts == 2)
    assert bfs_components(tris) == 1


def test_triangles_reference_valid_vertices(tangle32):
    mesh = extract(tangle32, ExtractionConfig(isovalue=0.1))
    assert mesh.triangles.min() >= 0
    assert mesh.triangles.max() < mesh.vertex_count
    # no degenerate triangles with repeated indices
    t = mesh.triangles
    assert np.all(t[:, 0] != t[:, 1])
    assert np.all(t[:, 1] != t[:, 2])
    assert np.all(t[:, 0] != t[:, 2])


def test_vertices_stay_on_their_edges(tangle32):
    mesh, data = extract_full(tangle32, ExtractionConfig(isovalue=0.1))
    origin = np.asarray(tangle32.origin)
    spacing = np.asarray(tangle32.spacing)
    for vid in np.random.default_rng(0).integers(0, mesh.vertex_count, 50):
        i, j, k, axis = data.edges[vid]
        lo = origin + np.array([i, j, k]) * spacing
        hi = lo.copy()
        hi[axis] += spacing[axis]
        p = mesh.vertices[vid]
        for a in range(3):
            if a == axis:
                assert lo[a] - 1e-12 <= p[a] <= hi[a] + 1e-12
            else:
                assert p[a] == pytest.approx(lo[a], abs=1e-12)


def test_extraction_is_deterministic(tangle32):
    cfg = ExtractionConfig(isovalue=0.1, method=Method.CUBIC)
    a = extract(tangle32, cfg)
    b = extract(tangle32, cfg)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)


def test_normals_consistent_toward_lower_values(sphere16):
    # winding convention: triangle normals face the f < k side; for a signed
    # distance sphere that is toward the center, and all faces must agree
    mesh = extract(sphere16, ExtractionConfig(isovalue=0.0))
    v = mesh.vertices
    t = mesh.triangles
    centers = v[t].mean(axis=1)
    normals = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    dots = np.einsum("ij,ij->i", normals, centers)
    assert np.all(dots < 0)


def test_methods_move_vertices_only_along_edges(tangle32):
    lin, lin_data = extract_full(tangle32, ExtractionConfig(isovalue=0.1, method=Method.LINEAR))
    for method in (Method.CUBIC, Method.WENO):
        other, other_data = extract_full(tangle32, ExtractionConfig(isovalue=0.1, method=method))
        assert np.array_equal(lin_data.edges, other_data.edges)
        assert np.array_equal(lin.triangles, other.triangles)
        delta = np.abs(lin.vertices - other.vertices)
        moved_axes = (delta > 1e-15).sum(axis=1)
        assert moved_axes.max() <= 1  # displacement confined to the edge axis
        h = max(tangle32.spacing)
        assert delta.max() <= h + 1e-12


def test_box_region_scopes_method(tangle32):
    box = Box((-0.4, -0.4, -0.4), (0.4, 0.4, 0.4))
    cfg_boxed = ExtractionConfig(isovalue=0.1, method=Method.CUBIC, region_mask=box)
    cfg_lin = ExtractionConfig(isovalue=0.1, method=Method.LINEAR)
    cfg_cubic = ExtractionConfig(isovalue=0.1, method=Method.CUBIC)
    boxed = extract(tangle32, cfg_boxed)
    lin = extract(tangle32, cfg_lin)
    cub = extract(tangle32, cfg_cubic)
    inside = np.all((boxed.vertices > -0.4) & (boxed.vertices < 0.4), axis=1)
    far_out = ~np.all((boxed.vertices > -0.45) & (boxed.vertices < 0.45), axis=1)
    # outside the box the boxed mesh reproduces the linear vertices exactly
    assert np.array_equal(boxed.vertices[far_out], lin.vertices[far_out])
    # strictly inside it reproduces the cubic ones
    assert np.allclose(boxed.vertices[inside], cub.vertices[inside], atol=1e-12)
    assert not np.array_equal(boxed.vertices[inside], lin.vertices[inside])


def test_box_helpers():
    box = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    assert box.contains((0.5, 0.5, 0.5))
    assert box.contains((1.0, 1.0, 1.0))  # inclusive
    assert not box.contains((1.1, 0.5, 0.5))
    grid = sample_to_grid(make_field("sphere"), (4, 4, 4), (-1.0,) * 3, (1.0,) * 3)
    assert box.intersects_grid(grid)
    assert not Box((5.0, 5.0, 5.0), (6.0, 6.0, 6.0)).intersects_grid(grid)


def test_compare_channels_present_and_consistent(tangle32):
    mesh = extract_compare(tangle32, 0.1, [Method.LINEAR, Method.CUBIC, Method.WENO])
    names = {"variation_LC", "variation_LW", "variation_CW", "variation_max"}
    assert names <= set(mesh.channels)
    vmax = mesh.channels["variation_max"]
    for pair in ("variation_LC", "variation_LW", "variation_CW"):
        assert np.all(vmax >= mesh.channels[pair] - 1e-15)
    # max is attained by one of the pairs
    stack = np.stack([mesh.channels[p] for p in ("variation_LC", "variation_LW", "variation_CW")])
    assert np.allclose(vmax, stack.max(axis=0))


def test_compare_geometry_uses_first_method(tangle32):
    cmp_mesh = extract_compare(tangle32, 0.1, [Method.CUBIC, Method.LINEAR])
    cub = extract(tangle32, ExtractionConfig(isovalue=0.1, method=Method.CUBIC))
    assert np.array_equal(cmp_mesh.vertices, cub.vertices)


def test_compare_rejects_short_list(tangle32):
    with pytest.raises(ValueError):
        extract_compare(tangle32, 0.1, [Method.LINEAR])


def test_crossing_valid_flags(tangle32):
    mesh = extract(tangle32, ExtractionConfig(isovalue=0.1, method=Method.WENO))
    assert mesh.crossing_valid.dtype == np.bool_
    assert mesh.crossing_valid.shape == (mesh.vertex_count,)
    # most crossings on a smooth field solve cleanly
    assert mesh.crossing_valid.mean() > 0.9


def test_mesh_validate_rejects_bad_indices():
    verts = np.zeros((3, 3))
    tris = np.array([[0, 1, 5]])
    with pytest.raises(ValueError):
        IndexedMesh(verts, tris).validate()


def test_flat_plane_exact_on_linear_field():
    grid = sample_to_grid(make_field("axis_linear"), (16, 16, 16), (0.0,) * 3, (1.0,) * 3)
    mesh = extract(grid, ExtractionConfig(isovalue=0.5))
    assert mesh.triangle_count > 0
    assert np.all(mesh.vertices[:, 0] == 0.5)

from __future__ import annotations

import numpy as np
import pytest

from isomarch.volume import (
    BoundaryPolicy,
    FieldKind,
    RawFormatError,
    ScalarGrid,
    decode_raw,
    edge_stencil,
    eval_analytic,
    extended_edge_stencil,
    load_raw,
    make_field,
    resolve_indices,
    sample_to_grid,
    save_raw,
)


def test_make_field_defaults_and_overrides():
    f = make_field("teardrop")
    assert f.kind is FieldKind.TEARDROP
    g = make_field("sphere", {"r": 0.25})
    assert g.params["r"] == 0.25


def test_make_field_rejects_unknown():
    with pytest.raises(ValueError):
        make_field("perlin")
    with pytest.raises(ValueError):
        make_field("sphere", {"nope": 1.0})


def test_analytic_values_match_formulas():
    f = make_field("tangle")
    assert eval_analytic(f, (0.0, 0.0, 0.0)) == pytest.approx(0.4)
    assert eval_analytic(f, (1.0, 0.0, 0.0)) == pytest.approx(1.0 - (1.0 - 0.4))
    s = make_field("sphere")
    r = s.params["r"]
    assert eval_analytic(s, (r, 0.0, 0.0)) == pytest.approx(0.0)
    assert eval_analytic(s, (0.0, 0.0, 0.0)) == pytest.approx(-r)


def test_sample_to_grid_layout_and_coords():
    grid = sample_to_grid(make_field("axis_linear"), (4, 3, 2), (0.0, 0.0, 0.0), (3.0, 2.0, 1.0))
    assert grid.dims == (4, 3, 2)
    assert grid.spacing == pytest.approx((1.0, 1.0, 1.0))
    # axis_linear equals the x coordinate, so values vary along axis 0 only
    assert np.allclose(grid.values[:, 0, 0], [0.0, 1.0, 2.0, 3.0])
    assert np.allclose(grid.values[1, :, :], 1.0)
    assert grid.node_position(2, 1, 1) == pytest.approx((2.0, 1.0, 1.0))


def test_value_range_and_cell_dims(tangle32):
    lo, hi = tangle32.value_range
    assert lo < 0.1 < hi
    assert tangle32.cell_dims == (31, 31, 31)


def test_raw_roundtrip_f32(tmp_path):
    grid = sample_to_grid(make_field("sphere"), (9, 9, 9), (-1.0,) * 3, (1.0,) * 3)
    path = tmp_path / "v.f32"
    save_raw(grid, path, "f32le")
    back = load_raw(path, (9, 9, 9), "f32le", origin=grid.origin, spacing=grid.spacing)
    assert np.allclose(back.values, grid.values, atol=1e-6)
    assert back.dims == grid.dims


@pytest.mark.parametrize("value_type,dtype", [("u8", np.uint8), ("u16le", "<u2")])
def test_raw_integer_types(tmp_path, value_type, dtype):
    rng = np.random.default_rng(7)
    data = rng.integers(0, 255, size=4 * 5 * 6).astype(dtype)
    path = tmp_path / "v.bin"
    path.write_bytes(data.tobytes())
    grid = load_raw(path, (4, 5, 6), value_type)
    assert grid.values.shape == (4, 5, 6)
    assert grid.data.dtype == np.float64
    assert np.array_equal(grid.data, data.astype(np.float64))


def test_raw_size_mismatch(tmp_path):
    path = tmp_path / "v.f32"
    path.write_bytes(b"\x00" * 100)
    with pytest.raises(RawFormatError):
        load_raw(path, (4, 4, 4), "f32le")
    with pytest.raises(RawFormatError):
        decode_raw(b"\x00" * 100, (4, 4, 4), "f32le")


def test_decode_raw_matches_load(tmp_path):
    grid = sample_to_grid(make_field("sphere"), (6, 6, 6), (-1.0,) * 3, (1.0,) * 3)
    path = tmp_path / "v.f32"
    save_raw(grid, path)
    byts = path.read_bytes()
    a = decode_raw(byts, (6, 6, 6), "f32le", grid.origin, grid.spacing)
    b = load_raw(path, (6, 6, 6), "f32le", grid.origin, grid.spacing)
    assert np.array_equal(a.values, b.values)


def test_resolve_indices_clamp_and_mirror():
    idx = np.array([-2, -1, 0, 5, 6, 7])
    clamped = resolve_indices(idx, 6, BoundaryPolicy.CLAMP)
    assert list(clamped) == [0, 0, 0, 5, 5, 5]
    mirrored = resolve_indices(idx, 6, BoundaryPolicy.MIRROR_ONCE)
    assert list(mirrored) == [2, 1, 0, 5, 4, 3]


def test_edge_stencil_interior_values():
    grid = sample_to_grid(make_field("axis_linear"), (8, 8, 8), (0.0,) * 3, (7.0,) * 3)
    stencil = edge_stencil(grid, (3, 4, 4, 0))
    assert stencil.values == pytest.approx((2.0, 3.0, 4.0, 5.0))
    assert stencil.h == pytest.approx(1.0)


def test_extended_stencil_has_five_points():
    grid = sample_to_grid(make_field("axis_linear"), (8, 8, 8), (0.0,) * 3, (7.0,) * 3)
    values, h = extended_edge_stencil(grid, (3, 4, 4, 0))
    assert len(values) == 5
    assert values == pytest.approx((1.0, 2.0, 3.0, 4.0, 5.0))


def test_boundary_stencils_stay_in_range():
    grid = sample_to_grid(make_field("tangle"), (8, 8, 8), (-1.0,) * 3, (1.0,) * 3)
    lo, hi = grid.value_range
    for policy in BoundaryPolicy:
        values, _ = extended_edge_stencil(grid, (0, 0, 0, 0), policy)
        assert all(lo <= v <= hi for v in values)
        values, _ = extended_edge_stencil(grid, (6, 7, 7, 0), policy)
        assert all(lo <= v <= hi for v in values)


def test_from_values_copies():
    vals = np.zeros((3, 3, 3))
    grid = ScalarGrid.from_values(vals, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    vals[0, 0, 0] = 99.0
    assert grid.values[0, 0, 0] == 0.0


def test_sample_rejects_bad_domain():
    with pytest.raises(ValueError):
        sample_to_grid(make_field("sphere"), (4, 4, 4), (1.0,) * 3, (-1.0,) * 3)
    with pytest.raises(ValueError):
        sample_to_grid(make_field("sphere"), (1, 4, 4), (-1.0,) * 3, (1.0,) * 3)

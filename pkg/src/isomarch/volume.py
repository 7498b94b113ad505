"""Uniform scalar grids: analytic field generators, raw-volume I/O, stencil access.

Everything downstream (crossing solvers, error estimates, refinement) reads its
samples through this module.  Grids are node-centered: node (i, j, k) sits at
``origin + index * spacing`` and the last node of each axis lands on the domain
corner.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

X, Y, Z = 0, 1, 2
AXES = (X, Y, Z)


class BoundaryPolicy(enum.Enum):
    """How out-of-range stencil indices are resolved at grid borders."""

    CLAMP = "clamp"
    MIRROR_ONCE = "mirror"


class FieldKind(enum.Enum):
    TANGLE = "tangle"
    TORUS = "torus"
    TORUS_LITERAL = "torus_literal"
    MARSCHNER_LOBB = "marschner_lobb"
    TEARDROP = "teardrop"
    TUBEY = "tubey"
    SPHERE = "sphere"
    AXIS_LINEAR = "axis_linear"


# Default parameters per field kind; unknown keys are rejected so that a typo
# (e.g. "r_0") cannot silently fall back to a default.
_FIELD_DEFAULTS: dict[FieldKind, dict[str, float]] = {
    FieldKind.TANGLE: {},
    FieldKind.TORUS: {"r0": 0.1, "r1": 0.3},
    FieldKind.TORUS_LITERAL: {"r0": 0.1, "r1": 0.3},
    FieldKind.MARSCHNER_LOBB: {"f_M": 6.0, "alpha_ml": 0.25},
    FieldKind.TEARDROP: {},
    FieldKind.TUBEY: {},
    FieldKind.SPHERE: {"r": 0.5},
    FieldKind.AXIS_LINEAR: {"a": 1.0, "b": 0.0, "c": 0.0, "d": 0.0},
}

#: Domain each synthetic field is normally sampled on.
DEFAULT_DOMAINS: dict[FieldKind, tuple[float, float]] = {
    FieldKind.TANGLE: (-1.0, 1.0),
    FieldKind.TORUS: (-1.0, 1.0),
    FieldKind.TORUS_LITERAL: (-1.0, 1.0),
    FieldKind.MARSCHNER_LOBB: (-1.0, 1.0),
    FieldKind.TEARDROP: (-1.0, 1.0),
    FieldKind.TUBEY: (-3.0, 3.0),
    FieldKind.SPHERE: (-1.0, 1.0),
    FieldKind.AXIS_LINEAR: (0.0, 1.0),
}


@dataclass(frozen=True)
class AnalyticField:
    """A closed-form scalar field selected by kind, with per-kind parameters."""

    kind: FieldKind
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.kind, FieldKind):
            raise ValueError(f"unknown field kind: {self.kind!r}")
        defaults = _FIELD_DEFAULTS[self.kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown parameter(s) {sorted(unknown)} for field kind {self.kind.value}"
            )
        merged = {**defaults, **{k: float(v) for k, v in self.params.items()}}
        object.__setattr__(self, "params", merged)


def make_field(kind: str | FieldKind, params: dict[str, float] | None = None) -> AnalyticField:
    """Convenience constructor accepting the kind as a string."""
    if isinstance(kind, str):
        try:
            kind = FieldKind(kind.lower())
        except ValueError:
            raise ValueError(f"unknown field kind: {kind!r}") from None
    return AnalyticField(kind, dict(params or {}))


def eval_analytic(fieldspec: AnalyticField, p) -> np.ndarray | float:
    """Evaluate the field at point(s) ``p`` with shape (..., 3).

    Returns a scalar for a single point, an array of shape (...) otherwise.
    """
    pts = np.asarray(p, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of size 3")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    prm = fieldspec.params
    kind = fieldspec.kind

    if kind is FieldKind.TANGLE:
        out = x**4 + y**4 + z**4 - (x**2 + y**2 + z**2 - 0.4)
    elif kind is FieldKind.TORUS:
        out = (prm["r1"] - np.sqrt(x**2 + y**2)) ** 2 + z**2 - prm["r0"] ** 2
    elif kind is FieldKind.TORUS_LITERAL:
        # Degenerate printed variant kept behind its own kind: the inner
        # radical is squared away, leaving a quadric rather than a torus.
        out = prm["r1"] - (x**2 + y**2) + z**2 - prm["r0"] ** 2
    elif kind is FieldKind.MARSCHNER_LOBB:
        alpha = prm["alpha_ml"]
        f_m = prm["f_M"]
        rho = np.cos(2.0 * np.pi * f_m * np.cos(np.pi * np.sqrt(x**2 + y**2) / 2.0))
        out = (1.0 - np.sin(np.pi * z / 2.0) + alpha * (1.0 + rho)) / (2.0 * (1.0 + alpha))
    elif kind is FieldKind.TEARDROP:
        out = 0.5 * x**5 + 0.5 * x**4 - y**2 - z**2
    elif kind is FieldKind.TUBEY:
        out = (
            -3.0 * x**8
            - 3.0 * y**8
            - 2.0 * z**8
            + 5.0 * x**4 * y**2 * z**2
            + 3.0 * x**2 * y**4 * z**2
            - 4.0 * (x**3 + y**3 + z**3 + 1.0)
            + (x + y + z + 1.0) ** 4
            + 1.0
        )
    elif kind is FieldKind.SPHERE:
        out = np.sqrt(x**2 + y**2 + z**2) - prm["r"]
    elif kind is FieldKind.AXIS_LINEAR:
        out = prm["a"] * x + prm["b"] * y + prm["c"] * z + prm["d"]
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown field kind: {kind!r}")

    if out.ndim == 0:
        return float(out)
    return out


class ScalarGrid:
    """Immutable uniform lattice of scalar samples.

    ``data`` is flat with x fastest (index = i + nx*(j + ny*k)); internally the
    samples are held as a read-only float64 array of shape (nx, ny, nz) so that
    ``values[i, j, k]`` addresses node (i, j, k) directly.
    """

    __slots__ = ("_dims", "_origin", "_spacing", "_values")

    def __init__(self, dims, origin, spacing, data):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 2 for d in dims):
            raise ValueError(f"dims must be three integers >= 2, got {dims}")
        origin = tuple(float(v) for v in origin)
        spacing = tuple(float(v) for v in spacing)
        if len(origin) != 3 or len(spacing) != 3:
            raise ValueError("origin and spacing must be 3-vectors")
        if any(s <= 0 for s in spacing) or not all(map(math.isfinite, spacing)):
            raise ValueError(f"spacing components must be finite and > 0, got {spacing}")
        if not all(map(math.isfinite, origin)):
            raise ValueError("origin must be finite")
        flat = np.asarray(data, dtype=np.float64).ravel()
        n = dims[0] * dims[1] * dims[2]
        if flat.size != n:
            raise ValueError(f"data length {flat.size} != nx*ny*nz = {n}")
        if not np.all(np.isfinite(flat)):
            raise ValueError("all samples must be finite")
        values = flat.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0).copy()
        values.setflags(write=False)
        self._dims = dims
        self._origin = origin
        self._spacing = spacing
        self._values = values

    @classmethod
    def from_values(cls, values, origin, spacing) -> "ScalarGrid":
        """Build from an (nx, ny, nz)-shaped array indexed as values[i, j, k]."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError("values must be a 3D array")
        grid = cls.__new__(cls)
        ScalarGrid.__init__(
            grid,
            values.shape,
            origin,
            spacing,
            values.transpose(2, 1, 0).ravel(),
        )
        return grid

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._dims

    @property
    def origin(self) -> tuple[float, float, float]:
        return self._origin

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self._spacing

    @property
    def values(self) -> np.ndarray:
        """Read-only samples of shape (nx, ny, nz), values[i, j, k]."""
        return self._values

    @property
    def data(self) -> np.ndarray:
        """Flat x-fastest copy of the samples (serialization layout)."""
        return self._values.transpose(2, 1, 0).ravel().copy()

    @property
    def cell_dims(self) -> tuple[int, int, int]:
        return (self._dims[0] - 1, self._dims[1] - 1, self._dims[2] - 1)

    @property
    def value_range(self) -> tuple[float, float]:
        return (float(self._values.min()), float(self._values.max()))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self._origin[axis] + np.arange(self._dims[axis]) * self._spacing[axis]

    def node_position(self, i: int, j: int, k: int) -> np.ndarray:
        return np.array(
            [
                self._origin[0] + i * self._spacing[0],
                self._origin[1] + j * self._spacing[1],
                self._origin[2] + k * self._spacing[2],
            ]
        )

    def __repr__(self):
        return (
            f"ScalarGrid(dims={self._dims}, origin={self._origin}, "
            f"spacing={self._spacing})"
        )


def sample_to_grid(fieldspec: AnalyticField, dims, domain_min, domain_max) -> ScalarGrid:
    """Sample an analytic field on a node-centered lattice spanning the domain."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 2 for d in dims):
        raise ValueError(f"dims must be three integers >= 2, got {dims}")
    lo = np.asarray(domain_min, dtype=np.float64)
    hi = np.asarray(domain_max, dtype=np.float64)
    if lo.shape != (3,) or hi.shape != (3,):
        raise ValueError("domain_min/domain_max must be 3-vectors")
    if not np.all(hi > lo):
        raise ValueError("domain_max must exceed domain_min componentwise")
    # linspace pins both endpoints exactly, so domain corners are sampled at
    # the exact domain bounds.
    xs = np.linspace(lo[0], hi[0], dims[0])
    ys = np.linspace(lo[1], hi[1], dims[1])
    zs = np.linspace(lo[2], hi[2], dims[2])
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    vals = eval_analytic(fieldspec, np.stack([gx, gy, gz], axis=-1))
    spacing = (hi - lo) / (np.array(dims) - 1)
    return ScalarGrid.from_values(vals, tuple(lo), tuple(spacing))


_RAW_DTYPES = {
    "u8": np.dtype("u1"),
    "u16le": np.dtype("<u2"),
    "f32le": np.dtype("<f4"),
}


class RawFormatError(ValueError):
    """Raw file does not match the declared dims/value type."""


def decode_raw(buf: bytes, dims, value_type: str, origin=(0.0, 0.0, 0.0), spacing=(1.0, 1.0, 1.0)) -> ScalarGrid:
    """Decode a headerless binary volume (x-fastest) without rescaling values."""
    if value_type not in _RAW_DTYPES:
        raise ValueError(f"value_type must be one of {sorted(_RAW_DTYPES)}, got {value_type!r}")
    dims = tuple(int(d) for d in dims)
    dtype = _RAW_DTYPES[value_type]
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(buf) != expected:
        raise RawFormatError(
            f"payload size {len(buf)} != expected {expected} for dims {dims} ({value_type})"
        )
    samples = np.frombuffer(buf, dtype=dtype).astype(np.float64)
    return ScalarGrid(dims, origin, spacing, samples)


def load_raw(path, dims, value_type: str, origin=(0.0, 0.0, 0.0), spacing=(1.0, 1.0, 1.0)) -> ScalarGrid:
    """Load a headerless binary volume from disk (see :func:`decode_raw`)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    return decode_raw(buf, dims, value_type, origin, spacing)


def save_raw(grid: ScalarGrid, path, value_type: str = "f32le") -> None:
    """Write the samples back out as a headerless binary volume (x-fastest)."""
    if value_type not in _RAW_DTYPES:
        raise ValueError(f"value_type must be one of {sorted(_RAW_DTYPES)}, got {value_type!r}")
    dtype = _RAW_DTYPES[value_type]
    flat = grid.data
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(flat.astype(dtype)).tobytes())


def resolve_indices(idx, n: int, policy: BoundaryPolicy) -> np.ndarray:
    """Map (possibly out-of-range) node indices into [0, n-1] per policy.

    CLAMP repeats the border sample; MIRROR_ONCE reflects one layer about the
    border node (index -1 -> 1, index n -> n-2) and clamps anything farther.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if policy is BoundaryPolicy.MIRROR_ONCE:
        idx = np.where(idx < 0, -idx, idx)
        idx = np.where(idx > n - 1, 2 * (n - 1) - idx, idx)
    return np.clip(idx, 0, n - 1)


def edge_axis_values(grid: ScalarGrid, axis: int, offsets, policy: BoundaryPolicy) -> list[np.ndarray]:
    """For every grid edge along ``axis`` return sample planes at the given offsets.

    Offsets are relative to the edge's low node i (offset 0 = f_i, 1 = f_{i+1},
    -1 = f_{i-1}, ...).  Each returned array has the shape of the axis' edge
    lattice (dims with the edge axis reduced by one).  Used by the vectorized
    extraction / error sweeps; single-edge access goes through edge_stencil.
    """
    n = grid.dims[axis]
    base = np.arange(n - 1)
    out = []
    for off in offsets:
        idx = resolve_indices(base + off, n, policy)
        out.append(np.take(grid.values, idx, axis=axis))
    return out


def edge_stencil(grid: ScalarGrid, edge, policy: BoundaryPolicy = BoundaryPolicy.CLAMP):
    """Gather the 4-point stencil (f_{i-1}, f_i, f_{i+1}, f_{i+2}) along an edge.

    ``edge`` is (i, j, k, axis): the edge from node (i,j,k) to its +axis
    neighbor.  Returns an interpolants.EdgeStencil.
    """
    from .interpolants import EdgeStencil

    i, j, k, axis = (int(v) for v in tuple(edge))
    if axis not in AXES:
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    node = [i, j, k]
    n = grid.dims[axis]
    if not (0 <= node[axis] <= n - 2):
        raise ValueError(f"edge low index {node[axis]} out of range for axis size {n}")
    for ax in AXES:
        if ax != axis and not (0 <= node[ax] <= grid.dims[ax] - 1):
            raise ValueError(f"edge index {node[ax]} out of range on axis {ax}")
    vals = []
    for off in (-1, 0, 1, 2):
        idx = list(node)
        idx[axis] = int(resolve_indices(node[axis] + off, n, policy))
        vals.append(float(grid.values[idx[0], idx[1], idx[2]]))
    return EdgeStencil(tuple(vals), grid.spacing[axis])


def extended_edge_stencil(grid: ScalarGrid, edge, policy: BoundaryPolicy = BoundaryPolicy.CLAMP) -> tuple[tuple[float, ...], float]:
    """Gather the 5-point window (f_{i-2} .. f_{i+2}) along an edge."""
    i, j, k, axis = (int(v) for v in tuple(edge))
    node = [i, j, k]
    n = grid.dims[axis]
    vals = []
    for off in (-2, -1, 0, 1, 2):
        idx = list(node)
        idx[axis] = int(resolve_indices(node[axis] + off, n, policy))
        vals.append(float(grid.values[idx[0], idx[1], idx[2]]))
    return tuple(vals), grid.spacing[axis]

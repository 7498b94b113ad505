"""Isosurface extraction with per-vertex error estimates and feature recovery.

The package turns a scalar grid into an indexed triangle mesh and annotates
every vertex with an estimate (and a bound) of how far the linear
edge-crossing sits from the smooth surface it approximates.  Higher-order
crossing solvers, sign-change tests for features the coarse grid skips over,
subcell refinement with crack patching, and mesh-to-mesh distance metrics
round out the toolkit.  ``isomarch.cli`` provides the command line and
``isomarch.service`` the HTTP facade.
"""

from __future__ import annotations

from .extract import (
    Box,
    ExtractionConfig,
    ExtractionData,
    IndexedMesh,
    extract,
    extract_compare,
    extract_full,
)
from .features import (
    FeatureReport,
    RecoveryResult,
    RefinementConfig,
    RefinementTarget,
    SubcellSampler,
    detect_hidden,
    extract_with_recovery,
)
from .interpolants import (
    CrossingSolution,
    Method,
    WenoDiagnostics,
    cubic_crossing,
    linear_crossing,
    solve_crossing,
    weno_crossing,
)
from .metrics import (
    DistanceReport,
    TopologyStats,
    mesh_distance,
    per_vertex_distance,
    rank_correlation,
    submesh_in_box,
    topology_stats,
)
from .meshio import read_ply, read_ply_bytes, write_obj, write_ply, write_ply_bytes
from .uncertainty import (
    APPROX_CHANNEL,
    BOUND_CHANNEL,
    FLAGS_CHANNEL,
    EdgeErrorEstimate,
    attach_error_channel,
    attach_error_channels_to_mesh,
    channel_summary,
    estimate_edge_error,
    fraction_above,
    threshold_classify,
)
from .volume import (
    AnalyticField,
    BoundaryPolicy,
    FieldKind,
    ScalarGrid,
    load_raw,
    make_field,
    sample_to_grid,
    save_raw,
)

__version__ = "0.1.0"

__all__ = [
    "APPROX_CHANNEL",
    "AnalyticField",
    "BOUND_CHANNEL",
    "BoundaryPolicy",
    "Box",
    "CrossingSolution",
    "DistanceReport",
    "EdgeErrorEstimate",
    "ExtractionConfig",
    "ExtractionData",
    "FLAGS_CHANNEL",
    "FeatureReport",
    "FieldKind",
    "IndexedMesh",
    "Method",
    "RecoveryResult",
    "RefinementConfig",
    "RefinementTarget",
    "ScalarGrid",
    "SubcellSampler",
    "TopologyStats",
    "WenoDiagnostics",
    "attach_error_channel",
    "attach_error_channels_to_mesh",
    "channel_summary",
    "cubic_crossing",
    "detect_hidden",
    "estimate_edge_error",
    "extract",
    "extract_compare",
    "extract_full",
    "extract_with_recovery",
    "fraction_above",
    "linear_crossing",
    "load_raw",
    "make_field",
    "mesh_distance",
    "per_vertex_distance",
    "rank_correlation",
    "read_ply",
    "read_ply_bytes",
    "sample_to_grid",
    "save_raw",
    "solve_crossing",
    "submesh_in_box",
    "threshold_classify",
    "topology_stats",
    "weno_crossing",
    "write_obj",
    "write_ply",
    "write_ply_bytes",
]

"""Command-line interface: synthesize volumes, extract surfaces, validate errors.

Subcommands
-----------
synth     sample an analytic field to a raw f32le volume + JSON sidecar
extract   marching cubes with optional error channels, method comparison,
          box-scoped method selection, and hidden-feature recovery
validate  compare a coarse mesh (with error channels) against a target mesh

Exit codes: 0 success, 1 error (including usage), 2 empty-result warning.
All JSON output uses 17-significant-digit floats, so reruns with identical
flags are byte-identical (no timestamps in any artifact).
"""

from __future__ import annotations

import argparse
import ast
import json
import os
import sys
from pathlib import Path

import numpy as np

from .extract import Box, ExtractionConfig, IndexedMesh, extract, extract_compare
from .features import RefinementConfig, extract_with_recovery
from .interpolants import Method
from .meshio import read_ply, write_obj, write_ply
from .metrics import per_vertex_distance, rank_correlation, topology_stats
from .uncertainty import attach_error_channels_to_mesh, channel_summary
from .volume import (
    DEFAULT_DOMAINS,
    FieldKind,
    ScalarGrid,
    load_raw,
    make_field,
    sample_to_grid,
    save_raw,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY = 2


# ---------------------------------------------------------------------------
# deterministic JSON with 17-significant-digit floats


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with every float printed via %.17g (round-trip exact)."""
    out: list[str] = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def _emit(obj, out: list, indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            out.append("null")
        else:
            text = format(v, ".17g")
            if "." not in text and "e" not in text and "n" not in text:
                text += ".0"
            out.append(text)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit 1 (2 means empty result)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read_config(path: str) -> dict[str, object]:
    """key=value lines (TOML-like scalars); '#' comments; later keys win."""
    cfg: dict[str, object] = {}
    for raw_line in Path(path).read_text().splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw_line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            cfg[key.replace("-", "_")] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            cfg[key.replace("-", "_")] = val.strip("\"'")
    return cfg


def _apply_config(args: argparse.Namespace, defaults: dict[str, object]) -> None:
    """Fill parse results: explicit flags > config file > defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, default))


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in str(text).replace("x", ",").split(",") if p != ""]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3 or any(p < 2 for p in parts):
        raise ValueError(f"dims must be one or three integers >= 2, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _parse_domain(vals) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    v = [float(x) for x in vals]
    if len(v) == 2:
        lo, hi = (v[0],) * 3, (v[1],) * 3
    elif len(v) == 6:
        lo, hi = tuple(v[:3]), tuple(v[3:])
    else:
        raise ValueError("domain takes 2 (lo hi) or 6 (lox loy loz hix hiy hiz) numbers")
    if any(l >= h for l, h in zip(lo, hi)):
        raise ValueError("domain min must be < max on every axis")
    return lo, hi  # type: ignore[return-value]


def _apply_thread_cap(threads: int | None) -> None:
    if threads is None:
        return
    n = str(max(int(threads), 1))
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = n


# ---------------------------------------------------------------------------
# synth


def _build_synth(sub) -> None:
    p = sub.add_parser("synth", help="sample an analytic field to a raw volume")
    p.add_argument("kind", choices=[k.value for k in FieldKind])
    p.add_argument("dims", help="grid points per axis: N or NX,NY,NZ")
    p.add_argument("--domain", nargs="+", default=None,
                   help="lo hi (all axes) or six numbers; default per field")
    p.add_argument("--param", action="append", default=None, metavar="NAME=VALUE",
                   help="field parameter override (repeatable)")
    p.add_argument("--out", default=None, help="output raw path (default KIND_N.f32)")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=None)


def cmd_synth(args) -> int:
    _apply_config(args, {"domain": None, "param": None, "out": None, "threads": None})
    _apply_thread_cap(args.threads)
    dims = _parse_dims(args.dims)
    params = {}
    for item in args.param or []:
        if "=" not in str(item):
            raise ValueError(f"--param expects NAME=VALUE, got {item!r}")
        name, val = str(item).split("=", 1)
        params[name.strip()] = float(val)
    field = make_field(args.kind, params)
    if args.domain is not None:
        lo, hi = _parse_domain(args.domain)
    else:
        lo_s, hi_s = DEFAULT_DOMAINS[field.kind]
        lo, hi = (lo_s,) * 3, (hi_s,) * 3
    grid = sample_to_grid(field, dims, lo, hi)
    out = Path(args.out) if args.out else Path(f"{field.kind.value}_{dims[0]}.f32")
    save_raw(grid, out, "f32le")
    sidecar = {
        "kind": field.kind.value,
        "params": dict(sorted(field.params.items())),
        "dims": list(dims),
        "domain": [list(lo), list(hi)],
        "value_type": "f32le",
    }
    Path(str(out) + ".json").write_text(dumps17(sidecar), encoding="ascii")
    print(f"wrote {out} ({dims[0]}x{dims[1]}x{dims[2]} f32le) + {out}.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract


def _build_extract(sub) -> None:
    p = sub.add_parser("extract", help="marching cubes with optional channels")
    p.add_argument("volume", help="raw volume path (VOLUME.json sidecar) or sidecar path")
    p.add_argument("-k", "--isovalue", type=float, required=True)
    p.add_argument("-m", "--method", default=None, choices=[m.value for m in Method])
    p.add_argument("--boundary", default=None, choices=["clamp", "mirror"])
    p.add_argument("--box", nargs=6, type=float, default=None,
                   metavar=("X0", "Y0", "Z0", "X1", "Y1", "Z1"),
                   help="method/refinement region (world coordinates)")
    p.add_argument("--error", action="store_true", default=None,
                   help="attach linear-model error channels")
    p.add_argument("--compare", default=None,
                   help="comma list of methods; adds variation channels")
    p.add_argument("--recover", action="store_true", default=None,
                   help="hidden-feature recovery; writes a second mesh")
    p.add_argument("--subdivision", type=int, default=None)
    p.add_argument("--sampler", default=None, choices=["tricubic", "trilinear"])
    p.add_argument("--apply-to", dest="apply_to", default=None, choices=["flagged", "box"])
    p.add_argument("--format", dest="mesh_format", default=None, choices=["ply", "obj"])
    p.add_argument("--dims", default=None, help="override dims for sidecar-less raws")
    p.add_argument("--domain", nargs="+", default=None)
    p.add_argument("--value-type", dest="value_type", default=None,
                   choices=["f32le", "u8", "u16le"])
    p.add_argument("--out", default=None, help="output stem (default volume stem)")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=None)


_EXTRACT_DEFAULTS = {
    "method": "linear", "boundary": "clamp", "box": None, "error": False,
    "compare": None, "recover": False, "subdivision": 4, "sampler": "tricubic",
    "apply_to": "flagged", "mesh_format": "ply", "dims": None, "domain": None,
    "value_type": "f32le", "out": None, "threads": None,
}


def _load_volume(args) -> ScalarGrid:
    path = Path(args.volume)
    sidecar_path = path if path.suffix == ".json" else Path(str(path) + ".json")
    if sidecar_path.exists():
        side = json.loads(sidecar_path.read_text())
        dims = tuple(side["dims"])
        lo, hi = (tuple(side["domain"][0]), tuple(side["domain"][1]))
        value_type = side.get("value_type", "f32le")
        raw_path = path if path.suffix != ".json" else Path(str(path)[: -len(".json")])
    elif args.dims is not None:
        dims = _parse_dims(args.dims)
        lo, hi = _parse_domain(args.domain) if args.domain else ((0.0,) * 3, tuple(float(d - 1) for d in dims))
        value_type = args.value_type
        raw_path = path
    else:
        raise FileNotFoundError(
            f"no sidecar {sidecar_path} and no --dims given for raw volume {path}"
        )
    spacing = tuple((h - l) / (d - 1) for l, h, d in zip(lo, hi, dims))
    return load_raw(raw_path, dims, value_type, origin=lo, spacing=spacing)


def _write_mesh(mesh: IndexedMesh, stem: Path, mesh_format: str) -> list[Path]:
    if mesh_format == "obj":
        return write_obj(mesh, stem.with_suffix(".obj"))
    out = stem.with_suffix(".ply")
    write_ply(mesh, out)
    return [out]


def cmd_extract(args) -> int:
    _apply_config(args, _EXTRACT_DEFAULTS)
    _apply_thread_cap(args.threads)
    grid = _load_volume(args)
    k = float(args.isovalue)
    from .volume import BoundaryPolicy

    boundary = BoundaryPolicy.CLAMP if args.boundary == "clamp" else BoundaryPolicy.MIRROR_ONCE
    box = None
    if args.box is not None:
        b = [float(v) for v in args.box]
        box = Box((b[0], b[1], b[2]), (b[3], b[4], b[5]))
    cfg = ExtractionConfig(isovalue=k, method=args.method, boundary=boundary, region_mask=box)

    summary: dict = {"isovalue": k, "method": str(Method(args.method).value)}
    recovery = None
    if args.compare:
        methods = [m.strip() for m in str(args.compare).split(",") if m.strip()]
        mesh = extract_compare(grid, k, methods, boundary)
        summary["compare"] = [str(Method(m).value) for m in methods]
    elif args.recover:
        rcfg = RefinementConfig(
            subdivision=args.subdivision, apply_to=args.apply_to, sampler=args.sampler
        )
        recovery = extract_with_recovery(grid, cfg, rcfg)
        mesh = recovery.base
    else:
        mesh = extract(grid, cfg)
    if args.error:
        mesh = attach_error_channels_to_mesh(grid, mesh, k, boundary)

    stem = Path(args.out) if args.out else Path(args.volume).with_suffix("")
    written = _write_mesh(mesh, stem, args.mesh_format)
    if recovery is not None:
        written += _write_mesh(
            recovery.recovered, stem.with_name(stem.name + "_recovered"), args.mesh_format
        )
        summary["recovery"] = {
            "refined_cells": int(len(recovery.refined_cells)),
            "patch_faces": int(recovery.patch_faces),
            "patch_failures": int(recovery.patch_failures),
            "growth_rounds": int(recovery.rounds),
            "flagged_cells": int(recovery.report.count),
            "recovered_topology": topology_stats(recovery.recovered).as_dict(),
        }

    summary["vertex_count"] = mesh.vertex_count
    summary["triangle_count"] = mesh.triangle_count
    summary["topology"] = topology_stats(mesh).as_dict()
    summary["channels"] = {
        name: channel_summary(values) for name, values in sorted(mesh.channels.items())
    }
    summary["files"] = [str(p) for p in written]
    report_path = stem.with_suffix(".json")
    report_path.write_text(dumps17(summary), encoding="ascii")
    print(f"wrote {', '.join(str(p) for p in written)} and {report_path}")
    if mesh.triangle_count == 0:
        print("warning: extraction produced an empty mesh", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def _build_validate(sub) -> None:
    p = sub.add_parser("validate", help="compare estimated error channels vs a target mesh")
    p.add_argument("coarse", help="coarse mesh PLY (with error channels)")
    p.add_argument("target", help="high-resolution target mesh PLY")
    p.add_argument("--channel", default=None, help="estimate channel (default approx_error)")
    p.add_argument("--bound-channel", dest="bound_channel", default=None)
    p.add_argument("--out", default=None, help="write the JSON report here as well")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=None)


def cmd_validate(args) -> int:
    _apply_config(args, {"channel": "approx_error", "bound_channel": "bound_error",
                         "out": None, "threads": None})
    _apply_thread_cap(args.threads)
    coarse = read_ply(args.coarse)
    target = read_ply(args.target)
    if args.channel not in coarse.channels:
        raise ValueError(
            f"channel {args.channel!r} not in coarse mesh "
            f"(has: {sorted(coarse.channels) or 'none'})"
        )
    measured = per_vertex_distance(coarse, target)
    approx = coarse.channels[args.channel]
    rms = lambda x: float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0  # noqa: E731
    report = {
        "rms_measured": rms(measured),
        "rms_approx": rms(approx),
        "spearman": rank_correlation(approx, measured),
    }
    if args.bound_channel in coarse.channels:
        report["rms_bound"] = rms(coarse.channels[args.bound_channel])
    text = dumps17(report)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="isomarch", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    _build_synth(sub)
    _build_extract(sub)
    _build_validate(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"synth": cmd_synth, "extract": cmd_extract, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"isomarch: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

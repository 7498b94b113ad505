"""HTTP facade: register scalar fields, run extractions, stream mesh blobs.

Fields and extraction reports are content-addressed: registering the same
payload twice yields the same id, and repeating an extraction request returns
the cached report bytes unchanged.  The registry lives in process memory;
mesh blobs are written to a disk cache directory.  No authentication.

Run with ``uvicorn isomarch.service:app``.  The OpenAPI document is served
at ``/spec``.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel

from . import __version__
from .extract import Box, ExtractionConfig, extract, extract_compare
from .features import RefinementConfig, extract_with_recovery
from .interpolants import Method
from .meshio import write_ply_bytes
from .metrics import topology_stats
from .uncertainty import attach_error_channels_to_mesh, channel_summary, fraction_above
from .volume import (
    DEFAULT_DOMAINS,
    BoundaryPolicy,
    RawFormatError,
    ScalarGrid,
    decode_raw,
    make_field,
    sample_to_grid,
)

MAX_FIELD_BYTES = 512 * 1024 * 1024
LARGE_DIMS_LIMIT = 256 ** 3
ISOVALUE_SLACK = 0.1  # fraction of the value span allowed outside the range


@dataclass
class FieldRecord:
    grid: ScalarGrid
    source: str
    kind: Optional[str] = None
    params: dict = field(default_factory=dict)

    def describe(self, field_id: str) -> dict:
        lo, hi = self.grid.value_range
        return {
            "id": field_id,
            "dims": [int(d) for d in self.grid.dims],
            "origin": [float(v) for v in self.grid.origin],
            "spacing": [float(v) for v in self.grid.spacing],
            "value_range": [float(lo), float(hi)],
            "source": self.source,
            "kind": self.kind,
        }


class BoxBody(BaseModel):
    min: tuple[float, float, float]
    max: tuple[float, float, float]


class ExtractBody(BaseModel):
    field_id: str
    k: float
    method: str = "linear"
    error: bool = False
    compare: Optional[list[str]] = None
    box: Optional[BoxBody] = None
    recover: bool = False
    subdivision: int = 4
    sampler: str = "tricubic"
    apply_to: str = "flagged"
    boundary: str = "clamp"
    allow_large: bool = False


def _hash_bytes(*parts: bytes) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part)
    return digest.hexdigest()[:24]


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def create_app(blob_dir: Optional[str] = None, max_field_bytes: int = MAX_FIELD_BYTES) -> FastAPI:
    app = FastAPI(
        title="isomarch service",
        version=__version__,
        openapi_url="/spec",
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    blobs = Path(blob_dir) if blob_dir else Path(tempfile.mkdtemp(prefix="isomarch-blobs-"))
    blobs.mkdir(parents=True, exist_ok=True)
    fields: dict[str, FieldRecord] = {}
    reports: dict[str, dict] = {}  # report_id -> {"bytes":, "channels": {name: array}}
    request_cache: dict[str, str] = {}  # request hash -> report_id
    workers = threading.Semaphore(os.cpu_count() or 1)
    lock = threading.Lock()

    def _store_blob(payload: bytes) -> str:
        blob_id = _hash_bytes(payload)
        path = blobs / f"{blob_id}.bin"
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(payload)
            tmp.replace(path)
        return blob_id

    # ------------------------------------------------------------------ fields

    @app.post("/fields", status_code=201)
    async def register_field(request: Request) -> dict:
        content_type = request.headers.get("content-type", "")
        declared = request.headers.get("content-length")
        if declared is not None and int(declared) > max_field_bytes:
            raise HTTPException(413, "field payload exceeds the size cap")
        payload = await request.body()
        if len(payload) > max_field_bytes:
            raise HTTPException(413, "field payload exceeds the size cap")

        if content_type.startswith("application/octet-stream"):
            record, field_id = _register_raw(request, payload)
        else:
            record, field_id = _register_analytic(payload)
        with lock:
            fields.setdefault(field_id, record)
        return fields[field_id].describe(field_id)

    def _register_analytic(payload: bytes) -> tuple[FieldRecord, str]:
        try:
            body = json.loads(payload.decode())
            kind = body["kind"]
            dims = tuple(int(d) for d in body["dims"])
            params = {str(n): float(v) for n, v in (body.get("params") or {}).items()}
            fieldspec = make_field(kind, params)
            if "domain" in body and body["domain"] is not None:
                lo = tuple(float(v) for v in body["domain"][0])
                hi = tuple(float(v) for v in body["domain"][1])
            else:
                lo_s, hi_s = DEFAULT_DOMAINS[fieldspec.kind]
                lo, hi = (lo_s,) * 3, (hi_s,) * 3
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise HTTPException(400, f"malformed field payload: {exc}")
        if len(dims) != 3 or any(d < 2 for d in dims):
            raise HTTPException(400, "dims must be three integers >= 2")
        if int(np.prod(dims)) * 4 > max_field_bytes:
            raise HTTPException(413, "requested field exceeds the size cap")
        grid = sample_to_grid(fieldspec, dims, lo, hi)
        key = _canonical(
            {
                "kind": fieldspec.kind.value,
                "params": dict(sorted(fieldspec.params.items())),
                "dims": list(dims),
                "domain": [list(lo), list(hi)],
            }
        )
        record = FieldRecord(
            grid=grid, source="analytic", kind=fieldspec.kind.value, params=fieldspec.params
        )
        return record, _hash_bytes(key)

    def _register_raw(request: Request, payload: bytes) -> tuple[FieldRecord, str]:
        try:
            dims = tuple(int(d) for d in request.query_params["dims"].split(","))
            domain_param = request.query_params.get("domain")
            value_type = request.query_params.get("value_type", "f32le")
            if domain_param:
                nums = [float(v) for v in domain_param.split(",")]
                lo, hi = tuple(nums[:3]), tuple(nums[3:])
            else:
                lo = (0.0, 0.0, 0.0)
                hi = tuple(float(d - 1) for d in dims)
        except (KeyError, ValueError) as exc:
            raise HTTPException(400, f"malformed raw-field parameters: {exc}")
        if len(dims) != 3 or any(d < 2 for d in dims) or len(hi) != 3:
            raise HTTPException(400, "dims must be three integers >= 2")
        itemsize = {"f32le": 4, "u16le": 2, "u8": 1}.get(value_type)
        if itemsize is None:
            raise HTTPException(400, f"unknown value_type {value_type!r}")
        if len(payload) != int(np.prod(dims)) * itemsize:
            raise HTTPException(
                400,
                f"payload holds {len(payload)} bytes; dims {dims} with "
                f"{value_type} need {int(np.prod(dims)) * itemsize}",
            )
        spacing = tuple((h - l) / (d - 1) for l, h, d in zip(lo, hi, dims))
        try:
            grid = decode_raw(payload, dims, value_type, lo, spacing)
        except RawFormatError as exc:
            raise HTTPException(400, str(exc))
        key = _canonical(
            {"dims": list(dims), "domain": [list(lo), list(hi)], "value_type": value_type}
        )
        return FieldRecord(grid=grid, source="raw"), _hash_bytes(payload, key)

    @app.get("/fields")
    def list_fields() -> list:
        with lock:
            return [record.describe(fid) for fid, record in fields.items()]

    # ----------------------------------------------------------------- extract

    @app.post("/extract")
    def run_extract(body: ExtractBody) -> Response:
        request_key = _hash_bytes(_canonical(body.model_dump()))
        with lock:
            cached = request_cache.get(request_key)
            if cached is not None:
                return Response(reports[cached]["bytes"], media_type="application/json")
            record = fields.get(body.field_id)
        if record is None:
            raise HTTPException(404, f"unknown field {body.field_id!r}")
        grid = record.grid

        if int(np.prod(grid.dims)) > LARGE_DIMS_LIMIT and not body.allow_large:
            raise HTTPException(422, "field exceeds 256^3 cells; pass allow_large to proceed")
        try:
            method = Method(body.method)
        except ValueError:
            raise HTTPException(422, f"unknown method {body.method!r}")
        compare_methods = None
        if body.compare:
            try:
                compare_methods = [Method(m) for m in body.compare]
            except ValueError as exc:
                raise HTTPException(422, f"invalid compare list: {exc}")
            if len(compare_methods) < 2:
                raise HTTPException(422, "compare needs at least two methods")
        boundary = {
            "clamp": BoundaryPolicy.CLAMP,
            "mirror": BoundaryPolicy.MIRROR_ONCE,
        }.get(body.boundary)
        if boundary is None:
            raise HTTPException(422, f"unknown boundary policy {body.boundary!r}")
        box = None
        if body.box is not None:
            box = Box(tuple(body.box.min), tuple(body.box.max))
            if any(a > b for a, b in zip(box.min, box.max)):
                raise HTTPException(422, "box min must not exceed box max")
            if not box.intersects_grid(grid):
                raise HTTPException(422, "box lies entirely outside the grid")
        lo, hi = grid.value_range
        slack = ISOVALUE_SLACK * max(hi - lo, 1e-300)
        if not (lo - slack <= body.k <= hi + slack):
            raise HTTPException(
                422, f"isovalue {body.k} is outside the field range [{lo}, {hi}]"
            )
        try:
            rcfg = RefinementConfig(
                subdivision=body.subdivision, apply_to=body.apply_to, sampler=body.sampler
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc))

        with workers:
            t_start = time.perf_counter()
            cfg = ExtractionConfig(
                isovalue=body.k, method=method, boundary=boundary, region_mask=box
            )
            recovery = None
            if compare_methods is not None:
                mesh = extract_compare(grid, body.k, compare_methods, boundary)
            elif body.recover:
                recovery = extract_with_recovery(grid, cfg, rcfg)
                mesh = recovery.base
            else:
                mesh = extract(grid, cfg)
            extract_ms = 1000.0 * (time.perf_counter() - t_start)
            if body.error:
                mesh = attach_error_channels_to_mesh(grid, mesh, body.k, boundary)
            total_ms = 1000.0 * (time.perf_counter() - t_start)

        report_id = request_key
        mesh_blob = _store_blob(write_ply_bytes(mesh))
        report = {
            "report_id": report_id,
            "field_id": body.field_id,
            "isovalue": body.k,
            "method": method.value,
            "compare": [m.value for m in compare_methods] if compare_methods else None,
            "mesh_blob": mesh_blob,
            "recovered_blob": None,
            "vertex_count": mesh.vertex_count,
            "triangle_count": mesh.triangle_count,
            "topology": topology_stats(mesh).as_dict(),
            "recovery": None,
            "channels": {
                name: channel_summary(values) for name, values in sorted(mesh.channels.items())
            },
            "timing_ms": {"extract": extract_ms, "total": total_ms},
        }
        if recovery is not None:
            recovered = recovery.recovered
            if body.error:
                recovered = attach_error_channels_to_mesh(grid, recovered, body.k, boundary)
            report["recovered_blob"] = _store_blob(write_ply_bytes(recovered))
            report["recovery"] = {
                "refined_cells": int(len(recovery.refined_cells)),
                "patch_faces": int(recovery.patch_faces),
                "patch_failures": int(recovery.patch_failures),
                "growth_rounds": int(recovery.rounds),
                "flagged_cells": int(recovery.report.count),
                "recovered_topology": topology_stats(recovery.recovered).as_dict(),
            }
        payload = json.dumps(report, allow_nan=False).encode()
        with lock:
            reports[report_id] = {
                "bytes": payload,
                "channels": {name: values.copy() for name, values in mesh.channels.items()},
            }
            request_cache[request_key] = report_id
        return Response(payload, media_type="application/json")

    # --------------------------------------------------------------------- cdf

    @app.get("/cdf/{report_id}")
    def get_cdf(report_id: str, channel: str = "approx_error", threshold: float = 0.0) -> dict:
        with lock:
            entry = reports.get(report_id)
        if entry is None:
            raise HTTPException(404, f"unknown report {report_id!r}")
        values = entry["channels"].get(channel)
        if values is None:
            raise HTTPException(
                404, f"report has no channel {channel!r} (has: {sorted(entry['channels'])})"
            )
        summary = channel_summary(values)
        return {
            "report_id": report_id,
            "channel": channel,
            "threshold": threshold,
            "cdf": summary["cdf"],
            "fraction_above": fraction_above(values, threshold),
        }

    # ------------------------------------------------------------------- blobs

    @app.get("/blobs/{blob_id}")
    def get_blob(blob_id: str):
        if not all(c in "0123456789abcdef" for c in blob_id):
            raise HTTPException(404, "unknown blob")
        path = blobs / f"{blob_id}.bin"
        if not path.exists():
            raise HTTPException(404, "unknown blob")
        return FileResponse(path, media_type="application/octet-stream")

    return app


app = create_app()

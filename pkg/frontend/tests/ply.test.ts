import { describe, expect, it } from "vitest";

import { PlyParseError, parsePly } from "../src/ply.js";

/** Binary little-endian PLY writer mirroring the service's layout. */
function buildPly(
  vertices: number[][],
  propNames: string[],
  faces: number[][],
): ArrayBuffer {
  const headerLines = [
    "ply",
    "format binary_little_endian 1.0",
    "comment synthetic test mesh",
    `element vertex ${vertices.length}`,
    ...propNames.map((name) => `property float ${name}`),
    `element face ${faces.length}`,
    "property list uchar int vertex_indices",
    "end_header",
  ];
  const header = new TextEncoder().encode(headerLines.join("\n") + "\n");
  const faceBytes = faces.reduce((total, face) => total + 1 + 4 * face.length, 0);
  const body = new ArrayBuffer(4 * propNames.length * vertices.length + faceBytes);
  const view = new DataView(body);
  let off = 0;
  for (const vertex of vertices) {
    for (const value of vertex) {
      view.setFloat32(off, value, true);
      off += 4;
    }
  }
  for (const face of faces) {
    view.setUint8(off, face.length);
    off += 1;
    for (const idx of face) {
      view.setInt32(off, idx, true);
      off += 4;
    }
  }
  const out = new Uint8Array(header.length + body.byteLength);
  out.set(header, 0);
  out.set(new Uint8Array(body), header.length);
  return out.buffer;
}

const QUAD_VERTS = [
  [0, 0, 0, 0.5],
  [1, 0, 0, 0.25],
  [1, 1, 0, 0.125],
  [0, 1, 0, 1.0],
];
const QUAD_FACES = [
  [0, 1, 2],
  [0, 2, 3],
];

describe("binary PLY parser", () => {
  it("parses positions, channels and faces", () => {
    const buf = buildPly(QUAD_VERTS, ["x", "y", "z", "approx_error"], QUAD_FACES);
    const mesh = parsePly(buf);
    expect(mesh.vertexCount).toBe(4);
    expect(mesh.triangleCount).toBe(2);
    expect(Array.from(mesh.positions.slice(0, 3))).toEqual([0, 0, 0]);
    expect(Array.from(mesh.positions.slice(6, 9))).toEqual([1, 1, 0]);
    expect(Object.keys(mesh.channels)).toEqual(["approx_error"]);
    expect(Array.from(mesh.channels.approx_error)).toEqual([0.5, 0.25, 0.125, 1.0]);
    expect(Array.from(mesh.indices)).toEqual([0, 1, 2, 0, 2, 3]);
  });

  it("handles scrambled property order", () => {
    const verts = QUAD_VERTS.map(([x, y, z, e]) => [e, z, x, y]);
    const mesh = parsePly(buildPly(verts, ["approx_error", "z", "x", "y"], QUAD_FACES));
    expect(Array.from(mesh.positions.slice(3, 6))).toEqual([1, 0, 0]);
    expect(Array.from(mesh.channels.approx_error)).toEqual([0.5, 0.25, 0.125, 1.0]);
  });

  it("parses an empty mesh", () => {
    const mesh = parsePly(buildPly([], ["x", "y", "z"], []));
    expect(mesh.vertexCount).toBe(0);
    expect(mesh.triangleCount).toBe(0);
  });

  it("rejects non-PLY input", () => {
    const junk = new TextEncoder().encode("OFF\n3 1 0\n").buffer;
    expect(() => parsePly(junk as ArrayBuffer)).toThrow(PlyParseError);
  });

  it("rejects ascii format", () => {
    const text = "ply\nformat ascii 1.0\nelement vertex 0\nelement face 0\nend_header\n";
    expect(() => parsePly(new TextEncoder().encode(text).buffer as ArrayBuffer)).toThrow(
      /unsupported format/,
    );
  });

  it("rejects truncated bodies", () => {
    const buf = buildPly(QUAD_VERTS, ["x", "y", "z", "approx_error"], QUAD_FACES);
    expect(() => parsePly(buf.slice(0, buf.byteLength - 5))).toThrow(/truncated/);
  });

  it("rejects out-of-range face indices", () => {
    const buf = buildPly(QUAD_VERTS, ["x", "y", "z", "approx_error"], [[0, 1, 9]]);
    expect(() => parsePly(buf)).toThrow(/references vertex 9/);
  });

  it("rejects non-triangle faces", () => {
    const buf = buildPly(QUAD_VERTS, ["x", "y", "z", "approx_error"], [[0, 1, 2, 3]]);
    expect(() => parsePly(buf)).toThrow(/expected 3/);
  });

  it("rejects meshes without coordinates", () => {
    const buf = buildPly([[1], [2]], ["intensity"], []);
    expect(() => parsePly(buf)).toThrow(/missing x/);
  });
});

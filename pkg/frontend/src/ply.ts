/**
 * Binary little-endian PLY parser for the meshes the service streams.
 *
 * The service writes every vertex property as float32 (x, y, z followed by
 * the per-vertex channels) and every face as a uchar count plus three int32
 * indices.  The parser accepts that layout and rejects anything else with a
 * PlyParseError instead of returning half a mesh.
 */

export class PlyParseError extends Error {}

export interface ParsedMesh {
  vertexCount: number;
  triangleCount: number;
  /** xyz triples, length 3 * vertexCount. */
  positions: Float32Array;
  /** Per-vertex scalar channels keyed by property name. */
  channels: Record<string, Float32Array>;
  /** Vertex indices, length 3 * triangleCount. */
  indices: Uint32Array;
}

interface Header {
  vertexCount: number;
  faceCount: number;
  vertexProps: string[];
  bodyOffset: number;
}

const HEADER_LIMIT = 64 * 1024;

function readHeader(buf: ArrayBuffer): Header {
  const probe = new Uint8Array(buf, 0, Math.min(buf.byteLength, HEADER_LIMIT));
  let text = "";
  for (let i = 0; i < probe.length; i++) text += String.fromCharCode(probe[i]);
  const endTag = "end_header\n";
  const end = text.indexOf(endTag);
  if (end < 0) throw new PlyParseError("missing end_header");
  const lines = text.slice(0, end).split("\n");
  if (lines[0] !== "ply") throw new PlyParseError("not a PLY file");

  let format: string | null = null;
  let vertexCount = -1;
  let faceCount = -1;
  const vertexProps: string[] = [];
  let element: string | null = null;

  for (const line of lines.slice(1)) {
    const parts = line.trim().split(/\s+/);
    switch (parts[0]) {
      case "format":
        format = parts[1];
        break;
      case "comment":
        break;
      case "element":
        element = parts[1];
        if (element === "vertex") vertexCount = Number(parts[2]);
        else if (element === "face") faceCount = Number(parts[2]);
        else throw new PlyParseError(`unsupported element ${element}`);
        break;
      case "property":
        if (element === "vertex") {
          if (parts[1] !== "float" && parts[1] !== "float32") {
            throw new PlyParseError(`vertex property ${parts[2]} is not float32`);
          }
          vertexProps.push(parts[2]);
        } else if (element === "face") {
          if (parts[1] !== "list") throw new PlyParseError("face property must be a list");
        }
        break;
      default:
        break;
    }
  }
  if (format !== "binary_little_endian") {
    throw new PlyParseError(`unsupported format ${format}`);
  }
  if (!Number.isInteger(vertexCount) || vertexCount < 0) {
    throw new PlyParseError("missing vertex element");
  }
  if (!Number.isInteger(faceCount) || faceCount < 0) {
    throw new PlyParseError("missing face element");
  }
  for (const name of ["x", "y", "z"]) {
    if (!vertexProps.includes(name)) throw new PlyParseError(`missing ${name} property`);
  }
  return { vertexCount, faceCount, vertexProps, bodyOffset: end + endTag.length };
}

export function parsePly(buf: ArrayBuffer): ParsedMesh {
  const header = readHeader(buf);
  const { vertexCount, faceCount, vertexProps } = header;
  const stride = vertexProps.length;
  const vertexBytes = 4 * stride * vertexCount;
  const faceBytes = (1 + 12) * faceCount;
  if (header.bodyOffset + vertexBytes + faceBytes > buf.byteLength) {
    throw new PlyParseError("truncated body");
  }

  // copy the vertex block so the Float32Array view is 4-byte aligned no
  // matter where the header ended
  const block = new Float32Array(buf.slice(header.bodyOffset, header.bodyOffset + vertexBytes));
  const positions = new Float32Array(3 * vertexCount);
  const channels: Record<string, Float32Array> = {};
  const channelNames = vertexProps.filter((p) => p !== "x" && p !== "y" && p !== "z");
  for (const name of channelNames) channels[name] = new Float32Array(vertexCount);

  for (let p = 0; p < stride; p++) {
    const name = vertexProps[p];
    const axis = name === "x" ? 0 : name === "y" ? 1 : name === "z" ? 2 : -1;
    if (axis >= 0) {
      for (let i = 0; i < vertexCount; i++) positions[3 * i + axis] = block[i * stride + p];
    } else {
      const out = channels[name];
      for (let i = 0; i < vertexCount; i++) out[i] = block[i * stride + p];
    }
  }

  const view = new DataView(buf, header.bodyOffset + vertexBytes);
  const indices = new Uint32Array(3 * faceCount);
  let off = 0;
  for (let f = 0; f < faceCount; f++) {
    const count = view.getUint8(off);
    off += 1;
    if (count !== 3) throw new PlyParseError(`face ${f} has ${count} vertices, expected 3`);
    for (let c = 0; c < 3; c++) {
      const idx = view.getInt32(off, true);
      off += 4;
      if (idx < 0 || idx >= vertexCount) {
        throw new PlyParseError(`face ${f} references vertex ${idx} of ${vertexCount}`);
      }
      indices[3 * f + c] = idx;
    }
  }

  return { vertexCount, triangleCount: faceCount, positions, channels, indices };
}

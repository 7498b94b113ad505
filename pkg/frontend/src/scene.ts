/**
 * Three.js scene assembly: parsed meshes become BufferGeometry objects,
 * the comparison view overlays the recovered surface translucently over
 * the base, and threshold drags swap the color attribute in place.
 */

import * as THREE from "three";

import type { ParsedMesh } from "./ply.js";

export const BASE_BLUE = new THREE.Color(0.12, 0.31, 0.62);
export const OVERLAY_ORANGE = new THREE.Color(0.95, 0.55, 0.22);

export interface SurfaceOptions {
  name?: string;
  /** Per-vertex rgb triples; switches the material to vertex colors. */
  colors?: Float32Array;
  color?: THREE.Color;
  opacity?: number;
}

export function surfaceObject(mesh: ParsedMesh, options: SurfaceOptions = {}): THREE.Mesh {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(mesh.positions, 3));
  geometry.setIndex(new THREE.BufferAttribute(mesh.indices, 1));
  if (options.colors !== undefined) {
    geometry.setAttribute("color", new THREE.BufferAttribute(options.colors, 3));
  }
  const opacity = options.opacity ?? 1.0;
  const material = new THREE.MeshBasicMaterial({
    vertexColors: options.colors !== undefined,
    color: options.colors !== undefined ? new THREE.Color(1, 1, 1) : (options.color ?? BASE_BLUE),
    transparent: opacity < 1.0,
    opacity,
    side: THREE.DoubleSide,
  });
  const object = new THREE.Mesh(geometry, material);
  object.name = options.name ?? "surface";
  return object;
}

/** Replace (or install) the per-vertex color attribute of a surface. */
export function recolorSurface(object: THREE.Mesh, colors: Float32Array): void {
  const geometry = object.geometry;
  const attr = new THREE.BufferAttribute(colors, 3);
  attr.needsUpdate = true;
  geometry.setAttribute("color", attr);
  const material = object.material as THREE.MeshBasicMaterial;
  material.vertexColors = true;
  material.color.set(1, 1, 1);
  material.needsUpdate = true;
}

export interface OverlayScene {
  scene: THREE.Scene;
  base: THREE.Mesh;
  overlay: THREE.Mesh | null;
}

/**
 * Build the comparison scene: the base surface opaque, the second surface
 * (recovered mesh or the other method's mesh) translucent on top.
 */
export function buildOverlayScene(
  base: ParsedMesh,
  overlay: ParsedMesh | null,
  options: { baseColors?: Float32Array; baseOpacity?: number; overlayOpacity?: number } = {},
): OverlayScene {
  const scene = new THREE.Scene();
  const baseObject = surfaceObject(base, {
    name: "base",
    colors: options.baseColors,
    color: BASE_BLUE,
    opacity: options.baseOpacity ?? 1.0,
  });
  scene.add(baseObject);
  let overlayObject: THREE.Mesh | null = null;
  if (overlay !== null) {
    overlayObject = surfaceObject(overlay, {
      name: "overlay",
      color: OVERLAY_ORANGE,
      opacity: options.overlayOpacity ?? 0.45,
    });
    scene.add(overlayObject);
  }
  return { scene, base: baseObject, overlay: overlayObject };
}

/** Centroid + radius of a mesh, for framing the camera. */
export function boundingSphere(mesh: ParsedMesh): { center: [number, number, number]; radius: number } {
  const n = mesh.vertexCount;
  if (n === 0) return { center: [0, 0, 0], radius: 1 };
  const c: [number, number, number] = [0, 0, 0];
  for (let i = 0; i < n; i++) {
    c[0] += mesh.positions[3 * i];
    c[1] += mesh.positions[3 * i + 1];
    c[2] += mesh.positions[3 * i + 2];
  }
  c[0] /= n;
  c[1] /= n;
  c[2] /= n;
  let r2 = 0;
  for (let i = 0; i < n; i++) {
    const dx = mesh.positions[3 * i] - c[0];
    const dy = mesh.positions[3 * i + 1] - c[1];
    const dz = mesh.positions[3 * i + 2] - c[2];
    r2 = Math.max(r2, dx * dx + dy * dy + dz * dz);
  }
  return { center: c, radius: Math.sqrt(r2) || 1 };
}

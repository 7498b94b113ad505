/**
 * Session state shared by every panel, plus its URL round-trip codec.
 *
 * The whole UI is a pure function of this object and the reports fetched
 * for it, so serializing it into the query string makes any session
 * shareable as a link.  `parseState(serializeState(s))` returns a deep-equal
 * state for every valid state.
 */

import { z } from "zod";

export const METHODS = ["linear", "cubic", "weno"] as const;
export type CrossingMethod = (typeof METHODS)[number];

export const VIEW_MODES = ["edge-crossing", "hidden-feature"] as const;
export type ViewMode = (typeof VIEW_MODES)[number];

export type Vec3 = [number, number, number];

export interface SelectionBox {
  center: Vec3;
  dimension: Vec3;
  enabled: boolean;
}

export interface SessionState {
  /** Content id of the registered field, or null before registration. */
  fieldId: string | null;
  isovalue: number;
  /** Threshold on the "approx_error" channel driving the binary colormap. */
  threshold: number;
  box: SelectionBox;
  /** Crossing method applied inside the selection box. */
  methodSelected: CrossingMethod;
  /** Method shown for the rest of the domain in the comparison view. */
  methodUnselected: CrossingMethod;
  viewMode: ViewMode;
  /** Run hidden-feature recovery and overlay the recovered mesh. */
  recover: boolean;
}

export const DEFAULT_STATE: SessionState = {
  fieldId: null,
  isovalue: 0.0,
  threshold: 0.0,
  box: {
    center: [0, 0, 0],
    dimension: [0.5, 0.5, 0.5],
    enabled: false,
  },
  methodSelected: "linear",
  methodUnselected: "linear",
  viewMode: "edge-crossing",
  recover: false,
};

const finite = z.coerce.number().refine(Number.isFinite, "must be finite");

const stateSchema = z.object({
  field: z.string().min(1).optional(),
  k: finite.optional(),
  t: finite.optional(),
  bc: z.tuple([finite, finite, finite]).optional(),
  bd: z.tuple([finite, finite, finite]).optional(),
  bon: z.enum(["0", "1"]).optional(),
  msel: z.enum(METHODS).optional(),
  muns: z.enum(METHODS).optional(),
  view: z.enum(VIEW_MODES).optional(),
  rec: z.enum(["0", "1"]).optional(),
});

function vecParam(v: Vec3): string {
  return v.map((x) => String(x)).join(",");
}

function splitVec(raw: string | null): [string, string, string] | undefined {
  if (raw === null) return undefined;
  const parts = raw.split(",");
  return parts.length === 3 ? (parts as [string, string, string]) : undefined;
}

/** Encode a session as a query string (no leading "?"). */
export function serializeState(state: SessionState): string {
  const q = new URLSearchParams();
  if (state.fieldId !== null) q.set("field", state.fieldId);
  q.set("k", String(state.isovalue));
  q.set("t", String(state.threshold));
  q.set("bc", vecParam(state.box.center));
  q.set("bd", vecParam(state.box.dimension));
  q.set("bon", state.box.enabled ? "1" : "0");
  q.set("msel", state.methodSelected);
  q.set("muns", state.methodUnselected);
  q.set("view", state.viewMode);
  q.set("rec", state.recover ? "1" : "0");
  return q.toString();
}

/**
 * Decode a query string into a session.  Unknown keys are ignored and any
 * invalid value falls back to the default for just that field, so a
 * damaged link still opens a usable session.
 */
export function parseState(query: string): SessionState {
  const q = new URLSearchParams(query);
  const candidate = {
    field: q.get("field") ?? undefined,
    k: q.get("k") ?? undefined,
    t: q.get("t") ?? undefined,
    bc: splitVec(q.get("bc")),
    bd: splitVec(q.get("bd")),
    bon: q.get("bon") ?? undefined,
    msel: q.get("msel") ?? undefined,
    muns: q.get("muns") ?? undefined,
    view: q.get("view") ?? undefined,
    rec: q.get("rec") ?? undefined,
  };
  const state: SessionState = structuredClone(DEFAULT_STATE);
  for (const [key, schema] of Object.entries(stateSchema.shape)) {
    const raw = candidate[key as keyof typeof candidate];
    if (raw === undefined) continue;
    const parsed = schema.safeParse(raw);
    if (!parsed.success || parsed.data === undefined) continue;
    const value = parsed.data;
    switch (key) {
      case "field":
        state.fieldId = value as string;
        break;
      case "k":
        state.isovalue = value as number;
        break;
      case "t":
        state.threshold = value as number;
        break;
      case "bc":
        state.box.center = value as Vec3;
        break;
      case "bd":
        state.box.dimension = value as Vec3;
        break;
      case "bon":
        state.box.enabled = value === "1";
        break;
      case "msel":
        state.methodSelected = value as CrossingMethod;
        break;
      case "muns":
        state.methodUnselected = value as CrossingMethod;
        break;
      case "view":
        state.viewMode = value as ViewMode;
        break;
      case "rec":
        state.recover = value === "1";
        break;
    }
  }
  return state;
}

/** Axis-aligned bounds of the selection box. */
export function boxBounds(box: SelectionBox): { min: Vec3; max: Vec3 } {
  const min = box.center.map((c, i) => c - box.dimension[i] / 2) as Vec3;
  const max = box.center.map((c, i) => c + box.dimension[i] / 2) as Vec3;
  return { min, max };
}

export function pointInBox(box: SelectionBox, x: number, y: number, z: number): boolean {
  const { min, max } = boxBounds(box);
  return (
    x >= min[0] && x <= max[0] &&
    y >= min[1] && y <= max[1] &&
    z >= min[2] && z <= max[2]
  );
}

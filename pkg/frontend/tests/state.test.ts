import { describe, expect, it } from "vitest";

import {
  DEFAULT_STATE,
  METHODS,
  VIEW_MODES,
  boxBounds,
  parseState,
  pointInBox,
  serializeState,
} from "../src/state.js";
import type { SessionState, Vec3 } from "../src/state.js";

// deterministic 32-bit generator so failures reproduce
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomState(rand: () => number): SessionState {
  const vec = (): Vec3 => [
    (rand() - 0.5) * 20,
    (rand() - 0.5) * 20,
    rand() * 3 + 0.001,
  ];
  return {
    fieldId: rand() < 0.2 ? null : Math.floor(rand() * 1e9).toString(16),
    isovalue: (rand() - 0.5) * 4,
    threshold: rand() * 0.1,
    box: { center: vec(), dimension: vec(), enabled: rand() < 0.5 },
    methodSelected: METHODS[Math.floor(rand() * METHODS.length)],
    methodUnselected: METHODS[Math.floor(rand() * METHODS.length)],
    viewMode: VIEW_MODES[Math.floor(rand() * VIEW_MODES.length)],
    recover: rand() < 0.5,
  };
}

describe("session state URL codec", () => {
  it("round-trips 300 random states exactly", () => {
    const rand = mulberry32(0xc0ffee);
    for (let trial = 0; trial < 300; trial++) {
      const state = randomState(rand);
      expect(parseState(serializeState(state))).toEqual(state);
    }
  });

  it("round-trips awkward float values", () => {
    const state = structuredClone(DEFAULT_STATE);
    state.isovalue = 0.1 + 0.2; // 0.30000000000000004
    state.threshold = 1e-17;
    state.box.center = [-0, 1 / 3, 1e300];
    expect(parseState(serializeState(state))).toEqual(state);
  });

  it("parses an empty query to the defaults", () => {
    expect(parseState("")).toEqual(DEFAULT_STATE);
  });

  it("falls back per-field on damaged values", () => {
    const good = structuredClone(DEFAULT_STATE);
    good.isovalue = 0.25;
    const query = serializeState(good).replace("view=edge-crossing", "view=bogus");
    const parsed = parseState(query);
    expect(parsed.viewMode).toBe(DEFAULT_STATE.viewMode); // damaged field reset
    expect(parsed.isovalue).toBe(0.25); // intact fields kept
  });

  it("rejects non-finite numbers", () => {
    const parsed = parseState("k=NaN&t=Infinity");
    expect(parsed.isovalue).toBe(DEFAULT_STATE.isovalue);
    expect(parsed.threshold).toBe(DEFAULT_STATE.threshold);
  });

  it("ignores unknown keys", () => {
    const parsed = parseState("utm_source=mail&k=0.5");
    expect(parsed.isovalue).toBe(0.5);
  });
});

describe("selection box geometry", () => {
  it("computes bounds from center and dimension", () => {
    const { min, max } = boxBounds({ center: [1, 2, 3], dimension: [2, 4, 6], enabled: true });
    expect(min).toEqual([0, 0, 0]);
    expect(max).toEqual([2, 4, 6]);
  });

  it("classifies points with inclusive faces", () => {
    const box = { center: [0, 0, 0] as Vec3, dimension: [2, 2, 2] as Vec3, enabled: true };
    expect(pointInBox(box, 1, 1, 1)).toBe(true);
    expect(pointInBox(box, 1.0001, 0, 0)).toBe(false);
    expect(pointInBox(box, 0, 0, 0)).toBe(true);
  });
});

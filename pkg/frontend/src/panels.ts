/**
 * Pure view-model builders for the seven panels.
 *
 * Every builder is a function of the session state plus fetched data and
 * returns a plain object the DOM layer renders verbatim.  Failure states
 * come back as placeholder or error-card models — a panel never renders
 * blank.
 */

import type { CdfResponse, ChannelSummary, ExtractReport, ExtractRequest } from "./api.js";
import type { SessionState } from "./state.js";
import { METHODS, boxBounds, pointInBox } from "./state.js";

export interface PlaceholderModel {
  kind: "placeholder";
  message: string;
}

export interface ErrorCardModel {
  kind: "error";
  message: string;
  retryable: boolean;
}

export function errorCard(err: unknown): ErrorCardModel {
  const message = err instanceof Error ? err.message : String(err);
  return { kind: "error", message, retryable: true };
}

// ------------------------------------------------------------------ C1: CDF

export interface CdfPanelModel {
  kind: "cdf";
  channel: string;
  /** Strictly increasing (value, fraction) polyline of the distribution. */
  points: { value: number; fraction: number }[];
  threshold: number;
  /** Fraction of vertices above the threshold, when a /cdf reply is in. */
  fractionAbove: number | null;
  /** SVG path for the polyline in a unit viewbox (y down). */
  path: string;
}

export function cdfPanel(
  channel: string,
  summary: ChannelSummary | null,
  threshold: number,
  live: CdfResponse | null,
): CdfPanelModel | PlaceholderModel {
  if (summary === null || summary.cdf.length === 0) {
    return { kind: "placeholder", message: "run an extraction with the error channel first" };
  }
  const points = summary.cdf.map(([value, fraction]) => ({ value, fraction }));
  const lo = points[0].value;
  const span = Math.max(points[points.length - 1].value - lo, Number.MIN_VALUE);
  const path = points
    .map((p, i) => {
      const x = (p.value - lo) / span;
      const y = 1 - p.fraction;
      return `${i === 0 ? "M" : "L"}${x.toFixed(4)},${y.toFixed(4)}`;
    })
    .join(" ");
  return {
    kind: "cdf",
    channel,
    points,
    threshold,
    fractionAbove: live === null ? null : live.fraction_above,
    path,
  };
}

/** Threshold snapped to the distribution point nearest the given fraction. */
export function thresholdAtFraction(summary: ChannelSummary, fraction: number): number {
  let best = summary.cdf[0];
  for (const point of summary.cdf) {
    if (Math.abs(point[1] - fraction) < Math.abs(best[1] - fraction)) best = point;
  }
  return best[0];
}

// ------------------------------------------------------- C2 + C3: controls

export interface BoxPanelModel {
  kind: "box";
  center: [number, number, number];
  dimension: [number, number, number];
  enabled: boolean;
}

export function boxPanel(state: SessionState): BoxPanelModel {
  return {
    kind: "box",
    center: [...state.box.center],
    dimension: [...state.box.dimension],
    enabled: state.box.enabled,
  };
}

export interface MethodPanelModel {
  kind: "methods";
  options: readonly string[];
  selected: string;
  unselected: string;
  /** The unselected dropdown only matters while the box is on. */
  unselectedActive: boolean;
}

export function methodPanel(state: SessionState): MethodPanelModel {
  return {
    kind: "methods",
    options: METHODS,
    selected: state.methodSelected,
    unselected: state.methodUnselected,
    unselectedActive: state.box.enabled,
  };
}

/**
 * The extraction requests a state implies, in issue order.  With the box
 * off this is one full-domain request; with it on, the boxed request is
 * followed by a full-domain one for the unselected method when the two
 * methods differ (the comparison view needs both surfaces).
 */
export function buildExtractRequests(state: SessionState): ExtractRequest[] {
  if (state.fieldId === null) return [];
  const base: ExtractRequest = {
    field_id: state.fieldId,
    k: state.isovalue,
    method: state.methodSelected,
    error: true,
    recover: state.recover,
  };
  if (!state.box.enabled) return [base];
  const { min, max } = boxBounds(state.box);
  const requests: ExtractRequest[] = [{ ...base, box: { min, max } }];
  if (state.methodUnselected !== state.methodSelected) {
    requests.push({ ...base, method: state.methodUnselected });
  }
  return requests;
}

// ----------------------------------------------------------- C5: local bars

export interface LocalBarsModel {
  kind: "bars";
  channel: string;
  bars: { vertex: number; value: number }[];
  truncated: boolean;
}

const MAX_BARS = 64;

export function localBars(
  state: SessionState,
  channel: string,
  positions: Float32Array | null,
  values: Float32Array | null,
): LocalBarsModel | PlaceholderModel {
  if (!state.box.enabled) {
    return { kind: "placeholder", message: "select a region to compare vertices" };
  }
  if (positions === null || values === null) {
    return { kind: "placeholder", message: "no mesh loaded" };
  }
  const bars: { vertex: number; value: number }[] = [];
  for (let i = 0; i < values.length; i++) {
    if (pointInBox(state.box, positions[3 * i], positions[3 * i + 1], positions[3 * i + 2])) {
      bars.push({ vertex: i, value: values[i] });
    }
  }
  bars.sort((a, b) => b.value - a.value);
  const truncated = bars.length > MAX_BARS;
  return { kind: "bars", channel, bars: bars.slice(0, MAX_BARS), truncated };
}

// ------------------------------------------------------------- C6: compare

export interface ComparisonViewModel {
  kind: "comparison";
  mode: "edge-crossing" | "hidden-feature";
  /** Opacity of the base surface (opaque blue). */
  baseOpacity: number;
  /** Opacity of the overlaid surface (translucent orange), if any. */
  overlayOpacity: number | null;
  overlayLabel: string | null;
}

export interface DisabledModel {
  kind: "disabled";
  hint: string;
}

export function comparisonView(
  state: SessionState,
  report: ExtractReport | null,
): ComparisonViewModel | DisabledModel | PlaceholderModel {
  if (report === null) {
    return { kind: "placeholder", message: "run an extraction first" };
  }
  if (state.viewMode === "hidden-feature") {
    if (report.recovered_blob === null) {
      return { kind: "disabled", hint: "enable recovery to overlay the recovered surface" };
    }
    return {
      kind: "comparison",
      mode: "hidden-feature",
      baseOpacity: 1.0,
      overlayOpacity: 0.45,
      overlayLabel: "recovered",
    };
  }
  const distinct = state.methodSelected !== state.methodUnselected;
  if (!state.box.enabled || !distinct) {
    return { kind: "disabled", hint: "pick two different methods to compare" };
  }
  return {
    kind: "comparison",
    mode: "edge-crossing",
    baseOpacity: 1.0,
    overlayOpacity: 0.45,
    overlayLabel: state.methodUnselected,
  };
}

// -------------------------------------------------------------- C7: summary

export interface SummaryModel {
  kind: "summary";
  rows: { label: string; value: string }[];
}

export function summaryPanel(report: ExtractReport): SummaryModel {
  const rows: { label: string; value: string }[] = [
    { label: "vertices", value: String(report.vertex_count) },
    { label: "triangles", value: String(report.triangle_count) },
    { label: "components", value: String(report.topology.components) },
    { label: "open edges", value: String(report.topology.open_edges) },
  ];
  for (const [name, summary] of Object.entries(report.channels)) {
    rows.push({
      label: `${name} rms / max`,
      value: `${summary.rms.toExponential(3)} / ${summary.max.toExponential(3)}`,
    });
  }
  if (report.recovery !== null) {
    rows.push(
      { label: "refined cells", value: String(report.recovery.refined_cells) },
      { label: "patch failures", value: String(report.recovery.patch_failures) },
      {
        label: "recovered components",
        value: String(report.recovery.recovered_topology.components),
      },
    );
  }
  rows.push({ label: "extract ms", value: report.timing_ms.extract.toFixed(1) });
  return { kind: "summary", rows };
}

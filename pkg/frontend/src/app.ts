/**
 * Wiring: a single session store drives the panels; control mutations go
 * through the debounced request gate, threshold drags only re-query the
 * CDF endpoint and recolor in place.
 */

import type { CdfResponse, ExtractReport } from "./api.js";
import { ExplorerClient, RequestGate } from "./api.js";
import { binaryColors, channelColors } from "./colormap.js";
import { errorCard, buildExtractRequests } from "./panels.js";
import type { ErrorCardModel } from "./panels.js";
import { parsePly } from "./ply.js";
import type { ParsedMesh } from "./ply.js";
import type { SessionState } from "./state.js";
import { DEFAULT_STATE, parseState, serializeState } from "./state.js";

export const THRESHOLD_CHANNEL = "approx_error";

// ------------------------------------------------------------------- store

export type Listener = (state: SessionState, previous: SessionState) => void;

export class SessionStore {
  private state: SessionState;
  private readonly listeners = new Set<Listener>();

  constructor(initial?: SessionState) {
    this.state = structuredClone(initial ?? DEFAULT_STATE);
  }

  get(): SessionState {
    return structuredClone(this.state);
  }

  set(patch: Partial<SessionState>): void {
    const previous = this.state;
    this.state = { ...structuredClone(previous), ...structuredClone(patch) };
    for (const listener of this.listeners) listener(this.get(), structuredClone(previous));
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  /** Restore a session from a query string (e.g. location.search). */
  static fromQuery(query: string): SessionStore {
    return new SessionStore(parseState(query));
  }

  toQuery(): string {
    return serializeState(this.state);
  }
}

/**
 * Classify a state change: threshold-only drags must not re-extract, they
 * re-query /cdf and recolor; anything else that affects the extraction
 * schedules one.
 */
export function classifyMutation(
  previous: SessionState,
  next: SessionState,
): "none" | "threshold" | "view" | "extract" {
  const prevRest = { ...previous, threshold: 0, viewMode: "edge-crossing" as const };
  const nextRest = { ...next, threshold: 0, viewMode: "edge-crossing" as const };
  if (JSON.stringify(prevRest) !== JSON.stringify(nextRest)) return "extract";
  if (previous.threshold !== next.threshold) return "threshold";
  if (previous.viewMode !== next.viewMode) return "view";
  return "none";
}

// -------------------------------------------------------------- controller

export interface ControllerEvents {
  onReport?: (report: ExtractReport, meshes: { base: ParsedMesh; recovered: ParsedMesh | null }) => void;
  onCdf?: (response: CdfResponse, colors: Float32Array) => void;
  onError?: (card: ErrorCardModel) => void;
  onUrl?: (query: string) => void;
}

export interface ExtractOutcome {
  report: ExtractReport;
  base: ParsedMesh;
  recovered: ParsedMesh | null;
}

export class ExplorerController {
  readonly store: SessionStore;
  private readonly client: ExplorerClient;
  private readonly gate: RequestGate<ExtractOutcome>;
  private readonly events: ControllerEvents;
  lastReport: ExtractReport | null = null;
  lastMesh: ParsedMesh | null = null;

  constructor(
    client: ExplorerClient,
    store: SessionStore,
    events: ControllerEvents = {},
    gateDelayMs = 150,
  ) {
    this.client = client;
    this.store = store;
    this.events = events;
    this.gate = new RequestGate<ExtractOutcome>(gateDelayMs, {
      onResult: (outcome) => this.applyOutcome(outcome),
      onError: (err) => this.events.onError?.(errorCard(err)),
    });
    store.subscribe((state, previous) => this.onState(state, previous));
  }

  private onState(state: SessionState, previous: SessionState): void {
    this.events.onUrl?.(serializeState(state));
    switch (classifyMutation(previous, state)) {
      case "extract":
        this.scheduleExtract(state);
        break;
      case "threshold":
        void this.refreshCdf(state.threshold);
        break;
      case "view":
      case "none":
        break;
    }
  }

  private scheduleExtract(state: SessionState): void {
    const requests = buildExtractRequests(state);
    if (requests.length === 0) return;
    this.gate.schedule(async () => {
      const report = await this.client.extract(requests[0]);
      const base = parsePly(await this.client.fetchBlob(report.mesh_blob));
      const recovered =
        report.recovered_blob === null
          ? null
          : parsePly(await this.client.fetchBlob(report.recovered_blob));
      return { report, base, recovered };
    });
  }

  private applyOutcome(outcome: ExtractOutcome): void {
    this.lastReport = outcome.report;
    this.lastMesh = outcome.base;
    this.events.onReport?.(outcome.report, {
      base: outcome.base,
      recovered: outcome.recovered,
    });
  }

  /** Threshold drag: one /cdf round-trip, then recolor — never a re-extract. */
  async refreshCdf(threshold: number): Promise<void> {
    const report = this.lastReport;
    const mesh = this.lastMesh;
    if (report === null || mesh === null) return;
    const channel = mesh.channels[THRESHOLD_CHANNEL];
    if (channel === undefined) return;
    try {
      const response = await this.client.cdf(report.report_id, THRESHOLD_CHANNEL, threshold);
      this.events.onCdf?.(response, binaryColors(channel, threshold));
    } catch (err) {
      this.events.onError?.(errorCard(err));
    }
  }

  /** Continuous colors for the current mesh's error channel. */
  overviewColors(): Float32Array | null {
    const mesh = this.lastMesh;
    if (mesh === null) return null;
    const channel = mesh.channels[THRESHOLD_CHANNEL];
    return channel === undefined ? null : channelColors(channel);
  }
}

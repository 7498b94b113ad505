/**
 * Typed client for the isomarch HTTP service, plus the request gate that
 * keeps at most one /extract in flight and drops stale responses.
 */

import { z } from "zod";

// --------------------------------------------------------------- schemas

export const fieldMetaSchema = z.object({
  id: z.string(),
  dims: z.tuple([z.number(), z.number(), z.number()]),
  origin: z.tuple([z.number(), z.number(), z.number()]),
  spacing: z.tuple([z.number(), z.number(), z.number()]),
  value_range: z.tuple([z.number(), z.number()]),
  source: z.string(),
  kind: z.string().nullable(),
});
export type FieldMeta = z.infer<typeof fieldMetaSchema>;

const cdfPointSchema = z.tuple([z.number(), z.number()]);

export const channelSummarySchema = z.object({
  count: z.number(),
  min: z.number(),
  mean: z.number(),
  rms: z.number(),
  max: z.number(),
  cdf: z.array(cdfPointSchema),
});
export type ChannelSummary = z.infer<typeof channelSummarySchema>;

export const topologySchema = z.object({
  components: z.number(),
  open_edges: z.number(),
  euler: z.number(),
  vertex_count: z.number(),
  edge_count: z.number(),
  triangle_count: z.number(),
});
export type Topology = z.infer<typeof topologySchema>;

export const extractReportSchema = z.object({
  report_id: z.string(),
  field_id: z.string(),
  isovalue: z.number(),
  method: z.string(),
  compare: z.array(z.string()).nullable(),
  mesh_blob: z.string(),
  recovered_blob: z.string().nullable(),
  vertex_count: z.number(),
  triangle_count: z.number(),
  topology: topologySchema,
  recovery: z
    .object({
      refined_cells: z.number(),
      patch_faces: z.number(),
      patch_failures: z.number(),
      growth_rounds: z.number(),
      flagged_cells: z.number(),
      recovered_topology: topologySchema,
    })
    .nullable(),
  channels: z.record(z.string(), channelSummarySchema),
  timing_ms: z.object({ extract: z.number(), total: z.number() }),
});
export type ExtractReport = z.infer<typeof extractReportSchema>;

export const cdfResponseSchema = z.object({
  report_id: z.string(),
  channel: z.string(),
  threshold: z.number(),
  cdf: z.array(cdfPointSchema),
  fraction_above: z.number(),
});
export type CdfResponse = z.infer<typeof cdfResponseSchema>;

export interface ExtractRequest {
  field_id: string;
  k: number;
  method?: string;
  error?: boolean;
  compare?: string[];
  box?: { min: [number, number, number]; max: [number, number, number] };
  recover?: boolean;
  subdivision?: number;
  sampler?: string;
  apply_to?: string;
  boundary?: string;
  allow_large?: boolean;
}

export interface AnalyticFieldRequest {
  kind: string;
  dims: [number, number, number];
  params?: Record<string, number>;
  domain?: [[number, number, number], [number, number, number]];
}

// ---------------------------------------------------------------- client

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`service replied ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "request failed";
  }
}

export class ExplorerClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    public readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async json<T>(schema: z.ZodType<T>, path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) throw new ServiceError(res.status, await errorDetail(res));
    return schema.parse(await res.json());
  }

  registerAnalyticField(body: AnalyticFieldRequest): Promise<FieldMeta> {
    return this.json(fieldMetaSchema, "/fields", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listFields(): Promise<FieldMeta[]> {
    return this.json(z.array(fieldMetaSchema), "/fields");
  }

  extract(body: ExtractRequest): Promise<ExtractReport> {
    return this.json(extractReportSchema, "/extract", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  cdf(reportId: string, channel: string, threshold: number): Promise<CdfResponse> {
    const q = new URLSearchParams({ channel, threshold: String(threshold) });
    return this.json(cdfResponseSchema, `/cdf/${reportId}?${q.toString()}`);
  }

  async fetchBlob(blobId: string): Promise<ArrayBuffer> {
    const res = await this.fetchImpl(`${this.baseUrl}/blobs/${blobId}`);
    if (!res.ok) throw new ServiceError(res.status, await errorDetail(res));
    return res.arrayBuffer();
  }
}

// ----------------------------------------------------------- request gate

export interface GateHandlers<T> {
  onResult: (value: T, seq: number) => void;
  onError: (err: unknown, seq: number) => void;
}

/**
 * Debounces bursts of control mutations into single requests, keeps at most
 * one request in flight, and drops responses that arrive after a newer
 * request has been issued.
 */
export class RequestGate<T> {
  private seq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight = false;
  private queued: (() => Promise<T>) | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly handlers: GateHandlers<T>,
  ) {}

  /** Latest wins: every call replaces whatever was waiting. */
  schedule(task: () => Promise<T>): void {
    this.queued = task;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.maybeLaunch();
    }, this.delayMs);
  }

  get inFlight(): boolean {
    return this.inflight;
  }

  get issued(): number {
    return this.seq;
  }

  private maybeLaunch(): void {
    if (this.inflight || this.queued === null) return;
    const task = this.queued;
    this.queued = null;
    const mySeq = ++this.seq;
    this.inflight = true;
    task().then(
      (value) => this.settle(mySeq, () => this.handlers.onResult(value, mySeq)),
      (err) => this.settle(mySeq, () => this.handlers.onError(err, mySeq)),
    );
  }

  private settle(mySeq: number, deliver: () => void): void {
    this.inflight = false;
    // a newer request was issued while this one was in flight: stale, drop
    if (mySeq === this.seq) deliver();
    // debounce window already elapsed for anything queued meanwhile
    if (this.queued !== null && this.timer === null) this.maybeLaunch();
  }
}

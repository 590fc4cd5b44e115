/** Typed client for the review API. Every mutation returns the server's
 * post-action record; callers must treat that payload (or a refetch) as
 * the only source of truth. */

import type {
  ControlFieldDoc,
  EventRecord,
  RunDetail,
  RunListPage,
} from "./types.js";

export class ApiError extends Error {
  /** status 0 means the request never reached the server */
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }

  get conflict(): boolean {
    return this.status === 409;
  }

  get offline(): boolean {
    return this.status === 0;
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export interface ApiOptions {
  baseUrl?: string;
  token?: string | null;
  fetchImpl?: FetchLike;
}

export interface RunFilter {
  stage?: string | null;
  gate?: string | null;
}

export interface RejectOptions {
  editedScenario?: string | null;
  regenerate?: boolean;
}

export class ApiClient {
  private readonly base: string;
  private readonly token: string | null;
  private readonly fetchImpl: FetchLike;

  constructor(options: ApiOptions = {}) {
    this.base = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token ?? null;
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
  }

  artifactUrl(ref: string): string {
    return `${this.base}/api/artifacts/${ref}`;
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (this.token !== null) h["x-api-token"] = this.token;
    if (json) h["content-type"] = "application/json";
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new ApiError(0, `api unreachable: ${reason}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; runs: number }> {
    return this.request("/api/health", { headers: this.headers(false) });
  }

  listRuns(filter: RunFilter = {}): Promise<RunListPage> {
    const query = new URLSearchParams();
    if (filter.stage) query.set("stage", filter.stage);
    if (filter.gate) query.set("gate", filter.gate);
    const suffix = query.toString() ? `?${query}` : "";
    return this.request(`/api/runs${suffix}`, {
      headers: this.headers(false),
    });
  }

  run(runId: string): Promise<RunDetail> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}`, {
      headers: this.headers(false),
    });
  }

  events(runId: string): Promise<{ events: EventRecord[] }> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/events`, {
      headers: this.headers(false),
    });
  }

  approve(runId: string, stage: string): Promise<RunDetail> {
    return this.request(this.stagePath(runId, stage, "approve"), {
      method: "POST",
      headers: this.headers(false),
    });
  }

  reject(
    runId: string,
    stage: string,
    options: RejectOptions = {},
  ): Promise<RunDetail> {
    return this.request(this.stagePath(runId, stage, "reject"), {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({
        edited_scenario: options.editedScenario ?? null,
        regenerate: options.regenerate ?? false,
      }),
    });
  }

  regenerate(runId: string, stage: string): Promise<RunDetail> {
    return this.request(this.stagePath(runId, stage, "regenerate"), {
      method: "POST",
      headers: this.headers(false),
    });
  }

  async controlField(ref: string): Promise<ControlFieldDoc> {
    return this.request(`/api/artifacts/${ref}`, {
      headers: this.headers(false),
    });
  }

  /** Raw artifact bytes, for building blob URLs when a token is set. */
  async artifactBlob(ref: string): Promise<Blob> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.artifactUrl(ref), {
        headers: this.headers(false),
      });
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new ApiError(0, `api unreachable: ${reason}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return response.blob();
  }

  private stagePath(runId: string, stage: string, action: string): string {
    const run = encodeURIComponent(runId);
    const st = encodeURIComponent(stage);
    return `/api/runs/${run}/stages/${st}/${action}`;
  }
}

/** The API reports errors as {"detail": ...}; fall back to raw text. */
async function detailOf(response: Response): Promise<string> {
  const text = await response.text();
  try {
    const doc = JSON.parse(text) as { detail?: unknown };
    if (typeof doc.detail === "string") return doc.detail;
  } catch {
    // not JSON; use the body as-is
  }
  return text || `http ${response.status}`;
}

// Typed client for the session API. Every call goes through the documented
// HTTP endpoints; nothing here touches files or recomputes scores.

import type {
  Candidate,
  CreateSessionRequest,
  DecodingParams,
  GenerateResult,
  SessionSummary,
  SessionView,
  Verdict,
} from "./types.js";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

// Minimal slice of Response the client needs; lets tests hand in plain
// objects instead of constructing real Response instances.
export interface ResponseLike {
  ok: boolean;
  status: number;
  statusText: string;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<ResponseLike>;

export class StudioApi {
  private baseUrl: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.send(method, path, body);
    return (await res.json()) as T;
  }

  private async send(method: string, path: string, body?: unknown): Promise<ResponseLike> {
    const init: RequestInit = { method, headers: { Accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...(init.headers as Record<string, string>), "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res));
    }
    return res;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request("GET", "/sessions");
  }

  getSession(id: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(id)}`);
  }

  createSession(body: CreateSessionRequest): Promise<SessionView> {
    return this.request("POST", "/sessions", body);
  }

  generate(id: string, count: number, params?: DecodingParams): Promise<GenerateResult> {
    const body: { count: number; params?: DecodingParams } = { count };
    if (params !== undefined) {
      body.params = params;
    }
    return this.request("POST", `/sessions/${encodeURIComponent(id)}/generate`, body);
  }

  recordVerdict(id: string, candidateId: string, verdict: Verdict): Promise<Candidate> {
    const path = `/sessions/${encodeURIComponent(id)}/candidates/${encodeURIComponent(candidateId)}/verdict`;
    return this.request("POST", path, { verdict });
  }

  async exportSession(id: string): Promise<string> {
    const res = await this.send("GET", `/sessions/${encodeURIComponent(id)}/export`);
    return res.text();
  }
}

async function errorDetail(res: ResponseLike): Promise<string> {
  try {
    const parsed = (await res.json()) as { detail?: unknown };
    if (parsed && typeof parsed.detail === "string") {
      return parsed.detail;
    }
  } catch {
    // body was not JSON; fall through to the status line
  }
  return res.statusText || `HTTP ${res.status}`;
}

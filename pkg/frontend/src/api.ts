/** Thin HTTP client for the session/solve endpoints.
 *
 * The console performs no domain computation: every number it shows comes
 * back from these calls verbatim.
 */

import type {
  CreateResponse,
  JobStatus,
  SessionState,
  SurfacePayload,
} from "./types.js";

export interface ApiClient {
  createSession(body: {
    m1: number;
    m2: number;
    seed?: number | null;
    grid?: { coords: number[][] };
  }): Promise<CreateResponse>;
  getSession(id: string): Promise<SessionState>;
  answer(id: string, sign: number): Promise<SessionState>;
  solve(body: {
    session_id: string;
    k?: number;
    budget?: number;
    restarts?: number;
  }): Promise<{ id: string }>;
  jobStatus(id: string): Promise<JobStatus>;
  surface(id: string): Promise<{ status: string; surface?: SurfacePayload }>;
}

export class HttpApiClient implements ApiClient {
  constructor(private base: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new Error(`${method} ${path} -> ${resp.status}: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  createSession(body: {
    m1: number;
    m2: number;
    seed?: number | null;
    grid?: { coords: number[][] };
  }) {
    return this.request<CreateResponse>("POST", "/sessions", body);
  }

  getSession(id: string) {
    return this.request<SessionState>("GET", `/sessions/${id}`);
  }

  answer(id: string, sign: number) {
    return this.request<SessionState>("POST", `/sessions/${id}/answer`, { sign });
  }

  solve(body: { session_id: string; k?: number; budget?: number; restarts?: number }) {
    return this.request<{ id: string }>("POST", "/solve", body);
  }

  jobStatus(id: string) {
    return this.request<JobStatus>("GET", `/solve/${id}`);
  }

  surface(id: string) {
    return this.request<{ status: string; surface?: SurfacePayload }>(
      "GET",
      `/surface/${id}`,
    );
  }
}

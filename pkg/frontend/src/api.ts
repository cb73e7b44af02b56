import type {
  BatchResponse,
  CompareResponse,
  PlanJson,
  SessionInfo,
  StepResponse,
  ViewedResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface CreateSessionRequest {
  sql?: string;
  catalog?: unknown;
  plans?: unknown[];
  qep_id?: number;
  params?: Record<string, number>;
}

async function request<T>(
  base: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const text = await response.text();
  let body: unknown = null;
  try {
    body = text ? JSON.parse(text) : null;
  } catch {
    body = null;
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : text || response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export function makeApi(baseUrl: string) {
  const base = baseUrl.replace(/\/+$/, "");
  return {
    health(): Promise<{ status: string; sessions: number }> {
      return request(base, "/health");
    },
    createSession(body: CreateSessionRequest): Promise<SessionInfo> {
      return request(base, "/sessions", {
        method: "POST",
        body: JSON.stringify(body),
      });
    },
    getQep(sessionId: string): Promise<PlanJson> {
      return request(base, `/sessions/${sessionId}/qep`);
    },
    getViewed(sessionId: string): Promise<ViewedResponse> {
      return request(base, `/sessions/${sessionId}/viewed`);
    },
    stepSelect(sessionId: string): Promise<StepResponse> {
      return request(base, `/sessions/${sessionId}/select/step`, {
        method: "POST",
      });
    },
    batchSelect(
      sessionId: string,
      k: number,
      params?: Record<string, number>,
    ): Promise<BatchResponse> {
      return request(base, `/sessions/${sessionId}/select/batch`, {
        method: "POST",
        body: JSON.stringify(params ? { k, params } : { k }),
      });
    },
    markViewed(sessionId: string, planId: number): Promise<ViewedResponse> {
      return request(base, `/sessions/${sessionId}/viewed`, {
        method: "POST",
        body: JSON.stringify({ plan_id: planId }),
      });
    },
    getPlan(sessionId: string, planId: number): Promise<PlanJson> {
      return request(base, `/sessions/${sessionId}/plans/${planId}`);
    },
    compare(sessionId: string, a: number, b: number): Promise<CompareResponse> {
      return request(base, `/sessions/${sessionId}/compare?a=${a}&b=${b}`);
    },
  };
}

export type ArenaApi = ReturnType<typeof makeApi>;

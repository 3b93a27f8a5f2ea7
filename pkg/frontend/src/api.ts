/** Typed fetch client for the completion service. */

import type {
  CompletionRequest,
  CompletionResponse,
  HealthResponse,
  PromptsResponse,
  ShapeListResponse,
  ShapeResponse,
} from "./types";

export const REQUEST_TIMEOUT_MS = 30_000;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null = null,
  ) {
    super(message);
  }
}

async function request<T>(
  url: string,
  init: RequestInit = {},
  signal?: AbortSignal,
): Promise<T> {
  const timeout = AbortSignal.timeout(REQUEST_TIMEOUT_MS);
  const combined = signal ? AbortSignal.any([signal, timeout]) : timeout;
  let res: Response;
  try {
    res = await fetch(url, { ...init, signal: combined });
  } catch (err) {
    if (signal?.aborted) throw err; // caller cancelled: propagate untouched
    throw new ApiError(`server unreachable: ${String(err)}`);
  }
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(detail, res.status);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(public readonly baseUrl: string = "") {}

  health(): Promise<HealthResponse> {
    return request(`${this.baseUrl}/health`);
  }

  prompts(category?: string, partType?: string): Promise<PromptsResponse> {
    const params = new URLSearchParams();
    if (category) params.set("category", category);
    if (partType) params.set("part_type", partType);
    const qs = params.toString();
    return request(`${this.baseUrl}/prompts${qs ? "?" + qs : ""}`);
  }

  shapes(): Promise<ShapeListResponse> {
    return request(`${this.baseUrl}/shapes`);
  }

  shape(id: string): Promise<ShapeResponse> {
    return request(`${this.baseUrl}/shapes/${encodeURIComponent(id)}`);
  }

  complete(req: CompletionRequest, signal?: AbortSignal): Promise<CompletionResponse> {
    return request(
      `${this.baseUrl}/complete`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(req),
      },
      signal,
    );
  }
}

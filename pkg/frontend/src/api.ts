/** Thin HTTP client for the review service. All requests carry the actor
 *  identity header; every mutation carries an idempotency key so retries
 *  and double-clicks cannot duplicate reviews or audit events. */

import type {
  ApiErrorBody,
  AuditEvent,
  ChangeDetail,
  EntryDetail,
  EvaluationResponse,
  InventoryEntry,
  MetricsReport,
  ReviewPayload,
  ReviewResponse,
  StatementResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export function newIdempotencyKey(): string {
  const rt = globalThis.crypto;
  if (rt && "randomUUID" in rt) return rt.randomUUID();
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    public actor: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<T> {
    const headers: Record<string, string> = { "X-Actor": this.actor };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    if (idempotencyKey) headers["Idempotency-Key"] = idempotencyKey;
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      const err = payload as ApiErrorBody;
      throw new ApiError(
        response.status,
        err.error?.code ?? "unknown",
        err.error?.message ?? response.statusText,
      );
    }
    return payload as T;
  }

  inventory(): Promise<InventoryEntry[]> {
    return this.request("GET", "/inventory");
  }

  entry(id: string): Promise<EntryDetail> {
    return this.request("GET", `/entries/${encodeURIComponent(id)}`);
  }

  audit(id: string): Promise<AuditEvent[]> {
    return this.request("GET", `/entries/${encodeURIComponent(id)}/audit`);
  }

  metrics(id: string): Promise<MetricsReport> {
    return this.request("GET", `/entries/${encodeURIComponent(id)}/metrics`);
  }

  change(id: string, changeId: string): Promise<ChangeDetail> {
    return this.request(
      "GET",
      `/entries/${encodeURIComponent(id)}/changes/${encodeURIComponent(changeId)}`,
    );
  }

  statement(id: string, review: number): Promise<StatementResponse> {
    return this.request("GET", `/entries/${encodeURIComponent(id)}/statement/${review}`);
  }

  submitReview(
    id: string,
    payload: ReviewPayload,
    idempotencyKey: string,
  ): Promise<ReviewResponse> {
    return this.request(
      "POST",
      `/entries/${encodeURIComponent(id)}/reviews`,
      payload,
      idempotencyKey,
    );
  }

  submitEvaluation(id: string, idempotencyKey: string): Promise<EvaluationResponse> {
    return this.request(
      "POST",
      `/entries/${encodeURIComponent(id)}/evaluations`,
      {},
      idempotencyKey,
    );
  }
}

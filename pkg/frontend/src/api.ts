/**
 * Typed fetch client for the review service.
 *
 * Configuration is limited to the service base URL; every method maps
 * one to one onto a published endpoint and returns the parsed JSON
 * body unchanged.
 */

import type {
  ApiErrorBody,
  Band,
  DecisionResponse,
  Interpretation,
  QueueFilters,
  QueuePage,
  RunSummary,
  Verdict,
} from "./types.js";

/** Service or transport failure; carries the {code, message} error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (err) {
    // fetch rejects before any response exists; status 0 marks that case
    throw new ApiError(0, "network", `service unreachable: ${String(err)}`);
  }
  if (!res.ok) {
    let body: Partial<ApiErrorBody> = {};
    try {
      body = (await res.json()) as Partial<ApiErrorBody>;
    } catch {
      // non-JSON error body: fall back to the status line below
    }
    throw new ApiError(
      res.status,
      body.code ?? "http_error",
      body.message ?? `${res.status} ${res.statusText}`,
    );
  }
  return (await res.json()) as T;
}

export class ReviewApi {
  private readonly base: string;

  constructor(baseUrl: string) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  listRuns(): Promise<RunSummary[]> {
    return request(`${this.base}/runs`);
  }

  getBands(run: string): Promise<Band[]> {
    return request(`${this.base}/runs/${encodeURIComponent(run)}/bands`);
  }

  getQueue(run: string, filters: QueueFilters = {}): Promise<QueuePage> {
    const params = new URLSearchParams();
    if (filters.status !== undefined) params.set("status", filters.status);
    if (filters.band !== undefined) params.set("band", String(filters.band));
    if (filters.page !== undefined) params.set("page", String(filters.page));
    const query = params.toString();
    const path = `${this.base}/runs/${encodeURIComponent(run)}/queue`;
    return request(query ? `${path}?${query}` : path);
  }

  getInterpretation(run: string, docId: string): Promise<Interpretation> {
    const path = `${this.base}/runs/${encodeURIComponent(run)}/docs/${encodeURIComponent(docId)}/interpretation`;
    return request(path);
  }

  submitDecision(
    run: string,
    docId: string,
    verdict: Verdict,
    coder: string,
  ): Promise<DecisionResponse> {
    return request(`${this.base}/runs/${encodeURIComponent(run)}/decisions`, {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        "X-Coder-Id": coder,
      },
      body: JSON.stringify({ doc_id: docId, verdict }),
    });
  }

  exportLabels(run: string): Promise<Array<{ doc_id: string; label: number; source: string }>> {
    return request(`${this.base}/runs/${encodeURIComponent(run)}/export`);
  }
}

/** Typed client for the annotation-service HTTP API. */

import type {
  AnnotationTask,
  DiseaseSummary,
  EvalMark,
  MarkSubmission,
  QAItem,
  SpanSubmission,
  TaskKind,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string | null = null,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T | null> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(body !== undefined),
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (response.status === 204) return null;
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        // service errors arrive as {"detail": ...}; surface them verbatim
        if (typeof payload?.detail === "string") detail = payload.detail;
        else if (payload?.detail) detail = JSON.stringify(payload.detail);
      } catch {
        /* non-JSON error body: keep statusText */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async diseases(): Promise<DiseaseSummary[]> {
    return (await this.request<DiseaseSummary[]>("GET", "/diseases"))!;
  }

  async nextTask(kind: TaskKind, disease?: string): Promise<AnnotationTask | null> {
    const query = new URLSearchParams({ kind });
    if (disease) query.set("disease", disease);
    return this.request<AnnotationTask>("GET", `/tasks/next?${query.toString()}`);
  }

  async submitSpan(taskId: string, submission: SpanSubmission): Promise<QAItem> {
    return (await this.request<QAItem>("POST", `/tasks/${taskId}/spans`, submission))!;
  }

  async submitMark(taskId: string, submission: MarkSubmission): Promise<EvalMark> {
    return (await this.request<EvalMark>("POST", `/tasks/${taskId}/mark`, submission))!;
  }

  async completeTask(taskId: string): Promise<void> {
    await this.request("POST", `/tasks/${taskId}/complete`);
  }

  async skipTask(taskId: string): Promise<void> {
    await this.request("POST", `/tasks/${taskId}/skip`);
  }
}

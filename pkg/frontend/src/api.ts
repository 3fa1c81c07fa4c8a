/** Thin typed client for the annotation service.
 *
 * State-changing calls are sent exactly once: a failed write surfaces as an
 * ApiError for the caller to show, never a silent retry. Retries are the
 * user's decision and stay safe because record ids are client-supplied.
 */
import type {
  AnnotationRecordView,
  Decision,
  DocView,
  IndicatorView,
  SessionStateView,
  SessionStatsView,
  SkipReason,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

function post<T>(url: string, payload: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
}

/** Surface the controller depends on; ApiClient is the fetch-backed one. */
export interface Api {
  createSession(teacherId: string, eventType: string): Promise<{ session_id: string; phase: string }>;
  brainstorm(sessionId: string, phrases: string[]): Promise<{ indicators: IndicatorView[] }>;
  nextIndicator(sessionId: string): Promise<{ indicator: IndicatorView | null }>;
  search(query: string, limit: number, sessionId?: string): Promise<{ doc_ids: string[] }>;
  doc(docId: string): Promise<DocView>;
  annotate(payload: {
    session_id: string;
    doc_id: string;
    kind: string;
    span_start: number;
    span_end: number;
    role?: string | null;
    record_id?: string;
  }): Promise<{ status: string; record: AnnotationRecordView }>;
  decision(
    sessionId: string,
    payload: {
      decision: Decision | "commit" | "done" | "override" | "abandon";
      doc_id?: string;
      sentence_index?: number;
      skip_reason?: SkipReason;
      record_id?: string;
    },
  ): Promise<{ status: string; converted?: string | null; record?: AnnotationRecordView | null }>;
  promote(sessionId: string, phrase: string): Promise<{ status: "ok" | "noop"; indicator: IndicatorView | null }>;
  state(sessionId: string): Promise<SessionStateView>;
  stats(sessionId: string): Promise<SessionStatsView>;
}

export class ApiClient implements Api {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  createSession(teacherId: string, eventType: string) {
    return post<{ session_id: string; phase: string }>(this.url("/session"), {
      teacher_id: teacherId,
      event_type: eventType,
    });
  }

  brainstorm(sessionId: string, phrases: string[]) {
    return post<{ indicators: IndicatorView[] }>(
      this.url(`/session/${sessionId}/brainstorm`),
      { phrases },
    );
  }

  nextIndicator(sessionId: string) {
    return request<{ indicator: IndicatorView | null }>(
      this.url(`/session/${sessionId}/next-indicator`),
    );
  }

  search(query: string, limit: number, sessionId?: string) {
    const params = new URLSearchParams({ q: query, limit: String(limit) });
    if (sessionId) params.set("session_id", sessionId);
    return request<{ doc_ids: string[] }>(this.url(`/search?${params}`));
  }

  doc(docId: string) {
    return request<DocView>(this.url(`/doc/${encodeURIComponent(docId)}`));
  }

  annotate(payload: {
    session_id: string;
    doc_id: string;
    kind: string;
    span_start: number;
    span_end: number;
    role?: string | null;
    record_id?: string;
  }) {
    return post<{ status: string; record: AnnotationRecordView }>(
      this.url("/annotation"),
      payload,
    );
  }

  decision(
    sessionId: string,
    payload: {
      decision: Decision | "commit" | "done" | "override" | "abandon";
      doc_id?: string;
      sentence_index?: number;
      skip_reason?: SkipReason;
      record_id?: string;
    },
  ) {
    return post<{ status: string; converted?: string | null; record?: AnnotationRecordView | null }>(
      this.url(`/session/${sessionId}/decision`),
      payload,
    );
  }

  promote(sessionId: string, phrase: string) {
    return post<{ status: "ok" | "noop"; indicator: IndicatorView | null }>(
      this.url(`/session/${sessionId}/promote`),
      { phrase },
    );
  }

  state(sessionId: string) {
    return request<SessionStateView>(this.url(`/session/${sessionId}/state`));
  }

  stats(sessionId: string) {
    return request<SessionStatsView>(this.url(`/session/${sessionId}/stats`));
  }
}

// Typed client for the engine's HTTP API. The console is served from the
// same origin, so the base is empty in production; tests point it at a
// fixture server.

let base = "";

export function setApiBase(url: string): void {
  base = url.replace(/\/+$/, "");
}

export interface FactDict {
  subject_raw: string;
  subject_norm: string;
  predicate: string;
  object_raw: string;
  object_norm: string;
}

export interface EvidenceDict {
  doc_id: string;
  revision_id: string | null;
  span_start: number;
  span_end: number;
  doc_time: string;
  source_type: string;
}

export interface RecordDict {
  id: string;
  kind: string;
  fact: FactDict;
  text: string;
  validity: {
    t_start: string;
    t_end: string | null;
    scope: string;
    location: string | null;
    source_type: string;
    start_inferred: boolean;
    end_inferred: boolean;
  };
  epistemic: {
    status: string;
    rank: string;
    confidence: number;
  };
  provenance: {
    evidence: EvidenceDict[];
  };
}

export interface QueueItem {
  item: {
    nugget_id: string;
    reason: string;
    queued_at: string;
    resolved: boolean;
  };
  record: RecordDict;
  rivals: RecordDict[];
}

export interface DecisionBody {
  action: string;
  winner_id?: string;
  note?: string;
}

export interface DecisionOutcome {
  action: string;
  nugget_id: string;
  affected: { nugget_id: string; status: string; t_end: string | null }[];
  note: string | null;
}

export interface QueryRow {
  record: RecordDict;
  score: number;
  lexical: number;
  dense: number;
  metadata: number;
}

export interface QueryResponse {
  query: { text: string; at: string; view: string; k: number };
  results: QueryRow[];
  context: string;
}

export interface ApiError {
  error: string;
  detail?: string;
}

export type ApiResult<T> =
  | { ok: true; data: T }
  | { ok: false; status: number; error: ApiError };

async function request<T>(path: string, init?: RequestInit): Promise<ApiResult<T>> {
  const resp = await fetch(base + path, init);
  const body = await resp.json().catch(() => ({ error: "bad_response" }));
  if (!resp.ok) {
    return { ok: false, status: resp.status, error: body as ApiError };
  }
  return { ok: true, data: body as T };
}

export function fetchQueue(limit: number): Promise<ApiResult<{ items: QueueItem[] }>> {
  return request(`/api/contested?limit=${limit}`);
}

export function postDecision(
  nuggetId: string,
  body: DecisionBody,
): Promise<ApiResult<DecisionOutcome>> {
  return request(`/api/nuggets/${nuggetId}/decision`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function fetchQuery(params: {
  text: string;
  at: string;
  view: string;
  k: number;
}): Promise<ApiResult<QueryResponse>> {
  const q = new URLSearchParams({
    text: params.text,
    at: params.at,
    view: params.view,
    k: String(params.k),
  });
  return request(`/api/query?${q.toString()}`);
}

/**
 * Typed client for the facetsearch JSON API. The console is a strict
 * thin client: every number it renders comes out of these responses.
 */

export const EMBEDDING_FACETS = ['content', 'layout', 'illustration', 'style'] as const;
export const ALL_FACETS = ['content', 'chart_type', 'layout', 'illustration', 'style'] as const;
export type EmbeddingFacet = (typeof EMBEDDING_FACETS)[number];
export type Facet = (typeof ALL_FACETS)[number];

export const CHART_TYPES = [
  'Bar Chart', 'Line Chart', 'Area Chart', 'Radar Chart', 'Pie Chart',
  'Scatterplot', 'Gauge Chart', 'Treemap', 'Diagram', 'Histogram',
  'Range Chart', 'Funnel Chart', 'Pyramid Chart',
] as const;

export interface Spec {
  rewrites: Record<EmbeddingFacet, string | null>;
  chart_types: string[];
  weights: Record<Facet, number>;
}

export interface SpecEdits {
  rewrites?: Partial<Record<EmbeddingFacet, string | null>>;
  weights?: Partial<Record<Facet, number>>;
  chart_types?: string[];
}

export interface ResultItem {
  record_id: string;
  total_score: number;
  facet_scores: Record<Facet, number>;
  chart_types: string[];
  metadata: Record<string, string>;
}

export interface SearchResponse {
  session_id: string | null;
  spec: Spec;
  notes: string[];
  results: ResultItem[];
  k: number;
  hard_filter: boolean;
}

export interface CommittedItem {
  record_id: string;
  metadata: Record<string, string>;
}

export interface CommitsResponse {
  session_id: string;
  committed: CommittedItem[];
}

export interface SessionResponse {
  session_id: string;
  spec: Spec | null;
  committed: CommittedItem[];
  svg_versions: Record<string, number>;
  history_len: number;
}

export interface AutoSelectResponse {
  selected_ids: string[];
  note: string;
  candidates: string[];
}

export interface VersionInfo {
  version: number;
  created_at: string;
  svg: string;
}

export interface ProposeResponse {
  applied: boolean;
  note: string;
  version: VersionInfo | null;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
  }
}

export interface SearchBody {
  session_id: string;
  query?: string;
  spec_edits?: SpecEdits;
  k?: number;
  hard_filter?: boolean;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  private async request<T>(path: string, init?: RequestInit & { signal?: AbortSignal }): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        headers: { 'content-type': 'application/json' },
        ...init,
      });
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') throw err;
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  search(body: SearchBody, signal?: AbortSignal): Promise<SearchResponse> {
    return this.request('/search', { method: 'POST', body: JSON.stringify(body), signal });
  }

  getSession(sessionId: string): Promise<SessionResponse> {
    return this.request(`/sessions/${sessionId}`);
  }

  commit(sessionId: string, recordIds: string[]): Promise<CommitsResponse> {
    return this.request(`/sessions/${sessionId}/commits`, {
      method: 'POST',
      body: JSON.stringify({ record_ids: recordIds }),
    });
  }

  uncommit(sessionId: string, recordId: string): Promise<CommitsResponse> {
    return this.request(`/sessions/${sessionId}/commits/${recordId}`, { method: 'DELETE' });
  }

  autoselect(sessionId: string, k = 10): Promise<AutoSelectResponse> {
    return this.request(`/sessions/${sessionId}/autoselect`, {
      method: 'POST',
      body: JSON.stringify({ k }),
    });
  }

  versions(sessionId: string, recordId: string): Promise<{ record_id: string; versions: VersionInfo[] }> {
    return this.request(`/sessions/${sessionId}/svg/${recordId}/versions`);
  }

  propose(sessionId: string, recordId: string, message: string): Promise<ProposeResponse> {
    return this.request(`/sessions/${sessionId}/svg/${recordId}/propose`, {
      method: 'POST',
      body: JSON.stringify({ message }),
    });
  }
}

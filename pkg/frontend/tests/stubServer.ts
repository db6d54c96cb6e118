/**
 * Recorded-response stub standing in for the facetsearch service.
 * Every number the console may display originates here, which is what
 * lets tests prove the client computes nothing itself.
 */

import type {
  CommitsResponse,
  ResultItem,
  SearchResponse,
  SessionResponse,
  Spec,
} from '../src/api.js';

export const STUB_SPEC: Spec = {
  rewrites: { content: null, layout: 'radial', illustration: null, style: 'minimalist' },
  chart_types: ['Pie Chart'],
  weights: { content: 0, chart_type: 0.25, layout: 0.375, illustration: 0, style: 0.375 },
};

// deliberately odd digits so any DOM occurrence must come from the stub
export const STUB_RESULTS: ResultItem[] = [
  {
    record_id: 'ex-101',
    total_score: 0.8123,
    facet_scores: { content: 0, chart_type: 1, layout: 0.7817, illustration: 0, style: 0.4711 },
    chart_types: ['Pie Chart'],
    metadata: { title: 'radial schedule', image: 'img/101.png' },
  },
  {
    record_id: 'ex-102',
    total_score: 0.6451,
    facet_scores: { content: 0, chart_type: 1, layout: 0.5913, illustration: 0, style: 0.2308 },
    chart_types: ['Pie Chart', 'Gauge Chart'],
    metadata: { title: 'donut overview', image: 'img/102.png' },
  },
  {
    record_id: 'ex-103',
    total_score: 0.3377,
    facet_scores: { content: 0, chart_type: 0.5, layout: 0.2441, illustration: 0, style: 0.1093 },
    chart_types: ['Bar Chart'],
    metadata: { title: 'bar digest', image: 'img/103.png' },
  },
];

export const EDITED_SPEC: Spec = {
  ...STUB_SPEC,
  weights: { ...STUB_SPEC.weights, style: 0.8 },
};

export const EDITED_RESULTS: ResultItem[] = [
  { ...STUB_RESULTS[1], total_score: 0.9292 },
  { ...STUB_RESULTS[0], total_score: 0.7171 },
  { ...STUB_RESULTS[2], total_score: 0.1515 },
];

export interface StubLogEntry {
  method: string;
  path: string;
  body: unknown;
}

export interface StubServer {
  log: StubLogEntry[];
  searchCalls: () => StubLogEntry[];
  install: () => void;
  committed: string[];
  /** spec/results returned by the next search; mutate to change the recording */
  nextSearch: { spec: Spec; results: ResultItem[] };
  failNextSearch: boolean;
  lastSpecEcho: Spec | null;
}

export function makeStubServer(): StubServer {
  const stub: StubServer = {
    log: [],
    searchCalls: () => stub.log.filter((entry) => entry.path === '/search'),
    install: () => {
      globalThis.fetch = handler as typeof fetch;
    },
    committed: [],
    nextSearch: { spec: STUB_SPEC, results: STUB_RESULTS },
    failNextSearch: false,
    lastSpecEcho: null,
  };

  function json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    });
  }

  async function handler(input: RequestInfo | URL, init?: RequestInit): Promise<Response> {
    const url = typeof input === 'string' ? input : input instanceof URL ? input.href : input.url;
    const path = url.replace(/^https?:\/\/[^/]+/, '');
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    stub.log.push({ method, path, body });

    if (path === '/search' && method === 'POST') {
      if (stub.failNextSearch) {
        stub.failNextSearch = false;
        return json({ detail: 'EmptySnapshotError: no index loaded' }, 503);
      }
      const response: SearchResponse = {
        session_id: body.session_id ?? null,
        spec: stub.nextSearch.spec,
        notes: [],
        results: stub.nextSearch.results,
        k: body.k ?? 10,
        hard_filter: Boolean(body.hard_filter),
      };
      stub.lastSpecEcho = response.spec;
      return json(response);
    }

    const commitsMatch = path.match(/^\/sessions\/([^/]+)\/commits$/);
    if (commitsMatch && method === 'POST') {
      for (const rid of body.record_ids as string[]) {
        if (!stub.committed.includes(rid)) stub.committed.push(rid);
      }
      const response: CommitsResponse = {
        session_id: commitsMatch[1],
        committed: stub.committed.map((record_id) => ({
          record_id,
          metadata: { title: `title of ${record_id}` },
        })),
      };
      return json(response);
    }

    const uncommitMatch = path.match(/^\/sessions\/([^/]+)\/commits\/([^/]+)$/);
    if (uncommitMatch && method === 'DELETE') {
      stub.committed = stub.committed.filter((rid) => rid !== uncommitMatch[2]);
      return json({
        session_id: uncommitMatch[1],
        committed: stub.committed.map((record_id) => ({ record_id, metadata: {} })),
      });
    }

    const autoselectMatch = path.match(/^\/sessions\/([^/]+)\/autoselect$/);
    if (autoselectMatch && method === 'POST') {
      return json({
        selected_ids: ['ex-102', 'ex-103'],
        note: 'fallback',
        candidates: STUB_RESULTS.map((r) => r.record_id),
      });
    }

    const versionsMatch = path.match(/^\/sessions\/([^/]+)\/svg\/([^/]+)\/versions$/);
    if (versionsMatch && method === 'GET') {
      return json({
        record_id: versionsMatch[2],
        versions: [
          { version: 1, created_at: '2026-01-01T00:00:00Z', svg: '<svg><g id="v1"/></svg>' },
        ],
      });
    }

    const proposeMatch = path.match(/^\/sessions\/([^/]+)\/svg\/([^/]+)\/propose$/);
    if (proposeMatch && method === 'POST') {
      return json({ applied: false, note: 'no edit model configured', version: null });
    }

    const sessionMatch = path.match(/^\/sessions\/([^/]+)$/);
    if (sessionMatch && method === 'GET') {
      const response: SessionResponse = {
        session_id: sessionMatch[1],
        spec: stub.lastSpecEcho,
        committed: stub.committed.map((record_id) => ({
          record_id,
          metadata: { title: `title of ${record_id}` },
        })),
        svg_versions: {},
        history_len: stub.searchCalls().length,
      };
      return json(response);
    }

    return json({ detail: `stub has no route for ${method} ${path}` }, 404);
  }

  return stub;
}

/**
 * Console state: a mirror of the last /search response plus committed
 * exemplars and the undo history. The spec shown in the editor is always
 * exactly the one the service echoed; edits go to the service and the
 * echo replaces the view (no client-side spec math).
 */

import type { CommittedItem, ResultItem, Spec } from './api.js';

export interface GallerySnapshot {
  spec: Spec;
  results: ResultItem[];
}

export interface ConsoleState {
  sessionId: string;
  queryText: string;
  spec: Spec | null;
  results: ResultItem[];
  committed: CommittedItem[];
  suggested: string[]; // AI-select suggestions awaiting confirmation
  svgVersions: Record<string, number>;
  error: string | null;
  history: GallerySnapshot[];
}

export function initialState(sessionId: string): ConsoleState {
  return {
    sessionId,
    queryText: '',
    spec: null,
    results: [],
    committed: [],
    suggested: [],
    svgVersions: {},
    error: null,
    history: [],
  };
}

const SESSION_KEY = 'facetsearch.session';

export function loadOrCreateSessionId(storage: Storage): string {
  const existing = storage.getItem(SESSION_KEY);
  if (existing) return existing;
  const fresh = `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
  storage.setItem(SESSION_KEY, fresh);
  return fresh;
}

/** Record the current gallery before replacing it, for undo. */
export function pushHistory(state: ConsoleState): void {
  if (state.spec) {
    state.history.push({ spec: state.spec, results: state.results });
    if (state.history.length > 50) state.history.shift();
  }
}

/** Restore the previous gallery from cache; true if something restored. */
export function popHistory(state: ConsoleState): boolean {
  const previous = state.history.pop();
  if (!previous) return false;
  state.spec = previous.spec;
  state.results = previous.results;
  return true;
}

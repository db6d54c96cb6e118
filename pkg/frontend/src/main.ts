/**
 * Console controller: wires the query box, spec editor, gallery,
 * committed panel, and version viewer to the service API.
 *
 * Thin-client invariant: the console never computes a score or a spec
 * locally. Every edit is sent to the service and the echoed spec plus
 * ranked results replace the view; undo restores a cached earlier echo.
 */

import { ApiClient } from './api.js';
import type { SessionResponse, SpecEdits, VersionInfo } from './api.js';
import { debounce, LatestWins } from './debounce.js';
import {
  initialState,
  loadOrCreateSessionId,
  popHistory,
  pushHistory,
} from './state.js';
import type { ConsoleState } from './state.js';
import { renderCommittedPanel } from './ui/committed.js';
import { renderGallery } from './ui/gallery.js';
import { renderSpecEditor } from './ui/specEditor.js';
import { renderVersionsPanel } from './ui/versions.js';

export interface ConsoleOptions {
  baseUrl?: string;
  storage?: Storage;
  debounceMs?: number;
  k?: number;
}

export interface ConsoleHandle {
  state: ConsoleState;
  /** resolves when the initial session restore settles */
  ready: Promise<void>;
}

export function mountConsole(root: HTMLElement, options: ConsoleOptions = {}): ConsoleHandle {
  const storage = options.storage ?? window.localStorage;
  const api = new ApiClient(options.baseUrl ?? '');
  const state = initialState(loadOrCreateSessionId(storage));
  const searchGate = new LatestWins();
  const k = options.k ?? 10;

  let hardFilter = false;
  let pendingEdits: SpecEdits = {};
  let openVersions: { recordId: string; versions: VersionInfo[]; note: string | null } | null = null;

  root.innerHTML = '';
  root.className = 'console';

  const queryForm = document.createElement('form');
  queryForm.className = 'console__query';
  const queryInput = document.createElement('input');
  queryInput.type = 'text';
  queryInput.dataset.role = 'query-input';
  queryInput.placeholder = 'Describe the infographic exemplar you want';
  queryForm.appendChild(queryInput);
  const queryButton = document.createElement('button');
  queryButton.type = 'submit';
  queryButton.dataset.role = 'query-submit';
  queryButton.textContent = 'Search';
  queryForm.appendChild(queryButton);
  root.appendChild(queryForm);

  const errorBanner = document.createElement('div');
  errorBanner.className = 'console__error';
  errorBanner.dataset.role = 'error-banner';
  errorBanner.hidden = true;
  root.appendChild(errorBanner);

  const specHolder = document.createElement('div');
  const galleryHolder = document.createElement('div');
  const committedHolder = document.createElement('div');
  const versionsHolder = document.createElement('div');
  root.append(specHolder, galleryHolder, committedHolder, versionsHolder);

  function render(): void {
    errorBanner.hidden = state.error === null;
    errorBanner.textContent = state.error ?? '';

    specHolder.replaceChildren(
      renderSpecEditor(state.spec, hardFilter, setHardFilter, {
        onEdit: queueEdit,
        onUndo: undo,
      }),
    );
    galleryHolder.replaceChildren(
      renderGallery(
        state.results,
        new Set(state.committed.map((c) => c.record_id)),
        new Set(state.suggested),
        { onPin: pin },
      ),
    );
    committedHolder.replaceChildren(
      renderCommittedPanel(state.committed, state.suggested, state.svgVersions, {
        onUnpin: unpin,
        onAiSelect: aiSelect,
        onConfirmSuggestions: confirmSuggestions,
        onShowVersions: showVersions,
      }),
    );
    versionsHolder.replaceChildren();
    if (openVersions) {
      versionsHolder.appendChild(
        renderVersionsPanel(openVersions.recordId, openVersions.versions, openVersions.note, {
          onPropose: propose,
          onClose: () => {
            openVersions = null;
            render();
          },
        }),
      );
    }
  }

  async function runSearch(body: { query?: string; spec_edits?: SpecEdits }): Promise<void> {
    const response = await searchGate.run((signal) =>
      api.search(
        { session_id: state.sessionId, k, hard_filter: hardFilter, ...body },
        signal,
      ),
    );
    if (!response) return; // superseded by a newer request
    pushHistory(state);
    state.spec = response.spec;
    state.results = response.results;
    state.suggested = [];
    state.error = null;
    render();
  }

  function fail(err: unknown): void {
    state.error = err instanceof Error ? err.message : String(err);
    render(); // previous spec/results stay on screen
  }

  queryForm.addEventListener('submit', (event) => {
    event.preventDefault();
    const text = queryInput.value.trim();
    if (!text) return;
    state.queryText = text;
    runSearch({ query: text }).catch(fail);
  });

  const flushEdits = debounce(() => {
    const edits = pendingEdits;
    pendingEdits = {};
    runSearch({ spec_edits: edits }).catch(fail);
  }, options.debounceMs ?? 300);

  function queueEdit(edits: SpecEdits): void {
    pendingEdits = {
      rewrites: { ...pendingEdits.rewrites, ...edits.rewrites },
      weights: { ...pendingEdits.weights, ...edits.weights },
      ...(edits.chart_types ? { chart_types: edits.chart_types } : pendingEdits.chart_types ? { chart_types: pendingEdits.chart_types } : {}),
    };
    flushEdits();
  }

  function setHardFilter(enabled: boolean): void {
    hardFilter = enabled;
    if (state.spec) runSearch({ spec_edits: {} }).catch(fail);
  }

  function undo(): void {
    if (popHistory(state)) {
      state.error = null;
      render(); // cached snapshot, no re-query
    }
  }

  function pin(recordId: string): void {
    api
      .commit(state.sessionId, [recordId])
      .then((response) => {
        state.committed = response.committed;
        state.error = null;
        render();
      })
      .catch(fail);
  }

  function unpin(recordId: string): void {
    api
      .uncommit(state.sessionId, recordId)
      .then((response) => {
        state.committed = response.committed;
        if (openVersions?.recordId === recordId) openVersions = null;
        state.error = null;
        render();
      })
      .catch(fail);
  }

  function aiSelect(): void {
    api
      .autoselect(state.sessionId, k)
      .then((response) => {
        state.suggested = response.selected_ids;
        state.error = null;
        render();
      })
      .catch(fail);
  }

  function confirmSuggestions(): void {
    if (state.suggested.length === 0) return;
    api
      .commit(state.sessionId, state.suggested)
      .then((response) => {
        state.committed = response.committed;
        state.suggested = [];
        state.error = null;
        render();
      })
      .catch(fail);
  }

  function showVersions(recordId: string): void {
    api
      .versions(state.sessionId, recordId)
      .then((response) => {
        openVersions = { recordId, versions: response.versions, note: null };
        render();
      })
      .catch(fail);
  }

  function propose(message: string): void {
    if (!openVersions) return;
    const recordId = openVersions.recordId;
    api
      .propose(state.sessionId, recordId, message)
      .then((response) => {
        if (response.version) {
          state.svgVersions[recordId] = response.version.version;
        }
        return api.versions(state.sessionId, recordId).then((versions) => {
          openVersions = { recordId, versions: versions.versions, note: response.note };
          render();
        });
      })
      .catch(fail);
  }

  function restore(session: SessionResponse): Promise<void> {
    state.committed = session.committed;
    state.svgVersions = session.svg_versions;
    if (session.spec) {
      state.spec = session.spec;
      // refresh the gallery from the service for the restored spec
      return runSearch({ spec_edits: {} });
    }
    render();
    return Promise.resolve();
  }

  const ready = api
    .getSession(state.sessionId)
    .then(restore)
    .catch(() => {
      render(); // service down at load: empty console, error on first action
    });

  render();
  return { state, ready };
}

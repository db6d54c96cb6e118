/**
 * Committed-exemplar panel: the pinned set persisting across turns,
 * unpin controls, and the AI-select flow (suggestions are highlighted in
 * the gallery and only committed after explicit confirmation).
 */

import type { CommittedItem } from '../api.js';

export interface CommittedHandlers {
  onUnpin: (recordId: string) => void;
  onAiSelect: () => void;
  onConfirmSuggestions: () => void;
  onShowVersions: (recordId: string) => void;
}

export function renderCommittedPanel(
  committed: CommittedItem[],
  suggested: string[],
  svgVersions: Record<string, number>,
  handlers: CommittedHandlers,
): HTMLElement {
  const panel = document.createElement('section');
  panel.className = 'committed';
  panel.setAttribute('aria-label', 'Committed exemplars');

  const heading = document.createElement('h2');
  heading.textContent = `Committed (${committed.length})`;
  panel.appendChild(heading);

  const list = document.createElement('ul');
  list.className = 'committed__list';
  for (const item of committed) {
    const row = document.createElement('li');
    row.className = 'committed__item';
    row.dataset.recordId = item.record_id;

    const label = document.createElement('span');
    label.textContent = item.metadata['title'] ?? item.record_id;
    row.appendChild(label);

    const versions = svgVersions[item.record_id] ?? 0;
    const versionsButton = document.createElement('button');
    versionsButton.type = 'button';
    versionsButton.dataset.role = 'versions';
    versionsButton.textContent = versions > 0 ? `Versions (${versions})` : 'Adapt';
    versionsButton.addEventListener('click', () => handlers.onShowVersions(item.record_id));
    row.appendChild(versionsButton);

    const unpin = document.createElement('button');
    unpin.type = 'button';
    unpin.dataset.role = 'unpin';
    unpin.textContent = 'Unpin';
    unpin.addEventListener('click', () => handlers.onUnpin(item.record_id));
    row.appendChild(unpin);

    list.appendChild(row);
  }
  panel.appendChild(list);

  const aiSelect = document.createElement('button');
  aiSelect.type = 'button';
  aiSelect.dataset.role = 'ai-select';
  aiSelect.textContent = 'AI select';
  aiSelect.addEventListener('click', () => handlers.onAiSelect());
  panel.appendChild(aiSelect);

  if (suggested.length > 0) {
    const note = document.createElement('p');
    note.className = 'committed__suggestion-note';
    note.textContent = `Suggested: ${suggested.join(', ')}`;
    panel.appendChild(note);

    const confirm = document.createElement('button');
    confirm.type = 'button';
    confirm.dataset.role = 'confirm-suggestions';
    confirm.textContent = 'Commit suggestions';
    confirm.addEventListener('click', () => handlers.onConfirmSuggestions());
    panel.appendChild(confirm);
  }

  return panel;
}

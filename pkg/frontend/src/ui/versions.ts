/**
 * Version viewer for one committed exemplar: renders the service-held
 * SVG version history inline and offers a propose box that round-trips
 * an edit request through the service's external-model hook.
 */

import type { VersionInfo } from '../api.js';

export interface VersionsHandlers {
  onPropose: (message: string) => void;
  onClose: () => void;
}

export function renderVersionsPanel(
  recordId: string,
  versions: VersionInfo[],
  note: string | null,
  handlers: VersionsHandlers,
): HTMLElement {
  const panel = document.createElement('section');
  panel.className = 'versions';
  panel.setAttribute('aria-label', `Versions of ${recordId}`);
  panel.dataset.recordId = recordId;

  const heading = document.createElement('h2');
  heading.textContent = `Adaptation of ${recordId}`;
  panel.appendChild(heading);

  if (versions.length === 0) {
    const empty = document.createElement('p');
    empty.textContent = 'No versions yet; propose an edit below.';
    panel.appendChild(empty);
  }

  for (const version of versions) {
    const block = document.createElement('figure');
    block.className = 'versions__item';
    block.dataset.version = String(version.version);

    const caption = document.createElement('figcaption');
    caption.textContent = `Version #${version.version} (${version.created_at})`;
    block.appendChild(caption);

    const holder = document.createElement('div');
    holder.className = 'versions__svg';
    holder.innerHTML = version.svg; // service-produced SVG markup
    block.appendChild(holder);
    panel.appendChild(block);
  }

  if (note) {
    const info = document.createElement('p');
    info.className = 'versions__note';
    info.dataset.role = 'propose-note';
    info.textContent = note;
    panel.appendChild(info);
  }

  const form = document.createElement('form');
  form.className = 'versions__propose';
  const input = document.createElement('input');
  input.type = 'text';
  input.dataset.role = 'propose-input';
  input.placeholder = 'Describe an edit (sent to the edit model)';
  form.appendChild(input);
  const send = document.createElement('button');
  send.type = 'submit';
  send.dataset.role = 'propose-send';
  send.textContent = 'Propose edit';
  form.appendChild(send);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    if (input.value.trim()) handlers.onPropose(input.value.trim());
  });
  panel.appendChild(form);

  const close = document.createElement('button');
  close.type = 'button';
  close.dataset.role = 'close-versions';
  close.textContent = 'Close';
  close.addEventListener('click', () => handlers.onClose());
  panel.appendChild(close);

  return panel;
}

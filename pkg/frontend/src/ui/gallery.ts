/**
 * Ranked result gallery: one card per exemplar with the fused score,
 * per-facet score bars, thumbnail reference, and a pin control. Every
 * number shown is copied verbatim from the service response.
 */

import { ALL_FACETS } from '../api.js';
import type { ResultItem } from '../api.js';

export interface GalleryHandlers {
  onPin: (recordId: string) => void;
}

export function renderGallery(
  results: ResultItem[],
  committedIds: Set<string>,
  suggestedIds: Set<string>,
  handlers: GalleryHandlers,
): HTMLElement {
  const grid = document.createElement('section');
  grid.className = 'gallery';
  grid.setAttribute('aria-label', 'Retrieved exemplars');

  if (results.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'gallery__empty';
    empty.textContent = 'No results yet.';
    grid.appendChild(empty);
    return grid;
  }

  results.forEach((item, index) => {
    const card = document.createElement('article');
    card.className = 'card';
    card.dataset.recordId = item.record_id;
    if (suggestedIds.has(item.record_id)) card.classList.add('card--suggested');
    if (committedIds.has(item.record_id)) card.classList.add('card--committed');

    const header = document.createElement('header');
    header.className = 'card__header';
    const rank = document.createElement('span');
    rank.className = 'card__rank';
    rank.textContent = `#${index + 1}`;
    header.appendChild(rank);
    const title = document.createElement('span');
    title.className = 'card__title';
    title.textContent = item.metadata['title'] ?? item.record_id;
    header.appendChild(title);
    card.appendChild(header);

    const image = item.metadata['image'] ?? item.metadata['thumbnail'];
    if (image) {
      const thumb = document.createElement('img');
      thumb.className = 'card__thumb';
      thumb.src = image;
      thumb.alt = item.metadata['title'] ?? item.record_id;
      card.appendChild(thumb);
    }

    const total = document.createElement('div');
    total.className = 'card__total';
    total.dataset.role = 'total-score';
    total.textContent = item.total_score.toFixed(4);
    card.appendChild(total);

    const bars = document.createElement('ul');
    bars.className = 'card__facets';
    for (const facet of ALL_FACETS) {
      const score = item.facet_scores[facet];
      const line = document.createElement('li');
      line.className = 'facet-bar';
      line.dataset.facet = facet;

      const name = document.createElement('span');
      name.className = 'facet-bar__name';
      name.textContent = facet.replace('_', ' ');
      line.appendChild(name);

      const track = document.createElement('span');
      track.className = 'facet-bar__track';
      const fill = document.createElement('span');
      fill.className = 'facet-bar__fill';
      // bar length is a visual mapping of the service score to [0,100]%
      const clamped = Math.max(-1, Math.min(1, score));
      fill.style.width = `${Math.round(((clamped + 1) / 2) * 100)}%`;
      track.appendChild(fill);
      line.appendChild(track);

      const value = document.createElement('span');
      value.className = 'facet-bar__value';
      value.dataset.role = `facet-score-${facet}`;
      value.textContent = score.toFixed(4);
      line.appendChild(value);

      bars.appendChild(line);
    }
    card.appendChild(bars);

    const types = document.createElement('div');
    types.className = 'card__types';
    types.textContent = item.chart_types.join(', ');
    card.appendChild(types);

    const pin = document.createElement('button');
    pin.type = 'button';
    pin.className = 'card__pin';
    pin.dataset.role = 'pin';
    pin.textContent = committedIds.has(item.record_id) ? 'Pinned' : 'Pin';
    pin.disabled = committedIds.has(item.record_id);
    pin.addEventListener('click', () => handlers.onPin(item.record_id));
    card.appendChild(pin);

    grid.appendChild(card);
  });

  return grid;
}

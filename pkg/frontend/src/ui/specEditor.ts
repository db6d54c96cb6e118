/**
 * Editable mirror of the parsed intent spec: one rewrite field and one
 * weight slider per facet, plus the chart-type multi-select and hard
 * filter toggle. Controls always render the spec exactly as the service
 * echoed it; changes are reported upward as spec-edit payloads.
 */

import { ALL_FACETS, CHART_TYPES } from '../api.js';
import type { EmbeddingFacet, Facet, Spec, SpecEdits } from '../api.js';

export interface SpecEditorHandlers {
  onEdit: (edits: SpecEdits) => void;
  onUndo: () => void;
}

const WEIGHT_SLIDER_MAX = 5;

export function renderSpecEditor(
  spec: Spec | null,
  hardFilter: boolean,
  onHardFilter: (enabled: boolean) => void,
  handlers: SpecEditorHandlers,
): HTMLElement {
  const panel = document.createElement('section');
  panel.className = 'spec-editor';
  panel.setAttribute('aria-label', 'Retrieval specification');

  const heading = document.createElement('h2');
  heading.textContent = 'Facet specification';
  panel.appendChild(heading);

  if (!spec) {
    const empty = document.createElement('p');
    empty.className = 'spec-editor__empty';
    empty.textContent = 'Submit a query to see its facet breakdown.';
    panel.appendChild(empty);
    return panel;
  }

  for (const facet of ALL_FACETS) {
    panel.appendChild(facetRow(spec, facet, handlers));
  }

  panel.appendChild(chartTypeSelect(spec, handlers));

  const filterRow = document.createElement('label');
  filterRow.className = 'spec-editor__hard-filter';
  const filterBox = document.createElement('input');
  filterBox.type = 'checkbox';
  filterBox.checked = hardFilter;
  filterBox.dataset.role = 'hard-filter';
  filterBox.addEventListener('change', () => onHardFilter(filterBox.checked));
  filterRow.appendChild(filterBox);
  filterRow.appendChild(document.createTextNode(' exact chart-type filter'));
  panel.appendChild(filterRow);

  const undo = document.createElement('button');
  undo.type = 'button';
  undo.textContent = 'Undo edit';
  undo.dataset.role = 'undo';
  undo.addEventListener('click', () => handlers.onUndo());
  panel.appendChild(undo);

  return panel;
}

function facetRow(spec: Spec, facet: Facet, handlers: SpecEditorHandlers): HTMLElement {
  const row = document.createElement('div');
  row.className = 'facet-row';
  row.dataset.facet = facet;

  const label = document.createElement('span');
  label.className = 'facet-row__name';
  label.textContent = facet.replace('_', ' ');
  row.appendChild(label);

  const isChartType = facet === 'chart_type';
  const rewrite = isChartType ? null : spec.rewrites[facet as EmbeddingFacet];
  const present = isChartType ? spec.chart_types.length > 0 : rewrite !== null;

  if (!isChartType) {
    const input = document.createElement('input');
    input.type = 'text';
    input.className = 'facet-row__rewrite';
    input.dataset.role = `rewrite-${facet}`;
    input.value = rewrite ?? '';
    input.placeholder = present ? '' : 'not specified';
    input.disabled = false;
    input.addEventListener('change', () => {
      const text = input.value.trim();
      handlers.onEdit({ rewrites: { [facet]: text === '' ? null : text } });
    });
    row.appendChild(input);
  }

  const slider = document.createElement('input');
  slider.type = 'range';
  slider.min = '0';
  slider.max = String(WEIGHT_SLIDER_MAX);
  slider.step = '0.05';
  slider.value = String(Math.max(0, spec.weights[facet]));
  slider.dataset.role = `weight-${facet}`;
  slider.disabled = !present; // absent facets are pinned at weight 0
  slider.addEventListener('input', () => {
    const value = Math.max(0, Number(slider.value));
    handlers.onEdit({ weights: { [facet]: value } });
  });
  row.appendChild(slider);

  const weight = document.createElement('span');
  weight.className = 'facet-row__weight';
  weight.dataset.role = `weight-value-${facet}`;
  weight.textContent = String(spec.weights[facet]);
  row.appendChild(weight);

  return row;
}

function chartTypeSelect(spec: Spec, handlers: SpecEditorHandlers): HTMLElement {
  const group = document.createElement('fieldset');
  group.className = 'chart-type-select';
  const legend = document.createElement('legend');
  legend.textContent = 'Chart types';
  group.appendChild(legend);

  const selected = new Set(spec.chart_types);
  for (const name of CHART_TYPES) {
    const id = `ct-${name.toLowerCase().replace(/\s+/g, '-')}`;
    const wrap = document.createElement('label');
    wrap.className = 'chart-type-select__option';
    const box = document.createElement('input');
    box.type = 'checkbox';
    box.id = id;
    box.value = name;
    box.checked = selected.has(name);
    box.addEventListener('change', () => {
      const next = new Set(selected);
      if (box.checked) next.add(name);
      else next.delete(name);
      handlers.onEdit({ chart_types: [...next].sort() });
    });
    wrap.appendChild(box);
    wrap.appendChild(document.createTextNode(` ${name}`));
    group.appendChild(wrap);
  }
  return group;
}

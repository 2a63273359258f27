// Importance table heatmap: features on rows, models on columns, dark red to
// dark green cells, an average column, and per-feature Average toggle buttons
// that disable a feature globally.

import { importanceColor } from "./charts";
import { ImportancePayload, MaskState } from "./api";

export interface HeatmapOptions {
  masks?: MaskState | null;
  onToggleFeature?: (feature: string) => void;
}

export function renderImportanceHeatmap(table: ImportancePayload, opts: HeatmapOptions = {}): HTMLTableElement {
  const el = document.createElement("table");
  el.className = "importance-heatmap";
  el.dataset.method = table.method;

  const head = el.createTHead().insertRow();
  head.insertCell().textContent = "feature";
  for (const mid of table.model_ids) {
    const cell = head.insertCell();
    cell.textContent = `m${mid}`;
    cell.className = "model-col";
  }
  head.insertCell().textContent = "avg";
  head.insertCell().textContent = "";

  const body = el.createTBody();
  table.features.forEach((feature, f) => {
    const row = body.insertRow();
    row.dataset.feature = feature;
    row.insertCell().textContent = feature;
    table.model_ids.forEach((_, m) => {
      const value = table.values[f][m];
      const cell = row.insertCell();
      cell.className = "heat-cell";
      if (value === null) {
        cell.classList.add("missing");
        cell.textContent = "–";
      } else {
        cell.style.backgroundColor = importanceColor(value);
        cell.dataset.value = value.toFixed(3);
        cell.title = `${feature}: ${value.toFixed(3)}`;
      }
    });
    const avg = row.insertCell();
    avg.className = "heat-avg";
    avg.style.backgroundColor = importanceColor(table.row_average[f]);
    avg.textContent = table.row_average[f].toFixed(2);

    const toggleCell = row.insertCell();
    const button = document.createElement("button");
    button.className = "avg-toggle";
    const enabled = featureEnabled(opts.masks ?? null, feature);
    button.textContent = enabled ? "on" : "off";
    button.dataset.feature = feature;
    if (!enabled) row.classList.add("feature-disabled");
    button.addEventListener("click", () => opts.onToggleFeature?.(feature));
    toggleCell.appendChild(button);
  });
  return el;
}

function featureEnabled(masks: MaskState | null, feature: string): boolean {
  if (!masks) return true;
  const idx = masks.features.indexOf(feature);
  return idx < 0 ? true : masks.global[idx];
}

export function legendElement(legend: Record<string, string>): HTMLDivElement {
  const el = document.createElement("div");
  el.className = "importance-legend";
  el.innerHTML =
    `<span class="legend-low" style="background:${legend["0"]}"></span>` +
    `<span>0 (least important)</span>` +
    `<span class="legend-high" style="background:${legend["1"]}"></span>` +
    `<span>1 (most important)</span>`;
  return el;
}

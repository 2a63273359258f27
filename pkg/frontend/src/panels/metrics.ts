// Performance-metric panel: eight weight sliders (0-100, step 5), averaging
// selectors on the four starred metrics, f-beta selector, detailed-search
// toggle, and the Confirm button that kicks off pool evaluation.

import { AVERAGED_METRICS, METRIC_IDS, MetricConfig, MetricId } from "../api";
import { SessionStore, StoreState } from "../state";

const STARRED = new Set<string>(AVERAGED_METRICS);

export class MetricsPanel {
  readonly el: HTMLElement;

  constructor(private store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel metrics-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private currentConfig(): MetricConfig {
    const config = this.store.state.config;
    if (!config) throw new Error("config not loaded");
    return JSON.parse(JSON.stringify(config)) as MetricConfig;
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Performance metrics</h2>";
    if (!state.config) {
      this.el.insertAdjacentHTML("beforeend", "<p class='hint'>create a session to begin</p>");
      return;
    }
    const list = document.createElement("div");
    list.className = "metric-rows";
    for (const metric of METRIC_IDS) {
      list.appendChild(this.metricRow(metric, state));
    }
    this.el.appendChild(list);

    const betaRow = document.createElement("div");
    betaRow.className = "beta-row";
    betaRow.innerHTML = "<label>f-beta β</label>";
    const betaSelect = document.createElement("select");
    betaSelect.className = "beta-select";
    for (const b of [0.5, 1, 2]) {
      const option = document.createElement("option");
      option.value = String(b);
      option.textContent = `β = ${b}`;
      option.selected = state.config.beta === b;
      betaSelect.appendChild(option);
    }
    betaSelect.addEventListener("change", () => {
      const config = this.currentConfig();
      config.beta = Number(betaSelect.value);
      void this.store.updateConfig(config);
    });
    betaRow.appendChild(betaSelect);
    this.el.appendChild(betaRow);

    const detailed = document.createElement("label");
    detailed.className = "detailed-toggle";
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.checked = state.config.detailed_feature_search;
    checkbox.addEventListener("change", () => {
      const config = this.currentConfig();
      config.detailed_feature_search = checkbox.checked;
      void this.store.updateConfig(config);
    });
    detailed.appendChild(checkbox);
    detailed.appendChild(document.createTextNode(" Detailed feature search"));
    this.el.appendChild(detailed);

    const confirm = document.createElement("button");
    confirm.className = "confirm-button";
    confirm.textContent = state.jobPhase ? `working: ${state.jobPhase}` : "Confirm";
    confirm.disabled = state.busy;
    confirm.addEventListener("click", () => void this.store.confirmAndEvaluate());
    this.el.appendChild(confirm);

    if (state.lastError) {
      const err = document.createElement("p");
      err.className = "error";
      err.textContent = state.lastError;
      this.el.appendChild(err);
    }
  }

  private metricRow(metric: MetricId, state: StoreState): HTMLElement {
    const config = state.config!;
    const row = document.createElement("div");
    row.className = "metric-row";
    row.dataset.metric = metric;

    const name = document.createElement("span");
    name.className = "metric-name";
    name.textContent = STARRED.has(metric) ? `${metric} *` : metric;
    row.appendChild(name);

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.step = "5";
    slider.value = String(config.weights[metric]);
    slider.className = "weight-slider";
    slider.addEventListener("change", () => {
      const next = this.currentConfig();
      next.weights[metric] = Number(slider.value);
      void this.store.updateConfig(next);
    });
    row.appendChild(slider);

    const value = document.createElement("span");
    value.className = "weight-value";
    value.textContent = `${config.weights[metric]}%`;
    row.appendChild(value);

    if (STARRED.has(metric)) {
      const select = document.createElement("select");
      select.className = "averaging-select";
      for (const mode of ["micro", "macro", "weighted"]) {
        const option = document.createElement("option");
        option.value = mode;
        option.textContent = mode;
        option.selected = config.averaging[metric as (typeof AVERAGED_METRICS)[number]] === mode;
        select.appendChild(option);
      }
      select.addEventListener("change", () => {
        const next = this.currentConfig();
        next.averaging[metric as (typeof AVERAGED_METRICS)[number]] = select.value as
          | "micro"
          | "macro"
          | "weighted";
        void this.store.updateConfig(next);
      });
      row.appendChild(select);
    }
    return row;
  }
}

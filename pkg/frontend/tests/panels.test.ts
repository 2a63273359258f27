// Contract: all six panels render the recorded heart-disease session.

import { beforeEach, describe, expect, it } from "vitest";
import { SessionStore } from "../src/state";
import { MetricsPanel } from "../src/panels/metrics";
import { AlgorithmsPanel } from "../src/panels/algorithms";
import { WranglingPanel } from "../src/panels/wrangling";
import { ModelsPanel } from "../src/panels/models";
import { HistoryPanel } from "../src/panels/history";
import { ComparisonPanel } from "../src/panels/comparison";
import { fixture, makeBackend, FakeBackend } from "./harness";

let backend: FakeBackend;
let store: SessionStore;

beforeEach(async () => {
  document.body.innerHTML = "";
  backend = makeBackend();
  store = new SessionStore(backend.api);
  await store.hydrate("fixture");
});

describe("metrics panel", () => {
  it("renders eight step-5 sliders plus the four averaging selectors", () => {
    const panel = new MetricsPanel(store);
    document.body.appendChild(panel.el);
    const sliders = panel.el.querySelectorAll<HTMLInputElement>(".weight-slider");
    expect(sliders).toHaveLength(8);
    for (const slider of sliders) {
      expect(slider.step).toBe("5");
      expect(slider.min).toBe("0");
      expect(slider.max).toBe("100");
    }
    expect(panel.el.querySelectorAll(".averaging-select")).toHaveLength(4);
    expect(panel.el.querySelector(".beta-select")).not.toBeNull();
    expect(panel.el.querySelector(".confirm-button")).not.toBeNull();
    const row = panel.el.querySelector<HTMLElement>("[data-metric='precision'] .weight-value");
    expect(row?.textContent).toBe("80%"); // the recorded narrative weights
  });
});

describe("algorithms panel", () => {
  it("renders boxplots for every evaluated algorithm and the radar with totals in brackets", () => {
    const panel = new AlgorithmsPanel(store);
    document.body.appendChild(panel.el);
    const rows = panel.el.querySelectorAll(".box-row");
    expect(rows.length).toBe(Object.keys(fixture("distributions").distributions).length);
    const radarLabels = Array.from(panel.el.querySelectorAll(".radar-label")).map((t) => t.textContent);
    expect(radarLabels).toContain("knn [2]");
    expect(panel.el.querySelector(".radar-full")).not.toBeNull();
    expect(panel.el.querySelector(".radar-selection")).not.toBeNull();
    const bars = panel.el.querySelectorAll(".bar-baseline");
    expect(bars.length).toBeGreaterThan(0);
  });

  it("opens the hyperparameter filter when a boxplot row is clicked", async () => {
    const panel = new AlgorithmsPanel(store);
    document.body.appendChild(panel.el);
    await panel.openFilter("knn");
    const host = panel.el.querySelector<HTMLElement>(".hyperparam-filter");
    expect(host?.dataset.algo).toBe("knn");
    expect(host?.querySelectorAll(".pc-line").length).toBe(fixture("models_knn").models.length);
  });
});

describe("wrangling panel", () => {
  it("renders the snapshot info, history list, and importance heatmap", async () => {
    await store.project("data", "mds");
    await store.computeImportance("univariate");
    const panel = new WranglingPanel(store);
    document.body.appendChild(panel.el);
    expect(panel.el.querySelector(".snapshot-info")?.textContent).toContain("diseased: 165");
    const items = panel.el.querySelectorAll(".wrangle-history li");
    expect(items.length).toBe(fixture("wrangle_history").history.length);
    const heatmapRows = panel.el.querySelectorAll(".importance-heatmap tbody tr");
    expect(heatmapRows).toHaveLength(13);
    expect(panel.el.querySelector(".importance-legend")).not.toBeNull();
    const scatter = panel.el.querySelectorAll(".data-space circle");
    expect(scatter.length).toBe(fixture("projection_data").coords.length);
  });
});

describe("models panel", () => {
  it("renders the viridis models space with per-metric boxplots and the histogram pair", async () => {
    await store.project("models", "mds");
    await store.project("predictions", "mds");
    await store.loadHistograms([0, 1, 2]);
    const panel = new ModelsPanel(store);
    document.body.appendChild(panel.el);
    const modelPoints = panel.el.querySelectorAll(".model-space circle");
    expect(modelPoints.length).toBe(fixture("projection_models").coords.length);
    expect(panel.el.querySelector(".scalar-semantic")?.textContent).toContain("combined score");
    expect(panel.el.querySelectorAll(".model-space .box-row")).toHaveLength(8);
    expect(panel.el.querySelectorAll(".hist-all").length).toBe(20);
    expect(panel.el.querySelectorAll(".hist-selected").length).toBe(20);
  });
});

describe("history panel", () => {
  it("renders circular barcharts with parent links and activate buttons", async () => {
    await store.refreshStackViews();
    const panel = new HistoryPanel(store);
    document.body.appendChild(panel.el);
    const cards = panel.el.querySelectorAll(".stack-card");
    expect(cards).toHaveLength(2);
    const second = panel.el.querySelector("[data-stack='S2'] h3");
    expect(second?.textContent).toBe("S2 ← S1");
    expect(panel.el.querySelectorAll(".activate-stack")).toHaveLength(2);
    expect(panel.el.querySelectorAll(".export-stack")).toHaveLength(2);
    const arcs = panel.el.querySelectorAll("[data-stack='S1'] path");
    expect(arcs).toHaveLength(4);
  });
});

describe("comparison panel", () => {
  it("renders four active lines and stored dots at store steps", async () => {
    await store.refreshStackViews();
    const panel = new ComparisonPanel(store);
    document.body.appendChild(panel.el);
    expect(panel.el.querySelectorAll(".line-active")).toHaveLength(4);
    const steps = fixture("comparison").steps;
    const storedSteps = steps.filter((s: any) => s.stored !== null).length;
    expect(panel.el.querySelectorAll(".dot-stored").length).toBe(4 * storedSteps);
    expect(panel.el.querySelectorAll(".step-labels li")).toHaveLength(steps.length);
  });
});

// Contract: lasso emits index sets, slider changes re-score without
// retraining, re-coloring never re-requests coordinates, and activating a
// stored stack restores the wrangling panel's snapshot view.

import { beforeEach, describe, expect, it } from "vitest";
import { SessionStore } from "../src/state";
import { MetricsPanel } from "../src/panels/metrics";
import { ModelsPanel } from "../src/panels/models";
import { WranglingPanel } from "../src/panels/wrangling";
import { HistoryPanel } from "../src/panels/history";
import { callsMatching, fixture, makeBackend, FakeBackend } from "./harness";

let backend: FakeBackend;
let store: SessionStore;

beforeEach(async () => {
  document.body.innerHTML = "";
  backend = makeBackend();
  store = new SessionStore(backend.api);
  await store.hydrate("fixture");
});

describe("models-space lasso", () => {
  it("posts exactly the model ids inside the lasso rectangle", async () => {
    await store.project("models", "mds");
    const panel = new ModelsPanel(store);
    document.body.appendChild(panel.el);

    const projection = fixture("projection_models");
    const ids: number[] = projection.point_class;
    const coords: [number, number][] = projection.coords;
    // a rectangle covering the left half of the point cloud
    const xs = coords.map((c) => c[0]);
    const ys = coords.map((c) => c[1]);
    const midX = (Math.min(...xs) + Math.max(...xs)) / 2;
    const expected = ids.filter((_, i) => coords[i][0] <= midX);
    expect(expected.length).toBeGreaterThan(0);
    expect(expected.length).toBeLessThan(ids.length);

    backend.calls.length = 0;
    const emitted = panel.lassoModels(Math.min(...xs) - 1, Math.min(...ys) - 1, midX, Math.max(...ys) + 1);
    expect([...emitted].sort((a, b) => a - b)).toEqual([...expected].sort((a, b) => a - b));

    await new Promise((r) => setTimeout(r, 5));
    const puts = callsMatching(backend, "PUT", /\/selection$/);
    expect(puts).toHaveLength(1);
    expect([...puts[0].body.model_ids].sort((a: number, b: number) => a - b)).toEqual(
      [...expected].sort((a, b) => a - b),
    );
  });

  it("predictions-space lasso emits instance indices and requests histograms", async () => {
    await store.project("predictions", "mds");
    const panel = new ModelsPanel(store);
    document.body.appendChild(panel.el);
    backend.calls.length = 0;
    const indices = panel.lassoInstances(-1e9, -1e9, 1e9, 1e9); // everything
    expect(indices).toHaveLength(fixture("projection_predictions").coords.length);
    await new Promise((r) => setTimeout(r, 5));
    const posts = callsMatching(backend, "POST", /\/histograms$/);
    expect(posts).toHaveLength(1);
    expect(posts[0].body.selected_instances).toEqual(indices);
  });
});

describe("metric slider re-score", () => {
  it("puts the config and refreshes boxplots without starting an evaluation job", async () => {
    const panel = new MetricsPanel(store);
    document.body.appendChild(panel.el);
    const before = JSON.stringify(store.state.distributions);

    backend.calls.length = 0;
    const slider = panel.el.querySelector<HTMLInputElement>("[data-metric='accuracy'] .weight-slider")!;
    slider.value = "55";
    slider.dispatchEvent(new Event("change"));
    await new Promise((r) => setTimeout(r, 10));

    expect(callsMatching(backend, "PUT", /\/metric-config$/)).toHaveLength(1);
    expect(callsMatching(backend, "POST", /\/evaluate$/)).toHaveLength(0); // no retraining
    expect(callsMatching(backend, "GET", /\/pool\/distributions$/)).toHaveLength(1);
    expect(JSON.stringify(store.state.distributions)).not.toBe(before); // boxplots updated
    expect(store.state.config?.weights.accuracy).toBe(55);
  });
});

describe("models-space recolor", () => {
  it("changes the scalar but never re-requests coordinates", async () => {
    await store.project("models", "mds");
    const before = store.state.projections["models"];
    backend.calls.length = 0;

    const panel = new ModelsPanel(store);
    document.body.appendChild(panel.el);
    const selector = panel.el.querySelector<HTMLSelectElement>(".color-metric")!;
    selector.value = "mcc";
    selector.dispatchEvent(new Event("change"));
    await new Promise((r) => setTimeout(r, 10));

    expect(callsMatching(backend, "POST", /\/projections\/models\/recolor$/)).toHaveLength(1);
    expect(callsMatching(backend, "POST", /\/projections\/models$/)).toHaveLength(0);
    expect(callsMatching(backend, "GET", /\/projections\/models$/)).toHaveLength(0);
    const after = store.state.projections["models"];
    expect(after.coords).toEqual(before.coords); // same layout
    expect(after.point_scalar).not.toEqual(before.point_scalar);
    expect(after.scalar_semantic).toBe("normalized mcc");
  });
});

describe("history activate", () => {
  it("restores the wrangling panel's snapshot view", async () => {
    await store.refreshStackViews();
    const historyPanel = new HistoryPanel(store);
    const wranglingPanel = new WranglingPanel(store);
    document.body.appendChild(historyPanel.el);
    document.body.appendChild(wranglingPanel.el);

    // before activation the session sits on the post-removal snapshot
    expect(wranglingPanel.el.querySelector(".active-snapshot")?.getAttribute("data-snapshot")).toBe(
      fixture("wrangle_history").active_snapshot_id,
    );

    backend.calls.length = 0;
    historyPanel.el
      .querySelector<HTMLButtonElement>("[data-stack='S1'] .activate-stack")!
      .click();
    await new Promise((r) => setTimeout(r, 20));

    expect(callsMatching(backend, "POST", /\/stack\/activate$/)).toHaveLength(1);
    const restoredId = fixture("wrangle_history_after_activate").active_snapshot_id;
    expect(wranglingPanel.el.querySelector(".active-snapshot")?.getAttribute("data-snapshot")).toBe(
      restoredId,
    );
    expect(wranglingPanel.el.querySelector(".snapshot-info")?.textContent).toContain("303 instances");
  });
});

describe("refresh safety", () => {
  it("hydrate rebuilds every view from reads only", () => {
    expect(store.state.summary?.instances).toBe(303);
    expect(store.state.selection.length).toBeGreaterThan(0);
    expect(Object.keys(store.state.distributions).length).toBeGreaterThan(0);
    expect(store.state.wrangleHistory.length).toBeGreaterThan(0);
    expect(store.state.masks?.features).toHaveLength(13);
    const mutations = backend.calls.filter((c) => c.method !== "GET");
    expect(mutations).toHaveLength(0);
  });
});

// Stored-stack history: one circular barchart per stack with its parent link,
// an activate button, and Knowledge Extraction (export JSON download).

import { renderCircularStack } from "../charts";
import { SessionStore, StoreState } from "../state";

export class HistoryPanel {
  readonly el: HTMLElement;

  constructor(private store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel history-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Stacking history</h2>";
    if (state.activePerformance) {
      const active = document.createElement("p");
      active.className = "active-performance";
      active.textContent =
        "active: " +
        Object.entries(state.activePerformance)
          .map(([metric, value]) => `${metric} ${(value * 100).toFixed(1)}%`)
          .join("  ");
      this.el.appendChild(active);
    }
    const controls = document.createElement("div");
    const build = document.createElement("button");
    build.textContent = "Execute stacking ensemble";
    build.className = "build-stack";
    build.disabled = state.busy;
    build.addEventListener("click", () => void this.store.buildStack());
    controls.appendChild(build);
    const storeButton = document.createElement("button");
    storeButton.textContent = "store stack";
    storeButton.className = "store-stack";
    storeButton.disabled = state.busy;
    storeButton.addEventListener("click", () => void this.store.storeStack());
    controls.appendChild(storeButton);
    this.el.appendChild(controls);

    const grid = document.createElement("div");
    grid.className = "stack-grid";
    for (const stack of state.stacks) {
      const card = document.createElement("div");
      card.className = "stack-card";
      card.dataset.stack = stack.stack_id;
      const title = document.createElement("h3");
      title.textContent = stack.parent_stack_id
        ? `${stack.stack_id} ← ${stack.parent_stack_id}`
        : stack.stack_id;
      card.appendChild(title);
      card.appendChild(renderCircularStack(stack.metrics));
      const meta = document.createElement("p");
      meta.className = "stack-meta";
      meta.textContent = `${stack.model_count} models, ${stack.algorithms_used.length} algorithms`;
      card.appendChild(meta);

      const activate = document.createElement("button");
      activate.textContent = `Stacking Ensemble ${stack.stack_id.slice(1)}`;
      activate.className = "activate-stack";
      activate.disabled = state.busy;
      activate.addEventListener("click", () => void this.store.activateStack(stack.stack_id));
      card.appendChild(activate);

      const extract = document.createElement("button");
      extract.textContent = "Knowledge Extraction";
      extract.className = "export-stack";
      extract.addEventListener("click", () => void this.download(stack.stack_id));
      card.appendChild(extract);
      grid.appendChild(card);
    }
    if (!state.stacks.length) {
      grid.insertAdjacentHTML("beforeend", "<p class='hint'>no stored stacks yet</p>");
    }
    this.el.appendChild(grid);
  }

  async download(stackId: string): Promise<void> {
    const doc = await this.store.downloadExport(stackId);
    const blob = new Blob([JSON.stringify(doc, null, 1)], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = `${stackId.toLowerCase()}.json`;
    a.click();
    URL.revokeObjectURL(url);
  }
}

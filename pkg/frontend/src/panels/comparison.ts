// Step-wise performance comparison: the four monitored metrics as blue lines
// for the active stack, red dots where stacks were stored.

import { renderComparisonLines } from "../charts";
import { SessionStore, StoreState } from "../state";

const FOUR = ["accuracy", "precision", "recall", "f1"];

export class ComparisonPanel {
  readonly el: HTMLElement;

  constructor(store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel comparison-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Performance comparison</h2>";
    if (!state.comparison.length) {
      this.el.insertAdjacentHTML("beforeend", "<p class='hint'>build a stack to start the series</p>");
      return;
    }
    this.el.appendChild(
      renderComparisonLines(
        state.comparison.map((step) => ({
          step: step.step_index,
          active: step.active,
          stored: step.stored,
        })),
        FOUR,
      ),
    );
    const labels = document.createElement("ol");
    labels.className = "step-labels";
    labels.start = 0;
    for (const step of state.comparison) {
      const item = document.createElement("li");
      item.textContent = step.stored ? `${step.label} → ${step.stored.stack_id}` : step.label;
      labels.appendChild(item);
    }
    this.el.appendChild(labels);
  }
}

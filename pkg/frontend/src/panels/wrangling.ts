// Data wrangling: data-space scatterplot (point size = difficulty, color =
// class, lasso selects instances), feature parallel coordinates, the
// remove / merge / compose action menu, the restorable history list, and the
// importance table heatmap with its red-green legend and Average toggles.

import { renderScatter, ScatterHandle } from "../charts";
import { legendElement, renderImportanceHeatmap } from "../heatmap";
import { renderParcoords } from "../parcoords";
import { SessionStore, StoreState } from "../state";

const CLASS_COLORS = ["#4477AA", "#EE6677", "#228833", "#CCBB44"];

export class WranglingPanel {
  readonly el: HTMLElement;
  private scatter: ScatterHandle | null = null;
  private lassoed: number[] = [];
  private importanceMethod = "univariate";

  constructor(private store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel wrangling-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Data wrangling</h2>";
    if (!state.summary) {
      this.el.insertAdjacentHTML("beforeend", "<p class='hint'>no session</p>");
      return;
    }
    const info = document.createElement("p");
    info.className = "snapshot-info";
    info.textContent =
      `snapshot ${state.activeSnapshotId ?? "?"} — ${state.summary.instances} instances, ` +
      Object.entries(state.summary.classes)
        .map(([name, count]) => `${name}: ${count}`)
        .join(", ");
    this.el.appendChild(info);

    this.renderScatterBlock(state);
    this.renderActions(state);
    this.renderParallelCoordinates(state);
    this.renderHistory(state);
    this.renderImportance(state);
  }

  private renderScatterBlock(state: StoreState): void {
    const block = document.createElement("div");
    block.className = "data-space";
    const controls = document.createElement("div");
    for (const method of ["tsne", "mds", "umap"]) {
      const button = document.createElement("button");
      button.textContent = `project (${method})`;
      button.className = `project-data project-${method}`;
      button.disabled = state.busy;
      button.addEventListener("click", () => void this.store.project("data", method));
      controls.appendChild(button);
    }
    block.appendChild(controls);

    const projection = state.projections["data"];
    if (projection) {
      const points = projection.coords.map(([x, y], i) => ({
        index: i,
        x,
        y,
        scalar: projection.point_scalar[i] ?? 0,
        cls: projection.point_class ? projection.point_class[i] : null,
      }));
      this.scatter = renderScatter(points, {
        sizeFromScalar: true,
        classColors: CLASS_COLORS,
        onLasso: (indices) => {
          this.lassoed = indices;
          const count = this.el.querySelector(".lasso-count");
          if (count) count.textContent = `${indices.length} selected`;
        },
      });
      block.appendChild(this.scatter.svg);
      const count = document.createElement("span");
      count.className = "lasso-count";
      count.textContent = `${this.lassoed.length} selected`;
      block.appendChild(count);
      if (projection.notice) {
        const notice = document.createElement("p");
        notice.className = "notice";
        notice.textContent = projection.notice;
        block.appendChild(notice);
      }
    } else {
      block.insertAdjacentHTML("beforeend", "<p class='hint'>no data projection yet</p>");
    }
    this.el.appendChild(block);
  }

  private renderActions(state: StoreState): void {
    const menu = document.createElement("div");
    menu.className = "instance-actions";
    const actions: [string, () => void][] = [
      ["remove", () => void this.store.wrangle("remove", this.lassoed)],
      ["merge (mean)", () => void this.store.wrangle("merge", this.lassoed, "mean")],
      ["merge (median)", () => void this.store.wrangle("merge", this.lassoed, "median")],
      ["compose", () => void this.store.wrangle("compose", this.lassoed, "mean")],
    ];
    for (const [label, handler] of actions) {
      const button = document.createElement("button");
      button.textContent = label;
      button.className = `wrangle-${label.split(" ")[0]}`;
      button.disabled = state.busy;
      button.addEventListener("click", handler);
      menu.appendChild(button);
    }
    this.el.appendChild(menu);
  }

  private renderParallelCoordinates(state: StoreState): void {
    if (!state.dataTable) return;
    const axes = state.dataTable.feature_names.map((name, j) => ({
      name,
      values: state.dataTable!.rows.map((row) => row[j]),
    }));
    const classIndex = new Map<string, number>();
    for (const label of state.dataTable.labels) {
      if (!classIndex.has(label)) classIndex.set(label, classIndex.size);
    }
    const handle = renderParcoords(axes, {
      width: 560,
      colors: state.dataTable.labels.map((l) => CLASS_COLORS[classIndex.get(l)! % CLASS_COLORS.length]),
      onFilter: (rows) => {
        this.lassoed = rows;
        const count = this.el.querySelector(".lasso-count");
        if (count) count.textContent = `${rows.length} selected`;
      },
    });
    this.el.appendChild(handle.svg);
  }

  private renderHistory(state: StoreState): void {
    const list = document.createElement("ul");
    list.className = "wrangle-history";
    for (const snap of state.wrangleHistory) {
      const item = document.createElement("li");
      item.dataset.snapshot = snap.snapshot_id;
      if (snap.snapshot_id === state.activeSnapshotId) item.classList.add("active-snapshot");
      item.textContent = `${snap.snapshot_id}: ${snap.provenance} (${snap.instances})`;
      const restore = document.createElement("button");
      restore.textContent = "restore";
      restore.className = "restore-snapshot";
      restore.disabled = state.busy;
      restore.addEventListener("click", () => void this.store.restoreSnapshot(snap.snapshot_id));
      item.appendChild(restore);
      list.appendChild(item);
    }
    this.el.appendChild(list);
  }

  private renderImportance(state: StoreState): void {
    const block = document.createElement("div");
    block.className = "importance-block";
    const controls = document.createElement("div");
    for (const method of ["univariate", "permutation", "accuracy"]) {
      const button = document.createElement("button");
      button.textContent = `compute ${method}`;
      button.className = `compute-${method}`;
      button.disabled = state.busy;
      button.addEventListener("click", () => {
        this.importanceMethod = method;
        void this.store.computeImportance(method);
      });
      controls.appendChild(button);
    }
    const combined = document.createElement("button");
    combined.textContent = "combine computed";
    combined.className = "compute-combined";
    combined.addEventListener("click", () => {
      const methods = Object.keys(state.importance).filter((m) => m !== "combined");
      if (methods.length) {
        this.importanceMethod = "combined";
        void this.store.showCombinedImportance(methods);
      }
    });
    controls.appendChild(combined);
    block.appendChild(controls);

    const table = state.importance[this.importanceMethod] ?? state.importance["univariate"];
    if (table) {
      block.appendChild(legendElement(table.legend));
      block.appendChild(
        renderImportanceHeatmap(table, {
          masks: state.masks,
          onToggleFeature: (feature) => void this.store.toggleGlobalFeature(feature),
        }),
      );
    }
    this.el.appendChild(block);
  }

  /** Test hook: rectangle lasso in data coordinates of the data projection. */
  applyLasso(x0: number, y0: number, x1: number, y1: number): number[] {
    if (!this.scatter) throw new Error("no data projection rendered");
    return this.scatter.lassoRect(x0, y0, x1, y1);
  }

  get lassoSelection(): number[] {
    return [...this.lassoed];
  }
}

// Model exploration: the models' space scatterplot (Viridis scalar coloring,
// metric selector recolors without re-layout, lasso prunes the selection),
// per-metric boxplots, the predictions' space scatterplot, and the mirrored
// 5%-bin histogram pair for a lassoed instance subset.

import { METRIC_IDS } from "../api";
import { renderBoxplots, renderMirroredHistograms, renderScatter, ScatterHandle } from "../charts";
import { SessionStore, StoreState } from "../state";

export class ModelsPanel {
  readonly el: HTMLElement;
  private modelScatter: ScatterHandle | null = null;
  private predictionScatter: ScatterHandle | null = null;
  private modelIds: number[] = [];

  constructor(private store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel models-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Models</h2>";
    this.renderModelSpace(state);
    this.renderPredictionSpace(state);
  }

  private renderModelSpace(state: StoreState): void {
    const block = document.createElement("div");
    block.className = "model-space";

    const controls = document.createElement("div");
    const project = document.createElement("button");
    project.textContent = "project models (mds)";
    project.className = "project-models";
    project.disabled = state.busy;
    project.addEventListener("click", () => void this.store.project("models", "mds"));
    controls.appendChild(project);

    const selector = document.createElement("select");
    selector.className = "color-metric";
    const combined = document.createElement("option");
    combined.value = "";
    combined.textContent = "combined score";
    selector.appendChild(combined);
    for (const metric of METRIC_IDS) {
      const option = document.createElement("option");
      option.value = metric;
      option.textContent = metric;
      selector.appendChild(option);
    }
    selector.addEventListener("change", () => {
      // recolor only: coordinates are never re-requested
      void this.store.recolorModels(selector.value === "" ? null : selector.value);
    });
    controls.appendChild(selector);
    block.appendChild(controls);

    const projection = state.projections["models"];
    if (projection) {
      this.modelIds = (projection.point_class ?? []).map((v) => Number(v));
      const points = projection.coords.map(([x, y], i) => ({
        index: this.modelIds[i] ?? i,
        x,
        y,
        scalar: projection.point_scalar[i] ?? 0,
        cls: null,
      }));
      this.modelScatter = renderScatter(points, {
        colorFromScalar: true,
        onLasso: (ids) => {
          if (ids.length) void this.store.selectModels(ids);
        },
      });
      block.appendChild(this.modelScatter.svg);
      const semantics = document.createElement("p");
      semantics.className = "scalar-semantic";
      semantics.textContent = `color: ${projection.scalar_semantic} (viridis)`;
      block.appendChild(semantics);

      if (projection.metric_boxplots) {
        block.appendChild(
          renderBoxplots(
            Object.entries(projection.metric_boxplots).map(([metric, stats]) => ({
              label: metric,
              color: "#777",
              stats,
            })),
            { height: 8 * 26 + 30 },
          ),
        );
      }
    } else {
      block.insertAdjacentHTML("beforeend", "<p class='hint'>no models projection yet</p>");
    }
    this.el.appendChild(block);
  }

  private renderPredictionSpace(state: StoreState): void {
    const block = document.createElement("div");
    block.className = "prediction-space";
    const project = document.createElement("button");
    project.textContent = "project predictions (mds)";
    project.className = "project-predictions";
    project.disabled = state.busy;
    project.addEventListener("click", () => void this.store.project("predictions", "mds"));
    block.appendChild(project);

    const projection = state.projections["predictions"];
    if (projection) {
      const points = projection.coords.map(([x, y], i) => ({
        index: i,
        x,
        y,
        scalar: projection.point_scalar[i] ?? 0,
        cls: projection.point_class ? projection.point_class[i] : null,
      }));
      this.predictionScatter = renderScatter(points, {
        sizeFromScalar: true,
        onLasso: (indices) => {
          if (indices.length) void this.store.loadHistograms(indices);
        },
      });
      block.appendChild(this.predictionScatter.svg);
    } else {
      block.insertAdjacentHTML("beforeend", "<p class='hint'>no predictions projection yet</p>");
    }

    if (state.histograms) {
      block.appendChild(renderMirroredHistograms(state.histograms.all, state.histograms.selected));
    }
    this.el.appendChild(block);
  }

  /** Test hook: lasso on the models' space; emits the pruned model-id set. */
  lassoModels(x0: number, y0: number, x1: number, y1: number): number[] {
    if (!this.modelScatter) throw new Error("no models projection rendered");
    return this.modelScatter.lassoRect(x0, y0, x1, y1);
  }

  /** Test hook: lasso on the predictions' space; emits instance indices. */
  lassoInstances(x0: number, y0: number, x1: number, y1: number): number[] {
    if (!this.predictionScatter) throw new Error("no predictions projection rendered");
    return this.predictionScatter.lassoRect(x0, y0, x1, y1);
  }
}

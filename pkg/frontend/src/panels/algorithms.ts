// Algorithm exploration: per-algorithm boxplots of the combined score
// (click a row to open the hyperparameter parallel-coordinates filter),
// per-class overlapping bars with the selection overlay, and the radar
// coverage chart with totals in brackets.

import { ModelInfo } from "../api";
import { renderBoxplots, renderPerClassBars, renderRadar, BoxDatum, PerClassBar } from "../charts";
import { renderParcoords, ParcoordsHandle } from "../parcoords";
import { SessionStore, StoreState } from "../state";

export class AlgorithmsPanel {
  readonly el: HTMLElement;
  private openAlgo: string | null = null;
  private algoModels: ModelInfo[] = [];
  private parcoords: ParcoordsHandle | null = null;
  private filteredIds: number[] = [];

  constructor(private store: SessionStore) {
    this.el = document.createElement("section");
    this.el.className = "panel algorithms-panel";
    store.subscribe((state) => this.render(state));
    this.render(store.state);
  }

  private colorOf(algo: string): string {
    return this.store.state.algorithms.find((a) => a.algo_id === algo)?.color ?? "#555";
  }

  private render(state: StoreState): void {
    this.el.innerHTML = "<h2>Algorithms</h2>";
    if (state.algorithms.length === 0) {
      this.el.insertAdjacentHTML("beforeend", "<p class='hint'>no session</p>");
      return;
    }

    const picker = document.createElement("div");
    picker.className = "algo-picker";
    for (const algo of state.algorithms) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = algo.algo_id;
      box.className = "algo-check";
      label.appendChild(box);
      label.appendChild(document.createTextNode(algo.algo_id));
      picker.appendChild(label);
    }
    const apply = document.createElement("button");
    apply.textContent = "select algorithms";
    apply.className = "select-algos";
    apply.disabled = state.busy;
    apply.addEventListener("click", () => {
      const chosen = Array.from(picker.querySelectorAll<HTMLInputElement>(".algo-check:checked")).map(
        (c) => c.value,
      );
      if (chosen.length) void this.store.selectAlgorithms(chosen);
    });
    picker.appendChild(apply);
    this.el.appendChild(picker);

    const boxData: BoxDatum[] = Object.entries(state.distributions).map(([algo, stats]) => ({
      label: algo,
      color: this.colorOf(algo),
      stats,
    }));
    if (boxData.length) {
      this.el.appendChild(
        renderBoxplots(boxData, { onClick: (algo) => void this.openFilter(algo) }),
      );
    } else {
      this.el.insertAdjacentHTML("beforeend", "<p class='hint'>confirm metrics to evaluate the pool</p>");
    }

    if (this.openAlgo) this.renderFilter();

    const bars: PerClassBar[] = [];
    for (const [algo, classes] of Object.entries(state.perClass)) {
      for (const [cls, entry] of Object.entries(classes)) {
        bars.push({
          algo,
          color: this.colorOf(algo),
          cls,
          baseline: entry.baseline.f1,
          selected: entry.selected ? entry.selected.f1 : null,
        });
      }
    }
    if (bars.length) this.el.appendChild(renderPerClassBars(bars));

    const coverage = Object.entries(state.coverage);
    if (coverage.length) {
      this.el.appendChild(
        renderRadar(
          coverage.map(([algo, c]) => ({
            algo,
            label: `${algo} [${c.total_count}]`,
            fraction: c.fraction,
          })),
        ),
      );
    }
  }

  async openFilter(algo: string): Promise<void> {
    this.openAlgo = algo;
    const models = await this.store.api.models(this.store.state.sessionId!, algo);
    this.algoModels = models.models;
    this.filteredIds = this.algoModels.map((m) => m.model_id);
    this.render(this.store.state);
  }

  private renderFilter(): void {
    const host = document.createElement("div");
    host.className = "hyperparam-filter";
    host.dataset.algo = this.openAlgo!;
    const title = document.createElement("h3");
    title.textContent = `${this.openAlgo} hyperparameters`;
    host.appendChild(title);

    const paramNames = Object.keys(this.algoModels[0]?.params ?? {});
    const axes = paramNames.map((name) => ({
      name,
      values: this.algoModels.map((m) => {
        const v = m.params[name];
        return typeof v === "number" ? v : v === null ? null : String(v);
      }),
    }));
    this.parcoords = renderParcoords(axes, {
      colors: this.algoModels.map(() => this.colorOf(this.openAlgo!)),
      onFilter: (rows) => {
        this.filteredIds = rows.map((i) => this.algoModels[i].model_id);
      },
    });
    host.appendChild(this.parcoords.svg);

    const use = document.createElement("button");
    use.className = "apply-filter";
    use.textContent = "select filtered models";
    use.addEventListener("click", () => void this.applyFilter());
    host.appendChild(use);
    this.el.appendChild(host);
  }

  /** Replace this algorithm's contribution to the selection with the filter result. */
  async applyFilter(): Promise<void> {
    if (!this.openAlgo) return;
    const algoIds = new Set(this.algoModels.map((m) => m.model_id));
    const others = this.store.state.selection.filter((mid) => !algoIds.has(mid));
    await this.store.selectModels([...others, ...this.filteredIds]);
  }

  /** Test hook: constrain one numeric hyperparameter axis. */
  brushHyperparam(name: string, range: [number, number] | null): number[] {
    if (!this.parcoords) throw new Error("no filter open");
    const rows = this.parcoords.brushAxis(name, range);
    this.filteredIds = rows.map((i) => this.algoModels[i].model_id);
    return this.filteredIds;
  }
}

// Central session store. Every user action maps to exactly one mutating API
// call; panels re-render from the store, which can be fully rebuilt from GET
// endpoints (refresh-safe). One mutation is in flight at a time, mirroring the
// server's 409 contract.

import {
  Api,
  ComparisonStep,
  CoverageEntry,
  DatasetSummary,
  FeatureTable,
  HistogramPayload,
  ImportancePayload,
  MaskState,
  MetricConfig,
  BoxStats,
  AlgorithmInfo,
  PerClassEntry,
  ProjectionPayload,
  SnapshotInfo,
  StackSummary,
  JobStatus,
} from "./api";

export interface StoreState {
  sessionId: string | null;
  summary: DatasetSummary | null;
  config: MetricConfig | null;
  algorithms: AlgorithmInfo[];
  selection: number[];
  distributions: Record<string, BoxStats>;
  perClass: Record<string, Record<string, PerClassEntry>>;
  coverage: Record<string, CoverageEntry>;
  wrangleHistory: SnapshotInfo[];
  activeSnapshotId: string | null;
  dataTable: FeatureTable | null;
  difficulty: number[];
  importance: Record<string, ImportancePayload>;
  masks: MaskState | null;
  projections: Record<string, ProjectionPayload>;
  histograms: HistogramPayload | null;
  stacks: StackSummary[];
  comparison: ComparisonStep[];
  activePerformance: Record<string, number> | null;
  busy: boolean;
  jobPhase: string | null;
  lastError: string | null;
}

type Listener = (state: StoreState) => void;

const EMPTY: StoreState = {
  sessionId: null,
  summary: null,
  config: null,
  algorithms: [],
  selection: [],
  distributions: {},
  perClass: {},
  coverage: {},
  wrangleHistory: [],
  activeSnapshotId: null,
  dataTable: null,
  difficulty: [],
  importance: {},
  masks: null,
  projections: {},
  histograms: null,
  stacks: [],
  comparison: [],
  activePerformance: null,
  busy: false,
  jobPhase: null,
  lastError: null,
};

export class SessionStore {
  state: StoreState = { ...EMPTY };
  private listeners: Listener[] = [];
  private stepCounter = 0;

  constructor(public api: Api) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(partial: Partial<StoreState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  private async mutate<T>(fn: () => Promise<T>): Promise<T | undefined> {
    if (this.state.busy) return undefined; // optimistic disable, mirrors 409
    this.patch({ busy: true, lastError: null });
    try {
      return await fn();
    } catch (err) {
      this.patch({ lastError: err instanceof Error ? err.message : String(err) });
      return undefined;
    } finally {
      this.patch({ busy: false, jobPhase: null });
    }
  }

  private sid(): string {
    if (!this.state.sessionId) throw new Error("no session yet");
    return this.state.sessionId;
  }

  // -- lifecycle ------------------------------------------------------------

  async createSession(body: Parameters<Api["createSession"]>[0]): Promise<void> {
    await this.mutate(async () => {
      const created = await this.api.createSession(body);
      this.patch({ ...EMPTY, sessionId: created.session_id, summary: created.summary });
      const [config, algorithms] = await Promise.all([
        this.api.getConfig(created.session_id),
        this.api.algorithms(created.session_id),
      ]);
      this.patch({ config, algorithms: algorithms.algorithms });
      await this.refreshWrangleViews();
    });
  }

  /** Rebuild every view from reads only (used after refresh/reconnect). */
  async hydrate(sessionId: string): Promise<void> {
    const summary = await this.api.sessionSummary(sessionId);
    this.patch({ ...EMPTY, sessionId, summary: summary.summary });
    const [config, algorithms, selection] = await Promise.all([
      this.api.getConfig(sessionId),
      this.api.algorithms(sessionId),
      this.api.getSelection(sessionId),
    ]);
    this.patch({ config, algorithms: algorithms.algorithms, selection: selection.model_ids });
    await this.refreshWrangleViews();
    if (summary.has_run) await this.refreshEvaluationViews();
  }

  // -- refresh helpers --------------------------------------------------------

  async refreshWrangleViews(): Promise<void> {
    const sid = this.sid();
    const [history, table, masks] = await Promise.all([
      this.api.wrangleHistory(sid),
      this.api.dataTable(sid),
      this.api.getMasks(sid),
    ]);
    this.patch({
      wrangleHistory: history.history,
      activeSnapshotId: history.active_snapshot_id,
      dataTable: table,
      masks,
    });
  }

  async refreshEvaluationViews(): Promise<void> {
    const sid = this.sid();
    const [dist, perClass, coverage, selection] = await Promise.all([
      this.api.distributions(sid),
      this.api.perClass(sid),
      this.api.coverage(sid),
      this.api.getSelection(sid),
    ]);
    this.patch({
      distributions: dist.distributions,
      perClass: perClass.per_class,
      coverage: coverage.coverage,
      selection: selection.model_ids,
    });
    try {
      const difficulty = await this.api.difficulty(sid);
      this.patch({ difficulty: difficulty.difficulty });
    } catch {
      this.patch({ difficulty: [] }); // nothing selected or stale run
    }
  }

  async refreshStackViews(): Promise<void> {
    const sid = this.sid();
    const [stacks, comparison] = await Promise.all([this.api.stacks(sid), this.api.comparison(sid)]);
    this.patch({ stacks: stacks.stacks, comparison: comparison.steps });
  }

  // -- metric panel -----------------------------------------------------------

  /** Slider/averaging change: re-scores instantly, never retrains. */
  async updateConfig(config: MetricConfig): Promise<void> {
    await this.mutate(async () => {
      const echoed = await this.api.putConfig(this.sid(), config);
      this.patch({ config: echoed });
      await this.refreshEvaluationViews().catch(() => undefined);
    });
  }

  /** Confirm button: one evaluation job, progress polled at 500 ms. */
  async confirmAndEvaluate(scope = "all"): Promise<void> {
    await this.mutate(async () => {
      const { job_id } = await this.api.evaluate(this.sid(), scope);
      const status = await this.api.pollJob(this.sid(), job_id, (s: JobStatus) =>
        this.patch({ jobPhase: `${s.progress.phase} ${s.progress.done}/${s.progress.total}` }),
      );
      if (status.status === "failed") throw new Error(status.error ?? "evaluation failed");
      await this.refreshEvaluationViews();
    });
  }

  // -- algorithm panel ---------------------------------------------------------

  async selectAlgorithms(algorithms: string[]): Promise<void> {
    await this.mutate(async () => {
      const selection = await this.api.putSelection(this.sid(), { algorithms });
      this.patch({ selection: selection.model_ids });
      await this.refreshEvaluationViews();
    });
  }

  async selectModels(modelIds: number[]): Promise<void> {
    await this.mutate(async () => {
      const selection = await this.api.putSelection(this.sid(), { model_ids: modelIds });
      this.patch({ selection: selection.model_ids });
      await this.refreshEvaluationViews();
    });
  }

  /** Parallel-coordinates filter: queries matching ids, selection unchanged. */
  filterPool(filters: Record<string, unknown>): Promise<{ model_ids: number[] }> {
    return this.api.filteredPool(this.sid(), filters);
  }

  // -- wrangling panel -----------------------------------------------------------

  async wrangle(op: "remove" | "merge" | "compose", indices: number[], mode = "mean"): Promise<void> {
    await this.mutate(async () => {
      const summary = await this.api.wrangle(this.sid(), op, indices, mode);
      this.patch({ summary, projections: {}, histograms: null, difficulty: [] });
      await this.refreshWrangleViews();
    });
  }

  async restoreSnapshot(snapshotId: string): Promise<void> {
    await this.mutate(async () => {
      const summary = await this.api.restoreSnapshot(this.sid(), snapshotId);
      this.patch({ summary, projections: {}, histograms: null, difficulty: [] });
      await this.refreshWrangleViews();
    });
  }

  async computeImportance(method: string): Promise<void> {
    await this.mutate(async () => {
      const { job_id } = await this.api.computeImportance(this.sid(), method);
      const status = await this.api.pollJob(this.sid(), job_id, (s) =>
        this.patch({ jobPhase: `${s.progress.phase} ${s.progress.done}/${s.progress.total}` }),
      );
      if (status.status === "failed") throw new Error(status.error ?? "importance failed");
      const table = await this.api.importanceTable(this.sid(), method);
      this.patch({ importance: { ...this.state.importance, [method]: table } });
    });
  }

  async showCombinedImportance(methods: string[]): Promise<void> {
    const table = await this.api.combinedImportance(this.sid(), methods);
    this.patch({ importance: { ...this.state.importance, combined: table } });
  }

  /** Average-row toggle: flips one feature in the global mask. */
  async toggleGlobalFeature(feature: string): Promise<void> {
    await this.mutate(async () => {
      const masks = this.state.masks;
      if (!masks) throw new Error("masks not loaded");
      const idx = masks.features.indexOf(feature);
      if (idx < 0) throw new Error(`unknown feature ${feature}`);
      const next: MaskState = {
        ...masks,
        global: masks.global.map((b, i) => (i === idx ? !b : b)),
      };
      const echoed = await this.api.putMasks(this.sid(), next);
      this.patch({ masks: echoed });
    });
  }

  // -- model panel --------------------------------------------------------------

  async project(space: string, method = "mds", colorMetric?: string): Promise<void> {
    await this.mutate(async () => {
      const { job_id } = await this.api.project(this.sid(), space, method, colorMetric);
      const status = await this.api.pollJob(this.sid(), job_id);
      if (status.status === "failed") throw new Error(status.error ?? "projection failed");
      const payload = await this.api.projection(this.sid(), space);
      this.patch({ projections: { ...this.state.projections, [space]: payload } });
    });
  }

  /** Metric selector: recolors in place, coordinates are never re-requested. */
  async recolorModels(colorMetric: string | null): Promise<void> {
    await this.mutate(async () => {
      const payload = await this.api.recolorModels(this.sid(), colorMetric);
      this.patch({ projections: { ...this.state.projections, models: payload } });
    });
  }

  async loadHistograms(selectedInstances: number[]): Promise<void> {
    const payload = await this.api.histograms(this.sid(), selectedInstances);
    this.patch({ histograms: payload });
  }

  // -- stack / history ------------------------------------------------------------

  async buildStack(label?: string): Promise<void> {
    await this.mutate(async () => {
      this.stepCounter += 1;
      const effective = label ?? `Step ${this.stepCounter}`;
      const result = await this.api.buildStack(this.sid(), effective);
      this.patch({ activePerformance: result.performance });
      await this.refreshStackViews();
    });
  }

  async storeStack(note = ""): Promise<void> {
    await this.mutate(async () => {
      await this.api.storeStack(this.sid(), note);
      await this.refreshStackViews();
    });
  }

  async activateStack(stackId: string): Promise<void> {
    await this.mutate(async () => {
      await this.api.activateStack(this.sid(), stackId);
      const [summary, selection] = await Promise.all([
        this.api.sessionSummary(this.sid()),
        this.api.getSelection(this.sid()),
      ]);
      this.patch({
        summary: summary.summary,
        selection: selection.model_ids,
        projections: {},
        histograms: null,
      });
      await this.refreshWrangleViews();
    });
  }

  async downloadExport(stackId: string): Promise<Record<string, unknown>> {
    return this.api.exportStack(this.sid(), stackId);
  }
}

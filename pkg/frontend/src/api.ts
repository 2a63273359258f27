// Typed client for the workbench HTTP API. Long jobs are polled at a fixed
// interval; every method maps to exactly one request.

export type MetricId =
  | "accuracy"
  | "gmean"
  | "precision"
  | "recall"
  | "fbeta"
  | "mcc"
  | "roc_auc"
  | "log_loss";

export const METRIC_IDS: MetricId[] = [
  "accuracy",
  "gmean",
  "precision",
  "recall",
  "fbeta",
  "mcc",
  "roc_auc",
  "log_loss",
];

export const AVERAGED_METRICS = ["precision", "recall", "fbeta", "roc_auc"] as const;

export interface MetricConfig {
  weights: Record<MetricId, number>;
  averaging: Record<(typeof AVERAGED_METRICS)[number], "micro" | "macro" | "weighted">;
  beta: number;
  detailed_feature_search: boolean;
}

export interface DatasetSummary {
  snapshot_id: string;
  instances: number;
  features: number;
  feature_names: string[];
  classes: Record<string, number>;
  provenance: string;
}

export interface BoxStats {
  min: number;
  q1: number;
  median: number;
  q3: number;
  max: number;
  count?: number;
}

export interface AlgorithmInfo {
  algo_id: string;
  color: string;
  total_count: number;
  grid: Record<string, unknown[]>;
}

export interface ModelInfo {
  model_id: number;
  algo_id: string;
  params: Record<string, unknown>;
}

export interface PerClassEntry {
  baseline: { precision: number; recall: number; f1: number };
  selected: { precision: number; recall: number; f1: number } | null;
}

export interface CoverageEntry {
  selected_count: number;
  total_count: number;
  fraction: number;
}

export interface JobStatus {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: { done: number; total: number; phase: string };
  error: string | null;
}

export interface SnapshotInfo {
  snapshot_id: string;
  parent_snapshot_id: string | null;
  provenance: string;
  instances: number;
}

export interface ProjectionPayload {
  space: string;
  method: string;
  seed: number;
  coords: [number, number][];
  point_scalar: number[];
  scalar_semantic: string;
  point_class: number[] | null;
  notice: string | null;
  metric_boxplots?: Record<string, BoxStats> | null;
}

export interface ImportancePayload {
  method: string;
  features: string[];
  model_ids: number[];
  values: (number | null)[][];
  row_average: number[];
  legend: Record<string, string>;
  enabled_methods: string[];
}

export interface MaskState {
  features: string[];
  global: boolean[];
  per_model: Record<string, boolean[]>;
}

export interface StackSummary {
  stack_id: string;
  parent_stack_id: string | null;
  metrics: Record<"accuracy" | "precision" | "recall" | "f1", number>;
  model_count: number;
  algorithms_used: string[];
  snapshot_id: string;
  note: string;
}

export interface ComparisonStep {
  step_index: number;
  label: string;
  active: Record<string, number>;
  stored: (Record<string, number> & { stack_id: string }) | null;
}

export interface HistogramPayload {
  selected: number[];
  all: number[];
  bin_edges: number[];
}

export interface FeatureTable {
  snapshot_id: string;
  feature_names: string[];
  rows: number[][];
  labels: string[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Api {
  constructor(
    private base = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    public pollIntervalMs = 500,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(this.base + path, init);
    const payload = await resp.json();
    if (!resp.ok) {
      const detail = payload?.detail ?? {};
      throw new ApiError(resp.status, detail.code ?? "error", detail.message ?? resp.statusText);
    }
    return payload as T;
  }

  createSession(body: {
    csv_text?: string;
    builtin?: string;
    label_column?: string;
    seed?: number;
    n_folds?: number;
    grids?: unknown;
  }): Promise<{ session_id: string; summary: DatasetSummary }> {
    return this.request("POST", "/api/sessions", body);
  }

  sessionSummary(sid: string): Promise<{ summary: DatasetSummary; pool_size: number; has_run: boolean }> {
    return this.request("GET", `/api/sessions/${sid}`);
  }

  getConfig(sid: string): Promise<MetricConfig> {
    return this.request("GET", `/api/sessions/${sid}/metric-config`);
  }

  putConfig(sid: string, config: MetricConfig): Promise<MetricConfig> {
    return this.request("PUT", `/api/sessions/${sid}/metric-config`, config);
  }

  evaluate(sid: string, scope = "all"): Promise<{ job_id: string }> {
    return this.request("POST", `/api/sessions/${sid}/evaluate`, { scope });
  }

  jobStatus(sid: string, jobId: string): Promise<JobStatus> {
    return this.request("GET", `/api/sessions/${sid}/jobs/${jobId}`);
  }

  async pollJob(sid: string, jobId: string, onProgress?: (s: JobStatus) => void): Promise<JobStatus> {
    for (;;) {
      const status = await this.jobStatus(sid, jobId);
      onProgress?.(status);
      if (status.status === "done" || status.status === "failed") return status;
      await new Promise((r) => setTimeout(r, this.pollIntervalMs));
    }
  }

  algorithms(sid: string): Promise<{ algorithms: AlgorithmInfo[] }> {
    return this.request("GET", `/api/sessions/${sid}/pool/algorithms`);
  }

  models(sid: string, algoId?: string): Promise<{ models: ModelInfo[] }> {
    const query = algoId ? `?algo_id=${algoId}` : "";
    return this.request("GET", `/api/sessions/${sid}/pool/models${query}`);
  }

  filteredPool(sid: string, filters: Record<string, unknown>): Promise<{ model_ids: number[] }> {
    return this.request("POST", `/api/sessions/${sid}/pool/filtered`, { filters });
  }

  distributions(sid: string): Promise<{ distributions: Record<string, BoxStats>; omitted: string[] }> {
    return this.request("GET", `/api/sessions/${sid}/pool/distributions`);
  }

  perClass(sid: string): Promise<{ per_class: Record<string, Record<string, PerClassEntry>> }> {
    return this.request("GET", `/api/sessions/${sid}/pool/per-class`);
  }

  coverage(sid: string): Promise<{ coverage: Record<string, CoverageEntry> }> {
    return this.request("GET", `/api/sessions/${sid}/pool/coverage`);
  }

  getSelection(sid: string): Promise<{ model_ids: number[] }> {
    return this.request("GET", `/api/sessions/${sid}/selection`);
  }

  putSelection(sid: string, body: { model_ids?: number[]; algorithms?: string[] }): Promise<{ model_ids: number[] }> {
    return this.request("PUT", `/api/sessions/${sid}/selection`, body);
  }

  wrangle(sid: string, op: "remove" | "merge" | "compose", indices: number[], mode = "mean"): Promise<DatasetSummary> {
    return this.request("POST", `/api/sessions/${sid}/wrangle`, { op, indices, mode });
  }

  wrangleHistory(sid: string): Promise<{ active_snapshot_id: string; history: SnapshotInfo[] }> {
    return this.request("GET", `/api/sessions/${sid}/wrangle/history`);
  }

  restoreSnapshot(sid: string, snapshotId: string): Promise<DatasetSummary> {
    return this.request("POST", `/api/sessions/${sid}/wrangle/restore`, { snapshot_id: snapshotId });
  }

  dataTable(sid: string): Promise<FeatureTable> {
    return this.request("GET", `/api/sessions/${sid}/data/table`);
  }

  difficulty(sid: string): Promise<{ snapshot_id: string; difficulty: number[] }> {
    return this.request("GET", `/api/sessions/${sid}/data/difficulty`);
  }

  computeImportance(sid: string, method: string): Promise<{ job_id: string }> {
    return this.request("POST", `/api/sessions/${sid}/importance`, { method });
  }

  importanceTable(sid: string, method: string): Promise<ImportancePayload> {
    return this.request("GET", `/api/sessions/${sid}/importance/${method}`);
  }

  combinedImportance(sid: string, methods: string[]): Promise<ImportancePayload> {
    return this.request("GET", `/api/sessions/${sid}/importance/combined?methods=${methods.join(",")}`);
  }

  getMasks(sid: string): Promise<MaskState> {
    return this.request("GET", `/api/sessions/${sid}/masks`);
  }

  putMasks(sid: string, masks: MaskState): Promise<MaskState> {
    return this.request("PUT", `/api/sessions/${sid}/masks`, masks);
  }

  project(sid: string, space: string, method = "mds", colorMetric?: string): Promise<{ job_id: string }> {
    return this.request("POST", `/api/sessions/${sid}/projections/${space}`, {
      method,
      color_metric: colorMetric ?? null,
    });
  }

  projection(sid: string, space: string): Promise<ProjectionPayload> {
    return this.request("GET", `/api/sessions/${sid}/projections/${space}`);
  }

  recolorModels(sid: string, colorMetric: string | null): Promise<ProjectionPayload> {
    return this.request("POST", `/api/sessions/${sid}/projections/models/recolor`, {
      color_metric: colorMetric,
    });
  }

  histograms(sid: string, selectedInstances: number[]): Promise<HistogramPayload> {
    return this.request("POST", `/api/sessions/${sid}/histograms`, {
      selected_instances: selectedInstances,
    });
  }

  buildStack(sid: string, label?: string): Promise<{ performance: Record<string, number>; model_ids: number[] }> {
    return this.request("POST", `/api/sessions/${sid}/stack/build`, { label: label ?? null });
  }

  storeStack(sid: string, note = ""): Promise<StackSummary> {
    return this.request("POST", `/api/sessions/${sid}/stack/store`, { note });
  }

  activateStack(sid: string, stackId: string): Promise<{ stack_id: string; snapshot_id: string; model_ids: number[] }> {
    return this.request("POST", `/api/sessions/${sid}/stack/activate`, { stack_id: stackId });
  }

  stacks(sid: string): Promise<{ stacks: StackSummary[] }> {
    return this.request("GET", `/api/sessions/${sid}/stacks`);
  }

  comparison(sid: string): Promise<{ metrics: string[]; steps: ComparisonStep[] }> {
    return this.request("GET", `/api/sessions/${sid}/comparison`);
  }

  exportStack(sid: string, stackId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/api/sessions/${sid}/stacks/${stackId}/export`);
  }
}

"""Session state: one dataset history, one model pool, one active stack.

The session is the unit of isolation for the HTTP service and the workflow
runner. Mutations are serialized by the caller (the service holds a per-session
mutex); everything stored here is either immutable or replaced wholesale, so
readers never see partial updates.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Callable

import numpy as np

from .eval_engine import (
    EvalError,
    EvaluationCache,
    EvaluationRun,
    evaluate_pool,
    rescore,
)
from .importance import (
    FeatureMaskSet,
    ImportanceError,
    ImportanceTable,
    accuracy_table,
    combined_importance,
    permutation_table,
    univariate_table,
)
from .metrics import MetricConfig
from .model_zoo import ModelSpec, ModelZoo, ZooError, algorithm_coverage
from .projections import (
    ProjectionResult,
    model_score_histograms,
    project_data_space,
    project_model_space,
    project_prediction_space,
    recolor_model_space,
)
from .stacker import (
    ActiveStack,
    StackError,
    StackRegistry,
    build_stack,
    export_stack,
    make_predictor,
)
from .history import StepHistory
from .wrangler import DatasetSnapshot, SnapshotStore, WrangleError, instance_difficulty, load_csv


class SessionError(ValueError):
    pass


class StaleRunError(SessionError):
    """The evaluation run no longer matches the active snapshot or masks."""


class WorkbenchSession:
    def __init__(
        self,
        store: SnapshotStore,
        zoo: ModelZoo,
        config: MetricConfig | None = None,
        *,
        seed: int = 1,
        n_folds: int = 5,
        cache_dir: str | Path | None = None,
        max_workers: int | None = None,
    ):
        self.store = store
        self.zoo = zoo
        self.config = config or MetricConfig()
        self.seed = seed
        self.n_folds = n_folds
        self.pool = zoo.enumerate_pool()
        self.specs_by_id = {m.model_id: m for m in self.pool}
        self.masks = FeatureMaskSet(store.active.feature_names)
        self.selection: set[int] = set()
        self.run: EvaluationRun | None = None
        self.registry = StackRegistry()
        self.history = StepHistory()
        self.active_stack: ActiveStack | None = None
        self.cache = EvaluationCache(cache_dir) if cache_dir else None
        self.max_workers = max_workers
        self.mutex = threading.Lock()
        self.importance_tables: dict[str, ImportanceTable] = {}
        self.projections: dict[str, ProjectionResult] = {}
        self.model_boxplots: dict | None = None
        self._stored_context: dict[str, dict] = {}
        self._step_count = 0

    # -- construction -------------------------------------------------------

    @classmethod
    def from_csv(
        cls,
        csv_text: str,
        label_column: str | None = None,
        *,
        zoo: ModelZoo | None = None,
        config: MetricConfig | None = None,
        seed: int = 1,
        n_folds: int = 5,
        cache_dir: str | Path | None = None,
        max_workers: int | None = None,
    ) -> "WorkbenchSession":
        X, names, y, classes = load_csv(csv_text, label_column=label_column, is_text=True)
        store = SnapshotStore.from_arrays(X, names, y, classes, min_per_class=n_folds)
        return cls(
            store,
            zoo or ModelZoo(),
            config,
            seed=seed,
            n_folds=n_folds,
            cache_dir=cache_dir,
            max_workers=max_workers,
        )

    # -- dataset ------------------------------------------------------------

    @property
    def snapshot(self) -> DatasetSnapshot:
        return self.store.active

    def dataset_summary(self) -> dict:
        snap = self.snapshot
        return {
            "snapshot_id": snap.snapshot_id,
            "instances": snap.n_instances,
            "features": snap.n_features,
            "feature_names": list(snap.feature_names),
            "classes": snap.class_counts(),
            "provenance": snap.provenance,
        }

    def feature_table(self) -> dict:
        snap = self.snapshot
        return {
            "snapshot_id": snap.snapshot_id,
            "feature_names": list(snap.feature_names),
            "rows": snap.X.tolist(),
            "labels": [snap.class_names[c] for c in snap.y],
        }

    # -- metric config ------------------------------------------------------

    def set_config(self, config: MetricConfig) -> None:
        """Swap weights/averaging; re-rank the current run without retraining."""
        self.config = config
        if self.run is not None and self.run.snapshot_id == self.snapshot.snapshot_id:
            self.run = rescore(self.run, self.snapshot, config)
        self._invalidate_views()

    # -- evaluation ---------------------------------------------------------

    def _current_masks(self, model_ids: list[int]) -> dict[int, np.ndarray]:
        return self.masks.as_model_masks(model_ids)

    def evaluate(
        self,
        scope: str = "all",
        progress: Callable[[int, int, str], None] | None = None,
    ) -> EvaluationRun:
        if scope == "selected":
            if not self.selection:
                raise SessionError("no models selected to evaluate")
            pool = [self.specs_by_id[mid] for mid in sorted(self.selection)]
        elif scope == "all":
            pool = self.pool
        else:
            raise SessionError(f"unknown evaluation scope {scope!r}")
        run = evaluate_pool(
            self.snapshot,
            pool,
            self.config,
            self._current_masks([m.model_id for m in pool]),
            seed=self.seed,
            n_folds=self.n_folds,
            max_workers=self.max_workers,
            progress=progress,
            cache=self.cache,
        )
        self.run = run
        self._invalidate_views()
        return run

    def require_run(self) -> EvaluationRun:
        if self.run is None:
            raise StaleRunError("no evaluation run yet; confirm the metric config first")
        if self.run.snapshot_id != self.snapshot.snapshot_id:
            raise StaleRunError("dataset changed since the last evaluation; re-evaluate the pool")
        from .eval_engine import masks_fingerprint

        current = masks_fingerprint(self._current_masks(sorted(self.run.records)))
        if current != self.run.masks_fingerprint:
            raise StaleRunError("feature masks changed since the last evaluation; re-evaluate the pool")
        return self.run

    def _invalidate_views(self) -> None:
        self.importance_tables.clear()
        self.projections.clear()
        self.model_boxplots = None

    # -- selection ----------------------------------------------------------

    def select_models(self, model_ids: list[int]) -> None:
        unknown = set(model_ids) - set(self.specs_by_id)
        if unknown:
            raise ZooError(f"unknown model ids: {sorted(unknown)[:5]}")
        self.selection = set(int(m) for m in model_ids)

    def select_algorithms(self, algo_ids: list[str]) -> None:
        for algo in algo_ids:
            self.zoo.algorithm(algo)
        self.selection = {m.model_id for m in self.pool if m.algo_id in set(algo_ids)}

    def prune_selection(self, *, keep_top: int | None = None, keep_bottom: int | None = None,
                        keep_top_fraction: float | None = None, min_combined: float | None = None) -> None:
        run = self.require_run()
        scored = [
            (mid, run.records[mid].combined)
            for mid in sorted(self.selection)
            if mid in run.records and not run.records[mid].failed
        ]
        if not scored:
            raise SessionError("selection has no evaluated models to prune")
        scored.sort(key=lambda t: (-t[1], t[0]))
        if keep_top is not None:
            kept = scored[:keep_top]
        elif keep_bottom is not None:
            kept = scored[-keep_bottom:]
        elif keep_top_fraction is not None:
            kept = scored[: max(1, int(round(len(scored) * keep_top_fraction)))]
        elif min_combined is not None:
            kept = [t for t in scored if t[1] >= min_combined] or scored[:1]
        else:
            raise SessionError("prune_selection needs a criterion")
        self.selection = {mid for mid, _ in kept}

    def coverage(self) -> dict:
        return algorithm_coverage(self.selection, self.pool)

    # -- wrangling ----------------------------------------------------------

    def remove_instances(self, indices: set[int]) -> DatasetSnapshot:
        snap = self.store.remove_instances(indices)
        self._invalidate_views()
        return snap

    def merge_instances(self, indices: set[int], mode: str) -> DatasetSnapshot:
        snap = self.store.merge_instances(indices, mode)
        self._invalidate_views()
        return snap

    def compose_instance(self, indices: set[int], mode: str) -> DatasetSnapshot:
        snap = self.store.compose_instance(indices, mode)
        self._invalidate_views()
        return snap

    def restore_snapshot(self, snapshot_id: str) -> DatasetSnapshot:
        snap = self.store.restore(snapshot_id)
        self._invalidate_views()
        return snap

    def difficulty(self) -> np.ndarray:
        run = self.require_run()
        stack_models = self.selection & set(run.non_failed())
        if not stack_models:
            raise SessionError("no evaluated models selected; cannot compute difficulty")
        return instance_difficulty(self.snapshot, run, stack_models)

    def find_instances(self, feature: str, value: float, class_name: str | None = None,
                       top_difficulty: int | None = None) -> list[int]:
        """Instance selector used by scripted workflows (feature == value)."""
        snap = self.snapshot
        col = snap.feature_index(feature)
        mask = snap.X[:, col] == value
        if class_name is not None:
            mask &= snap.y == snap.class_index(class_name)
        idx = np.where(mask)[0]
        if top_difficulty is not None and idx.size:
            diff = self.difficulty()
            order = np.argsort(-diff[idx], kind="mergesort")
            idx = idx[order][:top_difficulty]
        return [int(i) for i in idx]

    # -- importance ---------------------------------------------------------

    def stack_model_ids(self) -> list[int]:
        run = self.require_run()
        ids = sorted(self.selection & set(run.non_failed()))
        if not ids:
            raise SessionError("no evaluated models in the selection")
        return ids

    def compute_importance(self, method: str, progress=None) -> ImportanceTable:
        run = self.require_run()
        ids = self.stack_model_ids()
        if method == "univariate":
            table = univariate_table(self.snapshot, ids)
        elif method == "permutation":
            table = permutation_table(self.snapshot, run, ids, self.config, progress=progress)
        elif method == "accuracy":
            table = accuracy_table(self.snapshot, run, ids, self.config, progress=progress)
        else:
            raise ImportanceError(f"unknown importance method {method!r}")
        self.importance_tables[method] = table
        return table

    def combined_importance(self, methods: set[str]) -> ImportanceTable:
        tables = [self.importance_tables[m] for m in sorted(methods) if m in self.importance_tables]
        return combined_importance(tables, methods)

    # -- projections --------------------------------------------------------

    def project(self, space: str, method: str = "mds", color_metric: str | None = None,
                seed: int | None = None) -> dict:
        run = self.require_run()
        seed = self.seed if seed is None else seed
        if space == "data":
            result = project_data_space(self.snapshot, method, self.difficulty(), seed=seed)
            boxplots = None
        elif space == "models":
            result, boxplots = project_model_space(
                run, self.stack_model_ids(), self.config, method=method,
                color_metric=color_metric, seed=seed,
            )
            self.model_boxplots = boxplots
        elif space == "predictions":
            result = project_prediction_space(self.snapshot, run, self.stack_model_ids(), method=method, seed=seed)
            boxplots = None
        else:
            raise SessionError(f"unknown projection space {space!r}")
        self.projections[space] = result
        payload = result.to_payload()
        if space == "models":
            payload["metric_boxplots"] = boxplots
        return payload

    def recolor_models(self, color_metric: str | None) -> dict:
        if "models" not in self.projections:
            raise SessionError("no models-space projection computed yet")
        run = self.require_run()
        result = recolor_model_space(self.projections["models"], run, self.config, color_metric)
        self.projections["models"] = result
        payload = result.to_payload()
        payload["metric_boxplots"] = self.model_boxplots
        return payload

    def histograms(self, selected_instances: list[int]) -> dict:
        run = self.require_run()
        return model_score_histograms(
            self.snapshot, run, self.stack_model_ids(), selected_instances, self.config
        )

    # -- stacking -----------------------------------------------------------

    def build_active_stack(self, label: str | None = None) -> dict:
        run = self.require_run()
        ids = self.stack_model_ids()
        self.active_stack = build_stack(run, ids, self.snapshot, self.config)
        self._step_count += 1
        step_label = label or f"Step {self._step_count}"
        self.history.record_step(step_label, self.active_stack.performance)
        return dict(self.active_stack.performance)

    def store_active_stack(self, note: str = ""):
        if self.active_stack is None:
            raise StackError("no active stack built yet")
        if self.active_stack.snapshot_id != self.snapshot.snapshot_id:
            raise StaleRunError("active stack was built on a different snapshot; rebuild first")
        record = self.registry.store(self.active_stack, note=note)
        self.history.mark_stored(record)
        self._stored_context[record.stack_id] = {
            "active": self.active_stack,
            "run": self.run,
            "masks": self.masks.to_dict(),
            "selection": sorted(self.selection),
        }
        return record

    def activate_stack(self, stack_id: str):
        record = self.registry.activate(stack_id)
        context = self._stored_context[stack_id]
        self.store.restore(record.snapshot_id)
        self.masks = FeatureMaskSet.from_dict(context["masks"])
        self.selection = set(context["selection"])
        self.run = context["run"]
        self.active_stack = context["active"]
        self._invalidate_views()
        return record

    def export_stored_stack(self, stack_id: str) -> dict:
        record = self.registry.get(stack_id)
        context = self._stored_context[stack_id]
        snapshot = self.store.get(record.snapshot_id)
        return export_stack(record, context["active"], context["run"], snapshot, self.config)

    def predictor_for(self, stack_id: str):
        record = self.registry.get(stack_id)
        context = self._stored_context[stack_id]
        snapshot = self.store.get(record.snapshot_id)
        return make_predictor(context["active"], context["run"], snapshot)

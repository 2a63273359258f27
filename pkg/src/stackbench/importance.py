"""Feature importance per (feature, model) pair for the table-heatmap view.

Three methods, each normalized to [0,1]:

* univariate — class-separation statistic per feature, identical across model
  columns (rank-1 table);
* permutation — mean drop in the user-weighted score when one column of the
  out-of-fold data is shuffled; no retraining, fold estimators are refit once
  deterministically and reused for re-prediction;
* accuracy — drop in cross-validated raw accuracy when the model is retrained
  without the feature (drop-column).

Negative drops clip to 0 before min-max normalization (per model column for
permutation/accuracy, global for univariate). Cells that cannot be computed
(mask floor, retrain failure) are flagged missing rather than zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eval_engine import EvaluationRun, build_estimator
from .metrics import MetricConfig, compute_metrics, weighted_score
from .wrangler import DatasetSnapshot

IMPORTANCE_METHODS = ("univariate", "permutation", "accuracy")
#: Fixed legend anchors for the two-hue heatmap encoding.
LEGEND_ANCHORS = {"0": "#67000d", "1": "#00441b"}  # dark red -> dark green


class ImportanceError(ValueError):
    """Invalid importance request."""


class DetailedSearchDisabled(ImportanceError):
    """The expensive methods are unavailable while detailed search is off."""


@dataclass(frozen=True)
class ImportanceTable:
    method: str
    feature_names: tuple[str, ...]
    model_ids: tuple[int, ...]
    values: np.ndarray  # features x models, in [0,1]
    missing: np.ndarray  # boolean, same shape
    snapshot_id: str
    enabled_methods: tuple[str, ...] = ()

    @property
    def row_average(self) -> np.ndarray:
        """Per-feature mean over models, ignoring missing cells."""
        masked = np.ma.masked_array(self.values, mask=self.missing)
        avg = masked.mean(axis=1)
        return np.asarray(avg.filled(0.0), dtype=float)

    def to_payload(self) -> dict:
        return {
            "method": self.method,
            "features": list(self.feature_names),
            "model_ids": list(self.model_ids),
            "values": [
                [None if self.missing[f, m] else float(self.values[f, m]) for m in range(len(self.model_ids))]
                for f in range(len(self.feature_names))
            ],
            "row_average": [float(v) for v in self.row_average],
            "legend": dict(LEGEND_ANCHORS),
            "enabled_methods": list(self.enabled_methods) or [self.method],
        }


def _minmax(values: np.ndarray, missing: np.ndarray) -> np.ndarray:
    """Min-max onto [0,1]; a constant vector maps to all-zeros."""
    out = np.zeros_like(values, dtype=float)
    ok = ~missing
    if not ok.any():
        return out
    vmin = values[ok].min()
    vmax = values[ok].max()
    if vmax > vmin:
        out[ok] = (values[ok] - vmin) / (vmax - vmin)
    return out


def univariate_scores(snapshot: DatasetSnapshot) -> np.ndarray:
    """Between-class variance fraction (correlation ratio) per feature.

    Bounded in [0,1] by construction: 1 for a feature that separates the
    classes exactly, 0 for a constant feature.
    """
    X, y = snapshot.X, snapshot.y
    grand = X.mean(axis=0)
    ss_total = ((X - grand) ** 2).sum(axis=0)
    ss_between = np.zeros(snapshot.n_features)
    for c in range(snapshot.n_classes):
        rows = X[y == c]
        if rows.shape[0] == 0:
            continue
        ss_between += rows.shape[0] * (rows.mean(axis=0) - grand) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        eta2 = np.where(ss_total > 0, ss_between / ss_total, 0.0)
    return eta2


def univariate_table(snapshot: DatasetSnapshot, model_ids: list[int]) -> ImportanceTable:
    """Univariate importance broadcast to every model column."""
    raw = univariate_scores(snapshot)
    missing_col = np.zeros(snapshot.n_features, dtype=bool)
    normalized = _minmax(raw, missing_col)
    n_models = len(model_ids)
    values = np.tile(normalized[:, None], (1, n_models))
    return ImportanceTable(
        method="univariate",
        feature_names=snapshot.feature_names,
        model_ids=tuple(model_ids),
        values=values,
        missing=np.zeros((snapshot.n_features, n_models), dtype=bool),
        snapshot_id=snapshot.snapshot_id,
    )


def _require_record(run: EvaluationRun, model_id: int):
    record = run.records.get(model_id)
    if record is None:
        raise ImportanceError(f"model {model_id} not present in the evaluation run")
    if record.failed:
        raise ImportanceError(f"model {model_id} failed evaluation")
    return record


def _fit_fold_estimators(snapshot: DatasetSnapshot, record, run: EvaluationRun):
    """Deterministically refit the per-fold estimators used for the record."""
    import warnings

    cols = np.where(record.feature_mask)[0]
    X, y = snapshot.X[:, cols], snapshot.y
    estimators = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for fold in range(run.n_folds):
            test = run.fold_assignment == fold
            est = build_estimator(record.spec.algo_id, record.spec.params, run.seed)
            est.fit(X[~test], y[~test])
            estimators.append((fold, est))
    return estimators, cols


def _predict_oof(estimators, cols, X_full, fold_assignment, n_classes):
    proba = np.zeros((X_full.shape[0], n_classes))
    for fold, est in estimators:
        test = fold_assignment == fold
        p = est.predict_proba(X_full[test][:, cols])
        aligned = np.zeros((p.shape[0], n_classes))
        aligned[:, np.asarray(est.classes_, dtype=int)] = p
        proba[test] = aligned
    pred = np.argmax(proba, axis=1).astype(np.int64)
    return pred, proba


def permutation_raw_drops(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    model_id: int,
    config: MetricConfig,
    repeats: int = 5,
    seed: int | None = None,
) -> np.ndarray:
    """Mean weighted-score drop per feature under column shuffling (clipped at 0).

    Features outside the model's effective mask are exactly 0: an unused
    column cannot change predictions, so no work is done for them.
    """
    record = _require_record(run, model_id)
    base_seed = run.seed if seed is None else seed
    base = weighted_score(
        compute_metrics(snapshot.y, record.oof_pred, record.oof_proba, config), config
    )
    estimators, cols = _fit_fold_estimators(snapshot, record, run)
    drops = np.zeros(snapshot.n_features)
    n = snapshot.n_instances
    for f in range(snapshot.n_features):
        if not record.feature_mask[f]:
            continue
        total = 0.0
        for r in range(repeats):
            rng = np.random.default_rng([base_seed, model_id, f, r])
            X_perm = snapshot.X.copy()
            X_perm[:, f] = X_perm[rng.permutation(n), f]
            pred, proba = _predict_oof(estimators, cols, X_perm, run.fold_assignment, snapshot.n_classes)
            score = weighted_score(compute_metrics(snapshot.y, pred, proba, config), config)
            total += base - score
        drops[f] = max(0.0, total / repeats)
    return drops


def accuracy_raw_drops(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    model_id: int,
) -> tuple[np.ndarray, np.ndarray]:
    """CV accuracy drop per feature when the model is retrained without it.

    Returns (drops, missing): a cell is missing when the mask floor would be
    violated (single-feature model) or the retrain fails.
    """
    from .eval_engine import oof_predictions

    record = _require_record(run, model_id)
    base_acc = float(np.mean(record.oof_pred == snapshot.y))
    drops = np.zeros(snapshot.n_features)
    missing = np.zeros(snapshot.n_features, dtype=bool)
    for f in range(snapshot.n_features):
        if not record.feature_mask[f]:
            continue
        reduced = record.feature_mask.copy()
        reduced[f] = False
        if not reduced.any():
            missing[f] = True
            continue
        try:
            pred, _ = oof_predictions(snapshot, record.spec, reduced, run.fold_assignment, run.seed)
        except Exception:  # noqa: BLE001 - retrain failure flags the cell
            missing[f] = True
            continue
        drops[f] = max(0.0, base_acc - float(np.mean(pred == snapshot.y)))
    return drops, missing


def _detailed_guard(config: MetricConfig, method: str) -> None:
    if not config.detailed_feature_search:
        raise DetailedSearchDisabled(
            f"{method} importance is unavailable while detailed feature search is disabled"
        )


def permutation_table(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    model_ids: list[int],
    config: MetricConfig,
    repeats: int = 5,
    progress: Callable[[int, int, str], None] | None = None,
) -> ImportanceTable:
    _detailed_guard(config, "permutation")
    values = np.zeros((snapshot.n_features, len(model_ids)))
    missing = np.zeros_like(values, dtype=bool)
    for j, mid in enumerate(model_ids):
        raw = permutation_raw_drops(snapshot, run, mid, config, repeats=repeats)
        values[:, j] = _minmax(raw, missing[:, j])
        if progress is not None:
            progress(j + 1, len(model_ids), "permutation importance")
    return ImportanceTable(
        method="permutation",
        feature_names=snapshot.feature_names,
        model_ids=tuple(model_ids),
        values=values,
        missing=missing,
        snapshot_id=snapshot.snapshot_id,
    )


def accuracy_table(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    model_ids: list[int],
    config: MetricConfig,
    progress: Callable[[int, int, str], None] | None = None,
) -> ImportanceTable:
    _detailed_guard(config, "accuracy")
    values = np.zeros((snapshot.n_features, len(model_ids)))
    missing = np.zeros_like(values, dtype=bool)
    for j, mid in enumerate(model_ids):
        raw, miss = accuracy_raw_drops(snapshot, run, mid)
        missing[:, j] = miss
        values[:, j] = _minmax(raw, miss)
        if progress is not None:
            progress(j + 1, len(model_ids), "accuracy importance")
    return ImportanceTable(
        method="accuracy",
        feature_names=snapshot.feature_names,
        model_ids=tuple(model_ids),
        values=values,
        missing=missing,
        snapshot_id=snapshot.snapshot_id,
    )


def combined_importance(tables: list[ImportanceTable], enabled: set[str]) -> ImportanceTable:
    """Cell-wise mean of the enabled methods' normalized tables."""
    if not enabled:
        raise ImportanceError("no methods enabled for combination")
    chosen = [t for t in tables if t.method in enabled]
    found = {t.method for t in chosen}
    if found != set(enabled):
        raise ImportanceError(f"methods {sorted(set(enabled) - found)} have not been computed")
    first = chosen[0]
    for t in chosen[1:]:
        if (
            t.snapshot_id != first.snapshot_id
            or t.feature_names != first.feature_names
            or t.model_ids != first.model_ids
        ):
            raise ImportanceError("cannot combine importance tables from different snapshots or model sets")
    stacked = np.stack([t.values for t in chosen])
    present = ~np.stack([t.missing for t in chosen])
    count = present.sum(axis=0)
    total = np.where(present, stacked, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore"):
        values = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    return ImportanceTable(
        method="combined",
        feature_names=first.feature_names,
        model_ids=first.model_ids,
        values=values,
        missing=count == 0,
        snapshot_id=first.snapshot_id,
        enabled_methods=tuple(sorted(enabled)),
    )


class FeatureMaskSet:
    """Global plus per-model feature toggles; effective mask is their AND."""

    def __init__(self, feature_names: tuple[str, ...]):
        self.feature_names = tuple(feature_names)
        self.global_mask = np.ones(len(feature_names), dtype=bool)
        self.per_model: dict[int, np.ndarray] = {}

    def _index(self, feature: str) -> int:
        try:
            return self.feature_names.index(feature)
        except ValueError:
            raise ImportanceError(f"unknown feature {feature!r}") from None

    def effective(self, model_id: int) -> np.ndarray:
        model_mask = self.per_model.get(model_id)
        if model_mask is None:
            return self.global_mask.copy()
        return self.global_mask & model_mask

    def _check_floor(self, candidate_global: np.ndarray, per_model: dict[int, np.ndarray]) -> None:
        if not candidate_global.any():
            raise ImportanceError("global mask must keep at least one feature")
        for mid, mask in per_model.items():
            if not (candidate_global & mask).any():
                raise ImportanceError(f"effective mask for model {mid} would keep no features")

    def set_global(self, feature: str, enabled: bool) -> None:
        candidate = self.global_mask.copy()
        candidate[self._index(feature)] = enabled
        self._check_floor(candidate, self.per_model)
        self.global_mask = candidate

    def set_model(self, model_id: int, feature: str, enabled: bool) -> None:
        mask = self.per_model.get(model_id, np.ones(len(self.feature_names), dtype=bool)).copy()
        mask[self._index(feature)] = enabled
        self._check_floor(self.global_mask, {**self.per_model, model_id: mask})
        self.per_model[model_id] = mask

    def disable_features(self, features: list[str]) -> None:
        candidate = self.global_mask.copy()
        for name in features:
            candidate[self._index(name)] = False
        self._check_floor(candidate, self.per_model)
        self.global_mask = candidate

    def as_model_masks(self, model_ids: list[int]) -> dict[int, np.ndarray]:
        return {mid: self.effective(mid) for mid in model_ids}

    def to_dict(self) -> dict:
        return {
            "features": list(self.feature_names),
            "global": [bool(b) for b in self.global_mask],
            "per_model": {str(mid): [bool(b) for b in mask] for mid, mask in self.per_model.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMaskSet":
        ms = cls(tuple(d["features"]))
        ms.global_mask = np.asarray(d["global"], dtype=bool)
        for mid, mask in d.get("per_model", {}).items():
            ms.per_model[int(mid)] = np.asarray(mask, dtype=bool)
        ms._check_floor(ms.global_mask, ms.per_model)
        return ms

"""Cross-validated evaluation of the candidate pool.

Every model is trained per stratified fold on its masked feature set, the
out-of-fold predictions are assembled in snapshot order, and the eight metrics
plus the user-weighted combined score are computed from them. Folds are shared
across all models (and later by the metamodel), so scores stay comparable and
the out-of-fold matrices can be stacked without leakage.
"""

from __future__ import annotations

import hashlib
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np
from sklearn.discriminant_analysis import (
    LinearDiscriminantAnalysis,
    QuadraticDiscriminantAnalysis,
)
from sklearn.ensemble import (
    AdaBoostClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import StratifiedKFold
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC

from .metrics import MetricConfig, MetricVector, compute_metrics, per_class_stats, weighted_score
from .model_zoo import ModelSpec
from .wrangler import DatasetSnapshot


class EvalError(ValueError):
    """Evaluation precondition failure."""


def build_estimator(algo_id: str, params: dict, seed: int):
    """Instantiate the sklearn estimator for one model spec.

    All families are wrapped in a per-fold standardization pipeline so
    scale-sensitive algorithms see comparable features; probability outputs
    for SVC come from its built-in calibration option (slower to fit).
    """
    params = dict(params)
    if algo_id == "knn":
        est = KNeighborsClassifier(**params)
    elif algo_id == "svc":
        est = SVC(probability=True, random_state=seed, **params)
    elif algo_id == "gaunb":
        est = GaussianNB(**params)
    elif algo_id == "mlp":
        est = MLPClassifier(random_state=seed, max_iter=400, **params)
    elif algo_id == "lr":
        est = LogisticRegression(random_state=seed, max_iter=2000, **params)
    elif algo_id == "lda":
        est = LinearDiscriminantAnalysis(**params)
    elif algo_id == "qda":
        est = QuadraticDiscriminantAnalysis(**params)
    elif algo_id == "rf":
        est = RandomForestClassifier(random_state=seed, **params)
    elif algo_id == "extrat":
        est = ExtraTreesClassifier(random_state=seed, **params)
    elif algo_id == "adab":
        est = AdaBoostClassifier(random_state=seed, **params)
    elif algo_id == "gradb":
        est = GradientBoostingClassifier(random_state=seed, **params)
    else:
        raise EvalError(f"unknown algorithm {algo_id!r}")
    return Pipeline([("scale", StandardScaler()), ("model", est)])


@dataclass(frozen=True)
class ModelRecord:
    spec: ModelSpec
    feature_mask: np.ndarray
    oof_pred: np.ndarray | None
    oof_proba: np.ndarray | None
    metrics: MetricVector | None
    combined: float
    per_class: dict[str, dict[str, float]]
    failed: bool = False
    error: str | None = None


@dataclass(frozen=True)
class EvaluationRun:
    snapshot_id: str
    config_hash: str
    records: dict[int, ModelRecord]
    fold_assignment: np.ndarray
    class_names: tuple[str, ...]
    seed: int
    n_folds: int
    masks_fingerprint: str

    def non_failed(self) -> dict[int, ModelRecord]:
        return {mid: r for mid, r in self.records.items() if not r.failed}


def fold_partition(y: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Stratified fold index per instance, shared by every model in the run."""
    counts = np.bincount(y)
    low = np.where((counts > 0) & (counts < n_folds))[0]
    if low.size:
        raise EvalError(
            f"classes {low.tolist()} have fewer than {n_folds} instances; cannot stratify"
        )
    skf = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    assignment = np.full(y.shape[0], -1, dtype=np.int64)
    for fold, (_, test_idx) in enumerate(skf.split(np.zeros((y.shape[0], 1)), y)):
        assignment[test_idx] = fold
    return assignment


def masks_fingerprint(masks: dict[int, np.ndarray]) -> str:
    h = hashlib.sha256()
    for mid in sorted(masks):
        h.update(str(mid).encode())
        h.update(np.asarray(masks[mid], dtype=bool).tobytes())
    return h.hexdigest()[:16]


def oof_predictions(
    snapshot: DatasetSnapshot,
    spec: ModelSpec,
    mask: np.ndarray,
    fold_assignment: np.ndarray,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Train per fold on masked features and assemble out-of-fold predictions."""
    n, n_classes = snapshot.n_instances, snapshot.n_classes
    cols = np.where(mask)[0]
    X = snapshot.X[:, cols]
    y = snapshot.y
    oof_proba = np.zeros((n, n_classes), dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for fold in range(int(fold_assignment.max()) + 1):
            test = fold_assignment == fold
            train = ~test
            est = build_estimator(spec.algo_id, spec.params, seed)
            est.fit(X[train], y[train])
            proba = est.predict_proba(X[test])
            # align estimator class order with the snapshot universe
            classes = np.asarray(est.classes_, dtype=int)
            aligned = np.zeros((proba.shape[0], n_classes), dtype=float)
            aligned[:, classes] = proba
            oof_proba[test] = aligned
    if not np.all(np.isfinite(oof_proba)):
        raise EvalError("model produced non-finite probabilities")
    oof_pred = np.argmax(oof_proba, axis=1).astype(np.int64)
    return oof_pred, oof_proba


class EvaluationCache:
    """Disk cache of out-of-fold arrays, keyed independently of metric weights."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def key(self, snapshot: DatasetSnapshot, spec: ModelSpec, mask: np.ndarray, seed: int, n_folds: int) -> str:
        h = hashlib.sha256()
        h.update(snapshot.content_hash().encode())
        h.update(spec.content_hash().encode())
        h.update(np.asarray(mask, dtype=bool).tobytes())
        h.update(f"{seed}:{n_folds}".encode())
        return h.hexdigest()[:32]

    def get(self, key: str) -> tuple[np.ndarray, np.ndarray] | None:
        path = self.directory / f"{key}.npz"
        if not path.exists():
            return None
        data = np.load(path)
        return data["oof_pred"], data["oof_proba"]

    def put(self, key: str, oof_pred: np.ndarray, oof_proba: np.ndarray) -> None:
        path = self.directory / f"{key}.npz"
        tmp = path.with_suffix(".tmp.npz")
        np.savez_compressed(tmp, oof_pred=oof_pred, oof_proba=oof_proba)
        tmp.replace(path)


def _record_from_oof(
    snapshot: DatasetSnapshot,
    spec: ModelSpec,
    mask: np.ndarray,
    oof_pred: np.ndarray,
    oof_proba: np.ndarray,
    config: MetricConfig,
) -> ModelRecord:
    metrics = compute_metrics(snapshot.y, oof_pred, oof_proba, config)
    combined = weighted_score(metrics, config)
    stats = per_class_stats(snapshot.y, oof_pred, snapshot.n_classes)
    per_class = {snapshot.class_names[c]: stats[c] for c in range(snapshot.n_classes)}
    return ModelRecord(
        spec=spec,
        feature_mask=np.asarray(mask, dtype=bool).copy(),
        oof_pred=oof_pred,
        oof_proba=oof_proba,
        metrics=metrics,
        combined=combined,
        per_class=per_class,
        failed=False,
    )


def _failed_record(spec: ModelSpec, mask: np.ndarray, error: str) -> ModelRecord:
    return ModelRecord(
        spec=spec,
        feature_mask=np.asarray(mask, dtype=bool).copy(),
        oof_pred=None,
        oof_proba=None,
        metrics=None,
        combined=0.0,
        per_class={},
        failed=True,
        error=error,
    )


def evaluate_pool(
    snapshot: DatasetSnapshot,
    pool: list[ModelSpec],
    config: MetricConfig,
    masks: dict[int, np.ndarray] | None = None,
    *,
    seed: int = 0,
    n_folds: int = 5,
    max_workers: int | None = None,
    progress: Callable[[int, int, str], None] | None = None,
    cache: EvaluationCache | None = None,
) -> EvaluationRun:
    """Evaluate every model in the pool under shared stratified folds.

    Training failures are kept as flagged records (combined score 0) so pool
    indices stay stable; they are excluded from stacking downstream.
    """
    if not pool:
        raise EvalError("empty model pool")
    fold_assignment = fold_partition(snapshot.y, n_folds, seed)
    full_mask = np.ones(snapshot.n_features, dtype=bool)
    eff_masks: dict[int, np.ndarray] = {}
    for m in pool:
        mask = np.asarray(masks.get(m.model_id, full_mask) if masks else full_mask, dtype=bool)
        if mask.shape != (snapshot.n_features,):
            raise EvalError(f"mask for model {m.model_id} has wrong length")
        if not mask.any():
            raise EvalError(f"mask for model {m.model_id} keeps no features")
        eff_masks[m.model_id] = mask

    total = len(pool)
    done = 0
    lock = threading.Lock()

    def bump() -> None:
        nonlocal done
        with lock:
            done += 1
            if progress is not None:
                progress(done, total, "evaluating")

    def eval_one(spec: ModelSpec) -> tuple[int, ModelRecord]:
        mask = eff_masks[spec.model_id]
        try:
            key = cache.key(snapshot, spec, mask, seed, n_folds) if cache else None
            cached = cache.get(key) if cache else None
            if cached is not None:
                oof_pred, oof_proba = cached
            else:
                oof_pred, oof_proba = oof_predictions(snapshot, spec, mask, fold_assignment, seed)
                if cache:
                    cache.put(key, oof_pred, oof_proba)
            record = _record_from_oof(snapshot, spec, mask, oof_pred, oof_proba, config)
        except Exception as exc:  # noqa: BLE001 - failures become flagged records
            record = _failed_record(spec, mask, f"{type(exc).__name__}: {exc}")
        bump()
        return spec.model_id, record

    records: dict[int, ModelRecord] = {}
    # filters are process-global; scope them around the whole pool run so
    # worker threads inherit the suppression
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if max_workers is None or max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool_exec:
                for mid, record in pool_exec.map(eval_one, pool):
                    records[mid] = record
        else:
            for spec in pool:
                mid, record = eval_one(spec)
                records[mid] = record

    return EvaluationRun(
        snapshot_id=snapshot.snapshot_id,
        config_hash=config.config_hash(),
        records=dict(sorted(records.items())),
        fold_assignment=fold_assignment,
        class_names=snapshot.class_names,
        seed=seed,
        n_folds=n_folds,
        masks_fingerprint=masks_fingerprint(eff_masks),
    )


def rescore(run: EvaluationRun, snapshot: DatasetSnapshot, config: MetricConfig) -> EvaluationRun:
    """Recompute metric vectors and combined scores from stored out-of-fold arrays.

    No retraining happens: the oof arrays are reused as-is, so re-weighting is
    instant and raw metric values depend only on averaging/beta options.
    """
    if run.snapshot_id != snapshot.snapshot_id:
        raise EvalError("rescore requires the run's own snapshot")
    new_records: dict[int, ModelRecord] = {}
    for mid, rec in run.records.items():
        if rec.failed:
            new_records[mid] = rec
            continue
        metrics = compute_metrics(snapshot.y, rec.oof_pred, rec.oof_proba, config)
        combined = weighted_score(metrics, config)
        new_records[mid] = replace(rec, metrics=metrics, combined=combined)
    return replace(run, records=new_records, config_hash=config.config_hash())


def algorithm_score_distribution(run: EvaluationRun) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Boxplot stats of combined scores per algorithm (midpoint quartile rule).

    Returns the stats plus the algorithm ids omitted for having no surviving
    records.
    """
    by_algo: dict[str, list[float]] = {}
    failed_algos: set[str] = set()
    for rec in run.records.values():
        if rec.failed:
            failed_algos.add(rec.spec.algo_id)
            continue
        by_algo.setdefault(rec.spec.algo_id, []).append(rec.combined)
    stats: dict[str, dict[str, float]] = {}
    for algo_id, scores in by_algo.items():
        arr = np.asarray(scores, dtype=float)
        stats[algo_id] = {
            "min": float(arr.min()),
            "q1": float(np.percentile(arr, 25, method="midpoint")),
            "median": float(np.percentile(arr, 50, method="midpoint")),
            "q3": float(np.percentile(arr, 75, method="midpoint")),
            "max": float(arr.max()),
            "count": int(arr.size),
        }
    omitted = sorted(failed_algos - set(stats))
    return stats, omitted


def per_class_summary(
    run: EvaluationRun, selected: set[int]
) -> dict[str, dict[str, dict[str, dict[str, float] | None]]]:
    """Per-algorithm, per-class mean precision/recall/f1: all models vs selection."""
    unknown = set(selected) - set(run.records)
    if unknown:
        raise EvalError(f"selected ids not in run: {sorted(unknown)[:5]}")

    def mean_stats(records: list[ModelRecord], class_name: str) -> dict[str, float]:
        triples = [r.per_class[class_name] for r in records]
        return {
            k: float(np.mean([t[k] for t in triples])) for k in ("precision", "recall", "f1")
        }

    summary: dict[str, dict[str, dict]] = {}
    by_algo: dict[str, list[ModelRecord]] = {}
    for rec in run.records.values():
        if not rec.failed:
            by_algo.setdefault(rec.spec.algo_id, []).append(rec)
    for algo_id, records in sorted(by_algo.items()):
        chosen = [r for r in records if r.spec.model_id in selected]
        summary[algo_id] = {}
        for class_name in run.class_names:
            summary[algo_id][class_name] = {
                "baseline": mean_stats(records, class_name),
                "selected": mean_stats(chosen, class_name) if chosen else None,
            }
    return summary

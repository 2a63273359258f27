"""Stack assembly, metamodel training, storage, and JSON export/import.

Meta-features are the concatenated out-of-fold class probabilities of the base
models (N x B*C). The metamodel is an L2-regularized logistic regression whose
coefficients realize the automatic weighting of base models; it is evaluated
with the same stratified folds as the base pool, so no instance's meta-feature
row is seen by its own evaluation fold.

The export document embeds the training matrix: base models are refit from
(algo, params, seed) on it at import time, while the metamodel is restored
from its stored coefficients, making the round trip prediction-identical.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LogisticRegression

from .eval_engine import EvaluationRun, build_estimator
from .metrics import MetricConfig, averaged_prf, confusion_matrix
from .wrangler import DatasetSnapshot

SCHEMA_VERSION = "1"
DOCUMENT_KIND = "stackbench-stack"
META_REGULARIZATION_C = 1.0


class StackError(ValueError):
    """Invalid stack operation."""


class StackValidationError(StackError):
    """Export document failed schema validation; names the offending path."""


def four_metric_performance(
    y_true: np.ndarray, y_pred: np.ndarray, n_classes: int, config: MetricConfig
) -> dict[str, float]:
    """accuracy / precision / recall / f1 with the config's averaging modes."""
    cm = confusion_matrix(np.asarray(y_true), np.asarray(y_pred), n_classes)
    return {
        "accuracy": float(np.mean(np.asarray(y_true) == np.asarray(y_pred))),
        "precision": averaged_prf(cm, "precision", config.averaging["precision"], 1.0),
        "recall": averaged_prf(cm, "recall", config.averaging["recall"], 1.0),
        "f1": averaged_prf(cm, "fbeta", config.averaging["fbeta"], 1.0),
    }


@dataclass(frozen=True)
class ActiveStack:
    """The not-yet-stored ensemble currently under evaluation."""

    model_ids: tuple[int, ...]
    feature_masks: dict[int, np.ndarray]
    snapshot_id: str
    metric_config_hash: str
    seed: int
    n_folds: int
    performance: dict[str, float]
    meta_coef: np.ndarray
    meta_intercept: np.ndarray
    meta_classes: np.ndarray
    algorithms_used: tuple[str, ...]
    excluded: tuple[int, ...] = ()


@dataclass(frozen=True)
class StackRecord:
    """Immutable stored ensemble with lineage."""

    stack_id: str
    parent_stack_id: str | None
    model_ids: tuple[int, ...]
    feature_masks: dict[int, np.ndarray]
    snapshot_id: str
    metric_config_hash: str
    performance: dict[str, float]
    algorithms_used: tuple[str, ...]
    note: str = ""

    @property
    def model_count(self) -> int:
        return len(self.model_ids)


def _meta_matrix(run: EvaluationRun, model_ids: list[int]) -> tuple[np.ndarray, list[int], list[int]]:
    blocks = []
    usable: list[int] = []
    excluded: list[int] = []
    for mid in model_ids:
        rec = run.records.get(mid)
        if rec is None:
            raise StackError(f"model {mid} not present in the evaluation run")
        if rec.failed:
            raise StackError(f"model {mid} failed evaluation and cannot join a stack")
        if rec.oof_proba is None or not np.all(np.isfinite(rec.oof_proba)):
            warnings.warn(f"model {mid} lacks probabilities; excluded from the stack", stacklevel=2)
            excluded.append(mid)
            continue
        usable.append(mid)
        blocks.append(rec.oof_proba)
    if not usable:
        raise StackError("no models with probability outputs survive; cannot build a stack")
    return np.hstack(blocks), usable, excluded


def _fit_meta(meta_X: np.ndarray, y: np.ndarray, seed: int) -> LogisticRegression:
    meta = LogisticRegression(C=META_REGULARIZATION_C, max_iter=1000, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        meta.fit(meta_X, y)
    return meta


def build_stack(
    run: EvaluationRun,
    model_ids: list[int],
    snapshot: DatasetSnapshot,
    config: MetricConfig,
) -> ActiveStack:
    """Train and cross-validate the metamodel over the selected base models."""
    if run.snapshot_id != snapshot.snapshot_id:
        raise StackError("evaluation run does not match the snapshot")
    if not model_ids:
        raise StackError("a stack needs at least one model")
    ordered = sorted(set(int(m) for m in model_ids))
    meta_X, usable, excluded = _meta_matrix(run, ordered)
    y = snapshot.y

    meta_oof = np.full(snapshot.n_instances, -1, dtype=np.int64)
    for fold in range(run.n_folds):
        test = run.fold_assignment == fold
        meta = _fit_meta(meta_X[~test], y[~test], run.seed)
        meta_oof[test] = meta.predict(meta_X[test])
    performance = four_metric_performance(y, meta_oof, snapshot.n_classes, config)

    final_meta = _fit_meta(meta_X, y, run.seed)
    masks = {mid: run.records[mid].feature_mask.copy() for mid in usable}
    algos = tuple(sorted({run.records[mid].spec.algo_id for mid in usable}))
    return ActiveStack(
        model_ids=tuple(usable),
        feature_masks=masks,
        snapshot_id=snapshot.snapshot_id,
        metric_config_hash=config.config_hash(),
        seed=run.seed,
        n_folds=run.n_folds,
        performance=performance,
        meta_coef=np.asarray(final_meta.coef_, dtype=float),
        meta_intercept=np.asarray(final_meta.intercept_, dtype=float),
        meta_classes=np.asarray(final_meta.classes_, dtype=np.int64),
        algorithms_used=algos,
        excluded=tuple(excluded),
    )


class StackRegistry:
    """Session-scoped store of immutable stacks with parent lineage."""

    def __init__(self) -> None:
        self._stacks: dict[str, StackRecord] = {}
        self._order: list[str] = []
        self.active_stored_id: str | None = None

    def store(self, active: ActiveStack, note: str = "") -> StackRecord:
        stack_id = f"S{len(self._order) + 1}"
        record = StackRecord(
            stack_id=stack_id,
            parent_stack_id=self.active_stored_id,
            model_ids=active.model_ids,
            feature_masks={mid: m.copy() for mid, m in active.feature_masks.items()},
            snapshot_id=active.snapshot_id,
            metric_config_hash=active.metric_config_hash,
            performance=dict(active.performance),
            algorithms_used=active.algorithms_used,
            note=note,
        )
        self._stacks[stack_id] = record
        self._order.append(stack_id)
        self.active_stored_id = stack_id
        return record

    def activate(self, stack_id: str) -> StackRecord:
        record = self.get(stack_id)
        self.active_stored_id = stack_id
        return record

    def get(self, stack_id: str) -> StackRecord:
        if stack_id not in self._stacks:
            raise StackError(f"unknown stack {stack_id!r}")
        return self._stacks[stack_id]

    def all(self) -> list[StackRecord]:
        return [self._stacks[sid] for sid in self._order]


# ---------------------------------------------------------------------------
# export / import


def export_stack(
    record: StackRecord,
    active: ActiveStack,
    run: EvaluationRun,
    snapshot: DatasetSnapshot,
    config: MetricConfig,
) -> dict:
    """Self-contained JSON document reproducing the stored stack's predictor."""
    if record.snapshot_id != snapshot.snapshot_id:
        raise StackError("export requires the stack's own snapshot")
    models = []
    for mid in record.model_ids:
        rec = run.records[mid]
        models.append(
            {
                "model_id": mid,
                "algo_id": rec.spec.algo_id,
                "params": {
                    k: list(v) if isinstance(v, tuple) else v for k, v in rec.spec.params.items()
                },
                "seed": run.seed,
                "feature_mask": [bool(b) for b in record.feature_masks[mid]],
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": DOCUMENT_KIND,
        "stack_id": record.stack_id,
        "parent_stack_id": record.parent_stack_id,
        "dataset_fingerprint": snapshot.content_hash(),
        "metric_config": config.to_dict(),
        "class_names": list(snapshot.class_names),
        "feature_names": list(snapshot.feature_names),
        "seed": run.seed,
        "n_folds": run.n_folds,
        "performance": dict(record.performance),
        "models": models,
        "metamodel": {
            "type": "logistic_regression",
            "regularization_c": META_REGULARIZATION_C,
            "coef": active.meta_coef.tolist(),
            "intercept": active.meta_intercept.tolist(),
            "classes": active.meta_classes.tolist(),
        },
        "training_data": {
            "X": snapshot.X.tolist(),
            "y": snapshot.y.tolist(),
        },
    }


_REQUIRED_PATHS = (
    "schema_version",
    "kind",
    "class_names",
    "feature_names",
    "models",
    "metamodel",
    "metamodel.coef",
    "metamodel.intercept",
    "metamodel.classes",
    "training_data",
    "training_data.X",
    "training_data.y",
)


def validate_document(doc: dict) -> None:
    for path in _REQUIRED_PATHS:
        node = doc
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                raise StackValidationError(f"export document is missing required path {path!r}")
            node = node[part]
    if doc["kind"] != DOCUMENT_KIND:
        raise StackValidationError(f"unexpected document kind {doc['kind']!r}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise StackValidationError(
            f"unsupported schema version {doc['schema_version']!r} (expected {SCHEMA_VERSION!r})"
        )
    for i, model in enumerate(doc["models"]):
        for key in ("algo_id", "params", "seed", "feature_mask"):
            if key not in model:
                raise StackValidationError(f"export document is missing required path 'models[{i}].{key}'")


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


class StackPredictor:
    """Executable predictor reconstructed from an export document."""

    def __init__(self, doc: dict):
        validate_document(doc)
        self.class_names = list(doc["class_names"])
        self.feature_names = list(doc["feature_names"])
        X = np.asarray(doc["training_data"]["X"], dtype=float)
        y = np.asarray(doc["training_data"]["y"], dtype=np.int64)
        fingerprint = hashlib.sha256()
        fingerprint.update(np.ascontiguousarray(X).tobytes())
        fingerprint.update(np.ascontiguousarray(y).tobytes())
        fingerprint.update("|".join(self.feature_names).encode())
        fingerprint.update("|".join(self.class_names).encode())
        recorded = doc.get("dataset_fingerprint")
        if recorded is not None and recorded != fingerprint.hexdigest()[:16]:
            warnings.warn(
                "dataset fingerprint mismatch: embedded training data differs from the recorded hash",
                stacklevel=2,
            )
        self._bases = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for model in doc["models"]:
                mask = np.asarray(model["feature_mask"], dtype=bool)
                params = {k: _tuplify(v) for k, v in model["params"].items()}
                est = build_estimator(model["algo_id"], params, int(model["seed"]))
                est.fit(X[:, mask], y)
                self._bases.append((est, mask))
        meta = doc["metamodel"]
        self._meta = LogisticRegression(C=meta.get("regularization_c", META_REGULARIZATION_C))
        self._meta.coef_ = np.asarray(meta["coef"], dtype=float)
        self._meta.intercept_ = np.asarray(meta["intercept"], dtype=float)
        self._meta.classes_ = np.asarray(meta["classes"], dtype=np.int64)
        self._meta.n_features_in_ = self._meta.coef_.shape[1]
        self._n_classes = len(self.class_names)

    def _meta_features(self, X: np.ndarray) -> np.ndarray:
        blocks = []
        for est, mask in self._bases:
            proba = est.predict_proba(X[:, mask])
            aligned = np.zeros((X.shape[0], self._n_classes))
            aligned[:, np.asarray(est.classes_, dtype=int)] = proba
            blocks.append(aligned)
        return np.hstack(blocks)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self._meta.predict(self._meta_features(np.asarray(X, dtype=float)))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._meta.predict_proba(self._meta_features(np.asarray(X, dtype=float)))

    def predict_labels(self, X: np.ndarray) -> list[str]:
        return [self.class_names[i] for i in self.predict(X)]


def import_stack(doc_or_json: dict | str) -> StackPredictor:
    doc = json.loads(doc_or_json) if isinstance(doc_or_json, str) else doc_or_json
    return StackPredictor(doc)


def make_predictor(
    active: ActiveStack,
    run: EvaluationRun,
    snapshot: DatasetSnapshot,
) -> StackPredictor:
    """In-session predictor: base models refit on the full snapshot, stored meta."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": DOCUMENT_KIND,
        "class_names": list(snapshot.class_names),
        "feature_names": list(snapshot.feature_names),
        "dataset_fingerprint": snapshot.content_hash(),
        "models": [
            {
                "model_id": mid,
                "algo_id": run.records[mid].spec.algo_id,
                "params": {
                    k: list(v) if isinstance(v, tuple) else v
                    for k, v in run.records[mid].spec.params.items()
                },
                "seed": run.seed,
                "feature_mask": [bool(b) for b in active.feature_masks[mid]],
            }
            for mid in active.model_ids
        ],
        "metamodel": {
            "type": "logistic_regression",
            "regularization_c": META_REGULARIZATION_C,
            "coef": active.meta_coef.tolist(),
            "intercept": active.meta_intercept.tolist(),
            "classes": active.meta_classes.tolist(),
        },
        "training_data": {"X": snapshot.X.tolist(), "y": snapshot.y.tolist()},
    }
    return StackPredictor(doc)

import numpy as np
import pytest


def pytest_terminal_summary(terminalreporter):
    try:
        from .test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)

from stackbench.eval_engine import evaluate_pool
from stackbench.metrics import METRIC_IDS, MetricConfig
from stackbench.model_zoo import ModelZoo
from stackbench.wrangler import SnapshotStore

SEED = 20240

# Small grids shared by engine-level tests to keep runtime low.
TINY_GRIDS = {
    "knn": {"n_neighbors": (3, 7), "weights": ("uniform",), "p": (2,)},
    "svc": {"C": (1.0,), "kernel": ("linear",)},
    "gaunb": {"var_smoothing": (1e-9,)},
    "mlp": {"hidden_layer_sizes": ((20,),), "alpha": (0.001,), "activation": ("relu",)},
    "lr": {"C": (1.0,), "class_weight": (None,)},
    "lda": {"solver": ("svd",)},
    "qda": {"reg_param": (0.1,)},
    "rf": {"n_estimators": (25,), "max_depth": (5,), "criterion": ("gini",)},
    "extrat": {"n_estimators": (25,), "max_depth": (5,), "criterion": ("gini",)},
    "adab": {"n_estimators": (25,), "learning_rate": (0.5,)},
    "gradb": {"n_estimators": (25,), "learning_rate": (0.1,), "max_depth": (2,)},
}


def default_config(**overrides):
    base = dict(
        weights={m: 100.0 for m in METRIC_IDS},
        averaging={"precision": "macro", "recall": "macro", "fbeta": "macro", "roc_auc": "macro"},
        beta=1.0,
        detailed_feature_search=True,
    )
    base.update(overrides)
    return MetricConfig(**base)


def make_blob_store(n_per_class=30, n_features=4, seed=SEED, spread=1.6):
    """Two Gaussian blobs with some overlap; last feature is pure noise."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((2, n_features))
    centers[1, : n_features - 1] = spread
    X = np.vstack(
        [rng.normal(centers[c], 1.0, size=(n_per_class, n_features)) for c in (0, 1)]
    )
    X[:, -1] = rng.normal(0, 1, size=2 * n_per_class)
    y = np.repeat([0, 1], n_per_class)
    perm = rng.permutation(2 * n_per_class)
    return SnapshotStore.from_arrays(
        X[perm],
        tuple(f"f{i}" for i in range(n_features)),
        y[perm],
        ("alpha", "beta"),
    )


def make_separable_store(n_per_class=25, seed=SEED):
    """Linearly separable two-feature problem with a wide margin."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal([-3.0, -3.0], 0.5, size=(n_per_class, 2))
    X1 = rng.normal([3.0, 3.0], 0.5, size=(n_per_class, 2))
    X = np.vstack([X0, X1])
    y = np.repeat([0, 1], n_per_class)
    perm = rng.permutation(2 * n_per_class)
    return SnapshotStore.from_arrays(X[perm], ("u", "v"), y[perm], ("neg", "pos"))


@pytest.fixture(scope="session")
def tiny_zoo():
    return ModelZoo(grids=TINY_GRIDS)


@pytest.fixture(scope="session")
def blob_store():
    return make_blob_store()


@pytest.fixture(scope="session")
def heart_store():
    from stackbench.data import heart_csv_text
    from stackbench.wrangler import load_csv

    X, names, y, classes = load_csv(heart_csv_text(), label_column="Diagnosis", is_text=True)
    return SnapshotStore.from_arrays(X, names, y, classes)


@pytest.fixture(scope="session")
def blob_run(blob_store, tiny_zoo):
    return evaluate_pool(
        blob_store.active,
        tiny_zoo.enumerate_pool(),
        default_config(),
        seed=SEED,
        n_folds=5,
    )


def make_fake_run(
    *,
    metric_rows=None,
    oof_preds=None,
    oof_probas=None,
    algo_ids=None,
    n_classes=2,
    class_names=("a", "b"),
    snapshot_id="d0",
):
    """Hand-built EvaluationRun for tests that do not need real training."""
    from stackbench.eval_engine import EvaluationRun, ModelRecord
    from stackbench.metrics import METRIC_IDS, MetricVector
    from stackbench.model_zoo import ModelSpec

    n_models = len(metric_rows) if metric_rows is not None else len(oof_preds)
    records = {}
    for mid in range(n_models):
        normalized = {m: 0.5 for m in METRIC_IDS}
        if metric_rows is not None:
            normalized.update(metric_rows[mid])
        if oof_preds is not None:
            pred = np.asarray(oof_preds[mid], dtype=np.int64)
        else:
            pred = np.zeros(4, dtype=np.int64)
        if oof_probas is not None:
            proba = np.asarray(oof_probas[mid], dtype=float)
        else:
            proba = np.zeros((pred.shape[0], n_classes))
            proba[np.arange(pred.shape[0]), pred] = 1.0
        records[mid] = ModelRecord(
            spec=ModelSpec(mid, (algo_ids or ["knn"] * n_models)[mid], {}),
            feature_mask=np.ones(2, dtype=bool),
            oof_pred=pred,
            oof_proba=proba,
            metrics=MetricVector(raw=dict(normalized), normalized=dict(normalized)),
            combined=float(np.mean(list(normalized.values()))),
            per_class={c: {"precision": 0.5, "recall": 0.5, "f1": 0.5} for c in class_names},
        )
    n_instances = records[0].oof_pred.shape[0]
    return EvaluationRun(
        snapshot_id=snapshot_id,
        config_hash="test",
        records=records,
        fold_assignment=np.zeros(n_instances, dtype=np.int64),
        class_names=tuple(class_names),
        seed=0,
        n_folds=5,
        masks_fingerprint="test",
    )

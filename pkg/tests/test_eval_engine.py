import numpy as np
import pytest

from stackbench.eval_engine import (
    EvalError,
    EvaluationCache,
    algorithm_score_distribution,
    evaluate_pool,
    fold_partition,
    per_class_summary,
    rescore,
)
from stackbench.model_zoo import ModelSpec, ModelZoo
from stackbench.wrangler import SnapshotStore

from . import oracles
from .conftest import SEED, default_config, make_separable_store


def knn_only_zoo(**grid):
    base = {"n_neighbors": (3,), "weights": ("uniform",), "p": (2,)}
    base.update(grid)
    return ModelZoo(grids={"knn": base, **{a: {"__unused": ()} for a in ()}})


class TestFoldPartition:
    def test_partition_covers_everything_once(self):
        y = np.repeat([0, 1, 2], 20)
        folds = fold_partition(y, 5, seed=1)
        assert folds.min() == 0 and folds.max() == 4
        assert np.all(np.bincount(folds) == 12)

    def test_stratification(self):
        y = np.repeat([0, 1], [40, 10])
        folds = fold_partition(y, 5, seed=3)
        for f in range(5):
            counts = np.bincount(y[folds == f], minlength=2)
            assert counts[0] == 8 and counts[1] == 2

    def test_too_few_instances_per_class(self):
        y = np.array([0, 0, 0, 1, 1, 1, 1, 1])
        with pytest.raises(EvalError, match="fewer than 5"):
            fold_partition(y, 5, seed=0)

    def test_deterministic(self):
        y = np.repeat([0, 1], 25)
        assert np.array_equal(fold_partition(y, 5, 7), fold_partition(y, 5, 7))


class TestEvaluatePool:
    def test_oof_arrays_align_with_snapshot(self, blob_store, blob_run):
        n = blob_store.active.n_instances
        for rec in blob_run.non_failed().values():
            assert rec.oof_pred.shape == (n,)
            assert rec.oof_proba.shape == (n, 2)
            assert np.allclose(rec.oof_proba.sum(axis=1), 1.0, atol=1e-6)

    def test_majority_dummy_on_imbalanced_toy(self):
        # 90/10 split, pure-noise features; a KNN looking at (almost) all
        # training points predicts the majority class everywhere.
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 3))
        y = np.array([0] * 90 + [1] * 10)
        store = SnapshotStore.from_arrays(X, ("a", "b", "c"), y, ("maj", "min"))
        pool = [ModelSpec(0, "knn", {"n_neighbors": 80, "weights": "uniform", "p": 2})]
        run = evaluate_pool(store.active, pool, default_config(), seed=1, n_folds=5)
        rec = run.records[0]
        assert not rec.failed
        # hand confusion-matrix oracle on the assembled oof predictions
        acc = oracles.oracle_accuracy(store.active.y.tolist(), rec.oof_pred.tolist())
        assert rec.metrics.raw["accuracy"] == pytest.approx(acc)
        assert acc == pytest.approx(0.9, abs=0.001)
        assert rec.metrics.raw["gmean"] == pytest.approx(0.0, abs=1e-9)

    def test_identical_specs_identical_records(self, blob_store):
        pool = [
            ModelSpec(0, "rf", {"n_estimators": 20, "max_depth": 3, "criterion": "gini"}),
            ModelSpec(1, "rf", {"n_estimators": 20, "max_depth": 3, "criterion": "gini"}),
        ]
        run = evaluate_pool(blob_store.active, pool, default_config(), seed=SEED, n_folds=5)
        a, b = run.records[0], run.records[1]
        assert a.oof_pred.tobytes() == b.oof_pred.tobytes()
        assert a.oof_proba.tobytes() == b.oof_proba.tobytes()
        assert a.combined == b.combined
        assert a.metrics == b.metrics
        assert a.per_class == b.per_class

    def test_no_leakage_memorizer_canary(self):
        # Random labels + a 1-NN memorizer: any train/test leakage would give
        # near-perfect accuracy; honest out-of-fold accuracy stays near chance.
        rng = np.random.default_rng(11)
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 2, size=60)
        while min(np.bincount(y)) < 10:
            y = rng.integers(0, 2, size=60)
        store = SnapshotStore.from_arrays(X, tuple("abcd"), y, ("x", "y"))
        pool = [ModelSpec(0, "knn", {"n_neighbors": 1, "weights": "uniform", "p": 2})]
        run = evaluate_pool(store.active, pool, default_config(), seed=2, n_folds=5)
        assert run.records[0].metrics.raw["accuracy"] < 0.8

    def test_fold_bookkeeping_is_a_partition(self, blob_store, blob_run):
        folds = blob_run.fold_assignment
        assert folds.shape == (blob_store.active.n_instances,)
        assert set(np.unique(folds)) == set(range(5))

    def test_failed_training_flagged_not_dropped(self, blob_store, monkeypatch):
        import stackbench.eval_engine as engine

        real = engine.build_estimator

        def flaky(algo_id, params, seed):
            if algo_id == "qda":
                raise RuntimeError("singular covariance")
            return real(algo_id, params, seed)

        monkeypatch.setattr(engine, "build_estimator", flaky)
        pool = [
            ModelSpec(0, "qda", {"reg_param": 0.0}),
            ModelSpec(1, "lr", {"C": 1.0, "class_weight": None}),
        ]
        run = evaluate_pool(blob_store.active, pool, default_config(), seed=1, n_folds=5)
        assert run.records[0].failed
        assert run.records[0].combined == 0.0
        assert "singular covariance" in run.records[0].error
        assert not run.records[1].failed

    def test_linearly_separable_sanity(self):
        store = make_separable_store()
        pool = [
            ModelSpec(0, "lr", {"C": 1.0, "class_weight": None}),
            ModelSpec(1, "lda", {"solver": "svd"}),
            ModelSpec(2, "svc", {"C": 1.0, "kernel": "linear"}),
        ]
        run = evaluate_pool(store.active, pool, default_config(), seed=3, n_folds=5)
        for rec in run.records.values():
            assert rec.metrics.raw["accuracy"] >= 0.95

    def test_mask_keeps_at_least_one_feature(self, blob_store):
        pool = [ModelSpec(0, "lr", {"C": 1.0, "class_weight": None})]
        masks = {0: np.zeros(blob_store.active.n_features, dtype=bool)}
        with pytest.raises(EvalError, match="keeps no features"):
            evaluate_pool(blob_store.active, pool, default_config(), masks, seed=1)

    def test_progress_reported(self, blob_store, tiny_zoo):
        seen = []
        pool = tiny_zoo.enumerate_pool({"knn": {"n_neighbors": [3]}})[:3]
        evaluate_pool(
            blob_store.active,
            pool,
            default_config(),
            seed=1,
            n_folds=5,
            progress=lambda done, total, phase: seen.append((done, total, phase)),
        )
        assert seen[-1][0] == seen[-1][1] == len(pool)

    def test_cache_round_trip(self, blob_store, tmp_path):
        cache = EvaluationCache(tmp_path / "cache")
        pool = [ModelSpec(0, "rf", {"n_estimators": 10, "max_depth": 3, "criterion": "gini"})]
        run1 = evaluate_pool(blob_store.active, pool, default_config(), seed=4, cache=cache)
        run2 = evaluate_pool(blob_store.active, pool, default_config(), seed=4, cache=cache)
        a, b = run1.records[0], run2.records[0]
        assert a.oof_pred.tobytes() == b.oof_pred.tobytes()
        assert a.oof_proba.tobytes() == b.oof_proba.tobytes()


class TestRescore:
    def test_rescoring_never_retrains(self, blob_store, blob_run):
        cfg = default_config(weights={m: (100.0 if m == "accuracy" else 0.0) for m in default_config().weights})
        rerun = rescore(blob_run, blob_store.active, cfg)
        for mid, rec in blob_run.non_failed().items():
            new = rerun.records[mid]
            assert new.oof_pred.tobytes() == rec.oof_pred.tobytes()
            assert new.oof_proba.tobytes() == rec.oof_proba.tobytes()
            # raw metrics invariant when averaging/beta unchanged
            assert new.metrics.raw == rec.metrics.raw
            assert new.combined == pytest.approx(new.metrics.normalized["accuracy"])

    def test_rescore_requires_matching_snapshot(self, blob_run):
        from .conftest import make_blob_store

        wrangled = make_blob_store().remove_instances({0})
        with pytest.raises(EvalError, match="own snapshot"):
            rescore(blob_run, wrangled, default_config())


class TestDistributions:
    def _fake_run(self, scores_by_algo, fail=()):
        from stackbench.eval_engine import EvaluationRun, ModelRecord
        from stackbench.metrics import METRIC_IDS, MetricVector

        records = {}
        mid = 0
        for algo, scores in scores_by_algo.items():
            for s in scores:
                v = MetricVector(raw={m: s for m in METRIC_IDS}, normalized={m: s for m in METRIC_IDS})
                records[mid] = ModelRecord(
                    spec=ModelSpec(mid, algo, {}),
                    feature_mask=np.ones(2, dtype=bool),
                    oof_pred=np.zeros(4, dtype=np.int64),
                    oof_proba=np.full((4, 2), 0.5),
                    metrics=v,
                    combined=s,
                    per_class={"a": {"precision": s, "recall": s, "f1": s}},
                )
                mid += 1
        for algo in fail:
            records[mid] = ModelRecord(
                spec=ModelSpec(mid, algo, {}),
                feature_mask=np.ones(2, dtype=bool),
                oof_pred=None,
                oof_proba=None,
                metrics=None,
                combined=0.0,
                per_class={},
                failed=True,
                error="boom",
            )
            mid += 1
        return EvaluationRun(
            snapshot_id="d0",
            config_hash="x",
            records=records,
            fold_assignment=np.zeros(4, dtype=np.int64),
            class_names=("a", "b"),
            seed=0,
            n_folds=5,
            masks_fingerprint="m",
        )

    def test_constant_scores(self):
        run = self._fake_run({"knn": [0.6, 0.6, 0.6]})
        stats, _ = algorithm_score_distribution(run)
        assert all(stats["knn"][k] == 0.6 for k in ("min", "q1", "median", "q3", "max"))

    def test_midpoint_quartiles(self):
        run = self._fake_run({"rf": [0.2, 0.4, 0.6, 0.8]})
        stats, _ = algorithm_score_distribution(run)
        expected = oracles.oracle_quartiles_midpoint([0.2, 0.4, 0.6, 0.8])
        assert stats["rf"]["q1"] == pytest.approx(expected["q1"]) == 0.3
        assert stats["rf"]["median"] == pytest.approx(expected["median"]) == 0.5
        assert stats["rf"]["q3"] == pytest.approx(expected["q3"]) == 0.7

    def test_all_failed_algorithm_omitted_with_notice(self):
        run = self._fake_run({"knn": [0.5]}, fail=("qda",))
        stats, omitted = algorithm_score_distribution(run)
        assert "qda" not in stats
        assert omitted == ["qda"]


class TestPerClassSummary:
    def test_full_selection_equals_baseline(self, blob_run):
        ids = set(blob_run.non_failed())
        summary = per_class_summary(blob_run, ids)
        for algo in summary.values():
            for cls in algo.values():
                assert cls["selected"] == cls["baseline"]

    def test_single_selection_exact(self, blob_run):
        mid = sorted(blob_run.non_failed())[0]
        rec = blob_run.records[mid]
        summary = per_class_summary(blob_run, {mid})
        algo = summary[rec.spec.algo_id]
        for cls_name, entry in algo.items():
            assert entry["selected"] == pytest.approx(rec.per_class[cls_name])

    def test_empty_selection_reports_absent(self, blob_run):
        summary = per_class_summary(blob_run, set())
        for algo in summary.values():
            for cls in algo.values():
                assert cls["selected"] is None
                assert cls["baseline"] is not None

    def test_unknown_selection_rejected(self, blob_run):
        with pytest.raises(EvalError, match="not in run"):
            per_class_summary(blob_run, {10**7})

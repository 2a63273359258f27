import numpy as np
import pytest

from stackbench.eval_engine import evaluate_pool
from stackbench.importance import (
    DetailedSearchDisabled,
    FeatureMaskSet,
    ImportanceError,
    ImportanceTable,
    accuracy_raw_drops,
    accuracy_table,
    combined_importance,
    permutation_raw_drops,
    permutation_table,
    univariate_scores,
    univariate_table,
)
from stackbench.model_zoo import ModelSpec
from stackbench.wrangler import SnapshotStore

from .conftest import default_config

TREE_SPECS = [
    ModelSpec(0, "rf", {"n_estimators": 30, "max_depth": 5, "criterion": "gini"}),
    ModelSpec(1, "extrat", {"n_estimators": 30, "max_depth": 5, "criterion": "gini"}),
    ModelSpec(2, "gradb", {"n_estimators": 30, "learning_rate": 0.1, "max_depth": 2}),
    ModelSpec(3, "adab", {"n_estimators": 30, "learning_rate": 0.5}),
]


@pytest.fixture(scope="module")
def labelcopy_store():
    """f0 copies the label; f1 is weakly informative; f2/f3 are pure noise."""
    rng = np.random.default_rng(97)
    n = 80
    y = np.array([0, 1] * (n // 2))
    f0 = y.astype(float)
    f1 = y * 0.8 + rng.normal(0, 1.0, n)
    f2 = rng.normal(0, 1.0, n)
    f3 = rng.normal(0, 1.0, n)
    X = np.column_stack([f0, f1, f2, f3])
    return SnapshotStore.from_arrays(X, ("copy", "weak", "noise_a", "noise_b"), y, ("n", "p"))


@pytest.fixture(scope="module")
def labelcopy_run(labelcopy_store):
    return evaluate_pool(labelcopy_store.active, TREE_SPECS, default_config(), seed=5, n_folds=5)


@pytest.fixture(scope="module")
def twins_store():
    """f0 == f1 carry one signal component, f2 carries an independent one."""
    rng = np.random.default_rng(41)
    n = 120
    z1 = rng.normal(0, 1, n)
    z2 = rng.normal(0, 1, n)
    y = (z1 + z2 > 0).astype(int)
    X = np.column_stack([z1, z1, z2, rng.normal(0, 1, n)])
    return SnapshotStore.from_arrays(X, ("twin_a", "twin_b", "solo", "noise"), y, ("lo", "hi"))


@pytest.fixture(scope="module")
def twins_run(twins_store):
    specs = [ModelSpec(0, "rf", {"n_estimators": 50, "max_depth": 7, "criterion": "gini"})]
    return evaluate_pool(twins_store.active, specs, default_config(), seed=6, n_folds=5)


class TestUnivariate:
    def test_label_copy_scores_one(self, labelcopy_store):
        table = univariate_table(labelcopy_store.active, [0, 1, 2, 3])
        assert table.values[0].max() == pytest.approx(1.0)
        assert np.all(table.values[0] == 1.0)

    def test_noise_near_zero(self, labelcopy_store):
        table = univariate_table(labelcopy_store.active, [0])
        assert table.values[2, 0] < 0.05
        assert table.values[3, 0] < 0.05

    def test_identical_features_identical_scores(self, twins_store):
        raw = univariate_scores(twins_store.active)
        assert raw[0] == pytest.approx(raw[1], abs=1e-12)

    def test_constant_feature_scores_zero(self):
        X = np.column_stack([np.ones(20), np.arange(20, dtype=float)])
        y = np.array([0, 1] * 10)
        store = SnapshotStore.from_arrays(X, ("const", "ramp"), y, ("a", "b"))
        raw = univariate_scores(store.active)
        assert raw[0] == 0.0

    def test_rank_one_across_models(self, labelcopy_store):
        table = univariate_table(labelcopy_store.active, [0, 1, 2, 3])
        for j in range(1, 4):
            assert np.array_equal(table.values[:, j], table.values[:, 0])

    def test_values_in_unit_interval(self, labelcopy_store):
        table = univariate_table(labelcopy_store.active, [0, 1])
        assert np.all((table.values >= 0) & (table.values <= 1))


class TestPermutation:
    def test_label_copy_ranks_first_for_trees(self, labelcopy_store, labelcopy_run):
        table = permutation_table(
            labelcopy_store.active, labelcopy_run, [0, 1, 2, 3], default_config(), repeats=3
        )
        for j in range(4):
            assert int(np.argmax(table.values[:, j])) == 0
            assert table.values[0, j] == pytest.approx(1.0)

    def test_masked_out_feature_exactly_zero(self, labelcopy_store):
        mask = np.array([True, True, False, False])
        run = evaluate_pool(
            labelcopy_store.active,
            [TREE_SPECS[0]],
            default_config(),
            masks={0: mask},
            seed=5,
            n_folds=5,
        )
        raw = permutation_raw_drops(labelcopy_store.active, run, 0, default_config(), repeats=2)
        assert raw[2] == 0.0
        assert raw[3] == 0.0
        table = permutation_table(labelcopy_store.active, run, [0], default_config(), repeats=2)
        assert table.values[2, 0] == 0.0
        assert table.values[3, 0] == 0.0

    def test_reproducible_with_fixed_seeds(self, labelcopy_store, labelcopy_run):
        t1 = permutation_table(labelcopy_store.active, labelcopy_run, [0, 2], default_config(), repeats=2)
        t2 = permutation_table(labelcopy_store.active, labelcopy_run, [0, 2], default_config(), repeats=2)
        assert t1.values.tobytes() == t2.values.tobytes()

    def test_noise_below_threshold(self, labelcopy_store, labelcopy_run):
        table = permutation_table(
            labelcopy_store.active, labelcopy_run, [0, 1, 2, 3], default_config(), repeats=3
        )
        assert np.all(table.values[2] < 0.1)
        assert np.all(table.values[3] < 0.1)

    def test_disabled_detailed_search(self, labelcopy_store, labelcopy_run):
        cfg = default_config(detailed_feature_search=False)
        with pytest.raises(DetailedSearchDisabled):
            permutation_table(labelcopy_store.active, labelcopy_run, [0], cfg)

    def test_failed_model_rejected(self, labelcopy_store, labelcopy_run):
        with pytest.raises(ImportanceError, match="not present"):
            permutation_raw_drops(labelcopy_store.active, labelcopy_run, 99, default_config())


class TestAccuracyImportance:
    def test_label_copy_ranks_first_for_trees(self, labelcopy_store, labelcopy_run):
        table = accuracy_table(labelcopy_store.active, labelcopy_run, [0, 1, 2, 3], default_config())
        for j in range(4):
            assert int(np.argmax(table.values[:, j])) == 0

    def test_duplicated_twins_near_zero(self, twins_store, twins_run):
        raw, missing = accuracy_raw_drops(twins_store.active, twins_run, 0)
        assert not missing.any()
        table = accuracy_table(twins_store.active, twins_run, [0], default_config())
        # dropping either twin is compensated by the other; dropping the solo
        # signal feature is not
        assert table.values[0, 0] < 0.1
        assert table.values[1, 0] < 0.1
        assert table.values[2, 0] == pytest.approx(1.0)

    def test_noise_drop_near_zero(self, twins_store, twins_run):
        table = accuracy_table(twins_store.active, twins_run, [0], default_config())
        assert table.values[3, 0] < 0.1

    def test_single_feature_model_cell_missing(self, labelcopy_store):
        mask = np.array([True, False, False, False])
        run = evaluate_pool(
            labelcopy_store.active,
            [TREE_SPECS[0]],
            default_config(),
            masks={0: mask},
            seed=5,
            n_folds=5,
        )
        table = accuracy_table(labelcopy_store.active, run, [0], default_config())
        assert table.missing[0, 0]
        assert table.to_payload()["values"][0][0] is None

    def test_retrain_failure_flags_missing(self, labelcopy_store, labelcopy_run, monkeypatch):
        import stackbench.eval_engine as engine

        real = engine.oof_predictions

        def flaky(snapshot, spec, mask, folds, seed):
            if not mask[1]:
                raise RuntimeError("solver exploded")
            return real(snapshot, spec, mask, folds, seed)

        monkeypatch.setattr(engine, "oof_predictions", flaky)
        table = accuracy_table(labelcopy_store.active, labelcopy_run, [0], default_config())
        assert table.missing[1, 0]
        assert not table.missing[0, 0]


class TestCombined:
    def _table(self, method, values, snapshot_id="d0"):
        values = np.asarray(values, dtype=float)
        return ImportanceTable(
            method=method,
            feature_names=("a", "b", "c")[: values.shape[0]],
            model_ids=tuple(range(values.shape[1])),
            values=values,
            missing=np.zeros_like(values, dtype=bool),
            snapshot_id=snapshot_id,
        )

    def test_single_method_identity(self):
        t = self._table("univariate", [[0.3], [0.7]])
        combined = combined_importance([t], {"univariate"})
        assert np.array_equal(combined.values, t.values)

    def test_three_method_mean(self):
        tables = [
            self._table("univariate", [[0.2]]),
            self._table("permutation", [[0.4]]),
            self._table("accuracy", [[0.9]]),
        ]
        combined = combined_importance(tables, {"univariate", "permutation", "accuracy"})
        assert combined.values[0, 0] == pytest.approx(0.5)

    def test_row_average_recomputed(self):
        t1 = self._table("univariate", [[0.2, 0.4], [1.0, 0.0]])
        t2 = self._table("permutation", [[0.6, 0.8], [0.0, 1.0]])
        combined = combined_importance([t1, t2], {"univariate", "permutation"})
        assert combined.row_average[0] == pytest.approx(0.5)

    def test_mixed_snapshots_rejected(self):
        t1 = self._table("univariate", [[0.2]])
        t2 = self._table("permutation", [[0.4]], snapshot_id="d9")
        with pytest.raises(ImportanceError, match="different snapshots"):
            combined_importance([t1, t2], {"univariate", "permutation"})

    def test_missing_method_rejected(self):
        t1 = self._table("univariate", [[0.2]])
        with pytest.raises(ImportanceError, match="not been computed"):
            combined_importance([t1], {"univariate", "accuracy"})

    def test_empty_enable_set_rejected(self):
        with pytest.raises(ImportanceError, match="no methods"):
            combined_importance([], set())


class TestFeatureMaskSet:
    def test_effective_is_and_of_global_and_model(self):
        ms = FeatureMaskSet(("a", "b", "c"))
        ms.set_global("b", False)
        ms.set_model(7, "c", False)
        assert ms.effective(7).tolist() == [True, False, False]
        assert ms.effective(8).tolist() == [True, False, True]

    def test_floor_enforced_globally(self):
        ms = FeatureMaskSet(("a", "b"))
        ms.set_global("a", False)
        with pytest.raises(ImportanceError, match="at least one"):
            ms.set_global("b", False)

    def test_floor_enforced_through_interaction(self):
        ms = FeatureMaskSet(("a", "b"))
        ms.set_model(3, "a", False)
        with pytest.raises(ImportanceError, match="model 3"):
            ms.set_global("b", False)

    def test_roundtrip_dict(self):
        ms = FeatureMaskSet(("a", "b", "c"))
        ms.set_global("c", False)
        ms.set_model(1, "a", False)
        clone = FeatureMaskSet.from_dict(ms.to_dict())
        assert np.array_equal(clone.global_mask, ms.global_mask)
        assert np.array_equal(clone.per_model[1], ms.per_model[1])

    def test_unknown_feature(self):
        ms = FeatureMaskSet(("a",))
        with pytest.raises(ImportanceError, match="unknown feature"):
            ms.set_global("zz", False)

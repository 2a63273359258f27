import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackbench.metrics import (
    AVERAGING_MODES,
    METRIC_IDS,
    MetricConfig,
    MetricError,
    MetricVector,
    NoActiveMetricsError,
    compute_metrics,
    per_class_stats,
    weighted_score,
)

from . import oracles


def config_with(averaging="macro", beta=1.0, **weights):
    w = {m: 0.0 for m in METRIC_IDS}
    w.update(weights)
    if not any(w.values()):
        w = {m: 100.0 for m in METRIC_IDS}
    return MetricConfig(
        weights=w,
        averaging={m: averaging for m in ("precision", "recall", "fbeta", "roc_auc")},
        beta=beta,
    )


def one_hot(y, n_classes):
    p = np.zeros((len(y), n_classes))
    p[np.arange(len(y)), y] = 1.0
    return p


class TestWorkedExamples:
    def test_binary_hand_computed_case(self):
        # TP=1, FN=1, FP=0, TN=2 for the positive class (label 1)
        y_true = np.array([1, 1, 0, 0])
        y_pred = np.array([1, 0, 0, 0])
        proba = one_hot(y_pred, 2)
        stats = per_class_stats(y_true, y_pred, 2)
        assert stats[1]["precision"] == pytest.approx(1.0)
        assert stats[1]["recall"] == pytest.approx(0.5)

        v = compute_metrics(y_true, y_pred, proba, config_with(averaging="macro", beta=2.0))
        assert v.raw["accuracy"] == pytest.approx(0.75)
        assert v.raw["gmean"] == pytest.approx(math.sqrt(0.5), abs=1e-4)
        assert v.raw["mcc"] == pytest.approx(2 / math.sqrt(12), abs=1e-4)
        # f2 of the positive class alone
        p, r = 1.0, 0.5
        assert (1 + 4) * p * r / (4 * p + r) == pytest.approx(0.5556, abs=1e-4)

    def test_perfect_classifier_identity(self):
        y = np.array([0, 1, 2, 1, 0, 2])
        proba = one_hot(y, 3)
        for averaging in AVERAGING_MODES:
            v = compute_metrics(y, y, proba, config_with(averaging=averaging))
            for m in ("accuracy", "gmean", "precision", "recall", "fbeta", "mcc", "roc_auc"):
                assert v.raw[m] == pytest.approx(1.0), m
            assert v.raw["log_loss"] == pytest.approx(0.0, abs=1e-12)
            assert v.normalized["log_loss"] == pytest.approx(1.0, abs=1e-12)
            assert v.normalized["mcc"] == pytest.approx(1.0)

    def test_uniform_probabilities_log_loss(self):
        for n_classes in (2, 3, 4):
            y = np.array([0, 1, 0, n_classes - 1])
            proba = np.full((4, n_classes), 1.0 / n_classes)
            v = compute_metrics(y, y, proba, config_with())
            assert v.raw["log_loss"] == pytest.approx(math.log(n_classes), abs=1e-12)


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(MetricError, match="length mismatch"):
            compute_metrics([0, 1], [0], one_hot([0, 1], 2), config_with())

    def test_unnormalized_probability_rows(self):
        proba = np.array([[0.6, 0.6], [0.5, 0.5]])
        with pytest.raises(MetricError, match="sums to"):
            compute_metrics([0, 1], [0, 1], proba, config_with())

    def test_empty_input(self):
        with pytest.raises(MetricError, match="empty"):
            compute_metrics([], [], np.zeros((0, 2)), config_with())

    def test_label_outside_universe(self):
        with pytest.raises(MetricError, match="universe"):
            compute_metrics([0, 2], [0, 0], one_hot([0, 0], 2), config_with())

    def test_absent_class_is_not_an_error(self):
        # universe has 3 classes, subset only shows two of them
        y_true = np.array([0, 0, 1])
        y_pred = np.array([0, 1, 1])
        proba = one_hot(y_pred, 3)
        for averaging in AVERAGING_MODES:
            v = compute_metrics(y_true, y_pred, proba, config_with(averaging=averaging))
            for m in METRIC_IDS:
                assert np.isfinite(v.raw[m])
                assert 0.0 <= v.normalized[m] <= 1.0


class TestWeightedScore:
    def test_single_metric_passthrough(self):
        v = MetricVector(raw={m: 0.0 for m in METRIC_IDS}, normalized={**{m: 0.0 for m in METRIC_IDS}, "accuracy": 0.83})
        assert weighted_score(v, config_with(accuracy=100)) == pytest.approx(0.83)

    def test_upper_bound(self):
        v = MetricVector(raw={m: 1.0 for m in METRIC_IDS}, normalized={m: 1.0 for m in METRIC_IDS})
        cfg = config_with(accuracy=35, mcc=70, log_loss=5)
        assert weighted_score(v, cfg) == pytest.approx(1.0)

    def test_two_metric_mean(self):
        normalized = {m: 0.0 for m in METRIC_IDS}
        normalized.update({"accuracy": 0.6, "mcc": 0.8})
        v = MetricVector(raw=dict(normalized), normalized=normalized)
        assert weighted_score(v, config_with(accuracy=50, mcc=50)) == pytest.approx(0.7)

    def test_all_zero_weights_rejected(self):
        v = MetricVector(raw={m: 1.0 for m in METRIC_IDS}, normalized={m: 1.0 for m in METRIC_IDS})
        cfg = MetricConfig(weights={m: 0.0 for m in METRIC_IDS})
        with pytest.raises(NoActiveMetricsError, match="no active metrics"):
            weighted_score(v, cfg)

    @given(
        values=st.lists(st.floats(0, 1), min_size=8, max_size=8),
        weights=st.lists(st.integers(0, 100), min_size=8, max_size=8).filter(lambda w: sum(w) > 0),
        scale=st.floats(0.001, 1.0, exclude_min=False, allow_nan=False).filter(lambda s: s > 0),
    )
    @settings(max_examples=200, deadline=None)
    def test_invariant_under_weight_rescaling(self, values, weights, scale):
        normalized = dict(zip(METRIC_IDS, values))
        v = MetricVector(raw=dict(normalized), normalized=normalized)
        cfg1 = MetricConfig(weights=dict(zip(METRIC_IDS, map(float, weights))))
        cfg2 = MetricConfig(weights={m: w * scale for m, w in cfg1.weights.items()})
        assert weighted_score(v, cfg1) == pytest.approx(weighted_score(v, cfg2), abs=1e-9)

    @given(
        values=st.lists(st.floats(0, 0.99), min_size=8, max_size=8),
        weights=st.lists(st.integers(0, 100), min_size=8, max_size=8).filter(lambda w: sum(w) > 0),
        bump=st.floats(0.0001, 0.01),
        which=st.integers(0, 7),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_positively_weighted_metrics(self, values, weights, bump, which):
        normalized = dict(zip(METRIC_IDS, values))
        v = MetricVector(raw=dict(normalized), normalized=dict(normalized))
        cfg = MetricConfig(weights=dict(zip(METRIC_IDS, map(float, weights))))
        bumped = dict(normalized)
        metric = METRIC_IDS[which]
        bumped[metric] = min(1.0, bumped[metric] + bump)
        v2 = MetricVector(raw=dict(bumped), normalized=bumped)
        s1, s2 = weighted_score(v, cfg), weighted_score(v2, cfg)
        assert s2 >= s1 - 1e-12


class TestAgainstBruteForceOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_random_cases_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(60):
            n_classes = int(rng.integers(2, 5))
            n = int(rng.integers(1, 21))
            y_true = rng.integers(0, n_classes, size=n)
            y_pred = rng.integers(0, n_classes, size=n)
            proba = rng.dirichlet(np.ones(n_classes), size=n)
            averaging = AVERAGING_MODES[int(rng.integers(0, 3))]
            beta = [0.5, 1.0, 2.0][int(rng.integers(0, 3))]
            v = compute_metrics(y_true, y_pred, proba, config_with(averaging=averaging, beta=beta))

            yt, yp, pr = y_true.tolist(), y_pred.tolist(), proba.tolist()
            assert v.raw["accuracy"] == pytest.approx(oracles.oracle_accuracy(yt, yp), abs=1e-9)
            assert v.raw["gmean"] == pytest.approx(oracles.oracle_gmean(yt, yp, n_classes), abs=1e-9)
            for kind in ("precision", "recall"):
                assert v.raw[kind] == pytest.approx(
                    oracles.oracle_prf(yt, yp, n_classes, kind, averaging), abs=1e-9
                ), (kind, averaging)
            assert v.raw["fbeta"] == pytest.approx(
                oracles.oracle_prf(yt, yp, n_classes, "fbeta", averaging, beta=beta), abs=1e-9
            )
            assert v.raw["mcc"] == pytest.approx(oracles.oracle_mcc(yt, yp, n_classes), abs=1e-9)
            assert v.raw["roc_auc"] == pytest.approx(
                oracles.oracle_roc_auc(yt, pr, n_classes, averaging), abs=1e-9
            )
            assert v.raw["log_loss"] == pytest.approx(oracles.oracle_log_loss(yt, pr), abs=1e-9)


class TestProperties:
    def test_gmean_zero_when_any_class_missed(self):
        y_true = np.array([0, 0, 1, 1])
        y_pred = np.array([0, 0, 0, 0])
        v = compute_metrics(y_true, y_pred, one_hot(y_pred, 2), config_with())
        assert v.raw["gmean"] == 0.0

    def test_gmean_below_arithmetic_mean_of_recalls(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n_classes = int(rng.integers(2, 5))
            y_true = rng.integers(0, n_classes, size=30)
            y_pred = rng.integers(0, n_classes, size=30)
            stats = per_class_stats(y_true, y_pred, n_classes)
            present = [c for c in range(n_classes) if np.sum(y_true == c) > 0]
            recalls = [stats[c]["recall"] for c in present]
            v = compute_metrics(y_true, y_pred, one_hot(y_pred, n_classes), config_with())
            assert v.raw["gmean"] <= np.mean(recalls) + 1e-12

    def test_normalized_values_in_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n_classes = int(rng.integers(2, 5))
            n = int(rng.integers(2, 25))
            y_true = rng.integers(0, n_classes, size=n)
            y_pred = rng.integers(0, n_classes, size=n)
            proba = rng.dirichlet(np.ones(n_classes) * 0.4, size=n)
            v = compute_metrics(y_true, y_pred, proba, config_with())
            for m in METRIC_IDS:
                assert 0.0 <= v.normalized[m] <= 1.0, m

    def test_micro_prf_equals_accuracy_for_single_label(self):
        rng = np.random.default_rng(11)
        y_true = rng.integers(0, 3, size=40)
        y_pred = rng.integers(0, 3, size=40)
        v = compute_metrics(y_true, y_pred, one_hot(y_pred, 3), config_with(averaging="micro"))
        assert v.raw["precision"] == pytest.approx(v.raw["accuracy"])
        assert v.raw["recall"] == pytest.approx(v.raw["accuracy"])
        assert v.raw["fbeta"] == pytest.approx(v.raw["accuracy"])


class TestConfigValidation:
    def test_unknown_metric_weight_rejected(self):
        with pytest.raises(MetricError):
            MetricConfig(weights={"accuracy": 100})

    def test_weight_out_of_range(self):
        w = {m: 50.0 for m in METRIC_IDS}
        w["mcc"] = 104.0
        with pytest.raises(MetricError, match=r"\[0, 100\]"):
            MetricConfig(weights=w)

    def test_bad_averaging_mode(self):
        with pytest.raises(MetricError, match="averaging"):
            MetricConfig(averaging={"precision": "mean", "recall": "macro", "fbeta": "macro", "roc_auc": "macro"})

    def test_bad_beta(self):
        with pytest.raises(MetricError, match="beta"):
            MetricConfig(beta=3.0)

    def test_roundtrip_dict(self):
        cfg = config_with(averaging="weighted", beta=0.5, accuracy=100, mcc=45)
        assert MetricConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.config_hash() == MetricConfig.from_dict(cfg.to_dict()).config_hash()

import pytest

from stackbench.history import HistoryError, StepHistory, provenance_document, stack_summaries
from stackbench.stacker import StackRecord, StackRegistry

PERF_A = {"accuracy": 0.8, "precision": 0.7, "recall": 0.75, "f1": 0.72}
PERF_B = {"accuracy": 0.9, "precision": 0.88, "recall": 0.86, "f1": 0.87}


def record(stack_id, parent=None, perf=PERF_A, models=(1, 2, 3)):
    return StackRecord(
        stack_id=stack_id,
        parent_stack_id=parent,
        model_ids=tuple(models),
        feature_masks={},
        snapshot_id="d0",
        metric_config_hash="h",
        performance=dict(perf),
        algorithms_used=("knn", "rf"),
    )


class TestStepHistory:
    def test_empty_series(self):
        h = StepHistory()
        series = h.comparison_series()
        assert series["steps"] == []
        assert series["metrics"] == ["accuracy", "precision", "recall", "f1"]

    def test_steps_in_insertion_order_with_increasing_indices(self):
        h = StepHistory()
        h.record_step("Step 1: removed outlier", PERF_A)
        h.record_step("Step 2: disabled features", PERF_B)
        steps = h.comparison_series()["steps"]
        assert [s["step_index"] for s in steps] == [0, 1]
        assert steps[0]["label"] == "Step 1: removed outlier"

    def test_stored_point_attaches_at_store_step(self):
        h = StepHistory()
        h.record_step("build", PERF_A)
        h.mark_stored(record("S1", perf=PERF_A))
        h.record_step("rebuild", PERF_B)
        steps = h.comparison_series()["steps"]
        assert steps[0]["stored"]["stack_id"] == "S1"
        assert steps[0]["stored"]["accuracy"] == steps[0]["active"]["accuracy"]
        assert steps[1]["stored"] is None

    def test_mark_before_step_rejected(self):
        h = StepHistory()
        with pytest.raises(HistoryError, match="before any step"):
            h.mark_stored(record("S1"))

    def test_metric_bounds_validated(self):
        h = StepHistory()
        with pytest.raises(HistoryError, match="out of"):
            h.record_step("bad", {**PERF_A, "recall": 1.2})
        with pytest.raises(HistoryError, match="missing"):
            h.record_step("bad", {"accuracy": 0.5})

    def test_append_only_hash_over_ten_steps(self):
        h = StepHistory()
        seen = set()
        serialized_prefixes = []
        for i in range(10):
            h.record_step(f"step {i}", PERF_A)
            digest = h.content_hash()
            assert digest not in seen
            seen.add(digest)
            series = h.comparison_series()["steps"]
            serialized_prefixes.append(series)
        # every earlier prefix is untouched by later appends
        final = h.comparison_series()["steps"]
        for i, prefix in enumerate(serialized_prefixes):
            assert final[: i + 1] == prefix

    def test_comparison_series_idempotent(self):
        h = StepHistory()
        h.record_step("a", PERF_A)
        assert h.comparison_series() == h.comparison_series()
        assert h.content_hash() == h.content_hash()


class TestStackSummaries:
    def test_perfect_stack_fractions(self):
        registry = StackRegistry()
        registry._stacks["S1"] = record("S1", perf={m: 1.0 for m in ("accuracy", "precision", "recall", "f1")})
        registry._order.append("S1")
        summary = stack_summaries(registry)[0]
        assert all(v == 1.0 for v in summary["metrics"].values())

    def test_first_parent_is_null_and_counts_frozen(self):
        registry = StackRegistry()
        registry._stacks["S1"] = record("S1", models=range(174))
        registry._order.append("S1")
        summary = stack_summaries(registry)[0]
        assert summary["parent_stack_id"] is None
        assert summary["model_count"] == 174
        assert summary["algorithms_used"] == ["knn", "rf"]

    def test_provenance_document_shape(self):
        registry = StackRegistry()
        registry._stacks["S1"] = record("S1")
        registry._order.append("S1")
        h = StepHistory()
        h.record_step("a", PERF_A)
        doc = provenance_document(h, registry)
        assert doc["stacks"][0]["stack_id"] == "S1"
        assert len(doc["comparison"]["steps"]) == 1

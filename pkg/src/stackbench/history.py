"""Step-wise comparison series and stored-stack summaries.

Every metamodel rebuild appends a step carrying the active stack's four
monitored metrics; storing a stack pins those numbers to the step where the
store happened. The log is append-only: nothing is ever mutated or removed,
which the content hash makes checkable.
"""

from __future__ import annotations

import hashlib
import json

from .stacker import StackRecord, StackRegistry

FOUR_METRICS = ("accuracy", "precision", "recall", "f1")


class HistoryError(ValueError):
    pass


class StepHistory:
    """Append-only sequence of (label, active 4-metric tuple, optional stored point)."""

    def __init__(self) -> None:
        self._steps: list[dict] = []

    def record_step(self, label: str, active_performance: dict[str, float]) -> int:
        missing = [m for m in FOUR_METRICS if m not in active_performance]
        if missing:
            raise HistoryError(f"active performance is missing metrics {missing}")
        for m in FOUR_METRICS:
            v = float(active_performance[m])
            if not 0.0 <= v <= 1.0:
                raise HistoryError(f"metric {m} out of [0,1]: {v}")
        step = {
            "step_index": len(self._steps),
            "label": str(label),
            "active": {m: float(active_performance[m]) for m in FOUR_METRICS},
            "stored": None,
        }
        self._steps.append(step)
        return step["step_index"]

    def mark_stored(self, record: StackRecord) -> None:
        """Attach the just-stored stack at the latest step."""
        if not self._steps:
            raise HistoryError("cannot mark a stored stack before any step was recorded")
        last = self._steps[-1]
        last["stored"] = {
            "stack_id": record.stack_id,
            **{m: float(record.performance[m]) for m in FOUR_METRICS},
        }

    def comparison_series(self) -> dict:
        return {
            "metrics": list(FOUR_METRICS),
            "steps": [
                {
                    "step_index": s["step_index"],
                    "label": s["label"],
                    "active": dict(s["active"]),
                    "stored": None if s["stored"] is None else dict(s["stored"]),
                }
                for s in self._steps
            ],
        }

    def content_hash(self) -> str:
        payload = json.dumps(self._steps, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    def __len__(self) -> int:
        return len(self._steps)


def stack_summaries(registry: StackRegistry) -> list[dict]:
    """Circular-barchart payload per stored stack."""
    out = []
    for record in registry.all():
        out.append(
            {
                "stack_id": record.stack_id,
                "parent_stack_id": record.parent_stack_id,
                "metrics": {m: float(record.performance[m]) for m in FOUR_METRICS},
                "model_count": record.model_count,
                "algorithms_used": list(record.algorithms_used),
                "snapshot_id": record.snapshot_id,
                "note": record.note,
            }
        )
    return out


def provenance_document(history: StepHistory, registry: StackRegistry) -> dict:
    """Full session provenance for JSON export."""
    return {
        "comparison": history.comparison_series(),
        "stacks": stack_summaries(registry),
    }

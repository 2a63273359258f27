"""Versioned dataset snapshots with instance-level wrangling and restorable history.

Snapshots are immutable: every operation returns a new snapshot pointing at its
parent, and the history is append-only (restore forks provenance instead of
rewinding it). Labels are stored as integer indices into ``class_names``.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class WrangleError(ValueError):
    """Invalid wrangle operation or malformed input data."""


class CsvValidationError(WrangleError):
    """CSV rejected at load; carries the offending row numbers."""

    def __init__(self, message: str, rows: list[int] | None = None):
        super().__init__(message)
        self.rows = rows or []


@dataclass(frozen=True)
class DatasetSnapshot:
    snapshot_id: str
    X: np.ndarray
    feature_names: tuple[str, ...]
    y: np.ndarray
    class_names: tuple[str, ...]
    provenance: str
    parent_snapshot_id: str | None = None

    def __post_init__(self) -> None:
        if self.X.ndim != 2:
            raise WrangleError("X must be a 2-D matrix")
        n, d = self.X.shape
        if self.y.shape != (n,):
            raise WrangleError("y length must match the number of rows")
        if len(self.feature_names) != d:
            raise WrangleError("feature_names length must match the number of columns")
        if len(set(self.feature_names)) != d:
            raise WrangleError("feature names must be unique")
        if not np.all(np.isfinite(self.X)):
            raise WrangleError("X contains missing or non-finite values")
        if len(np.unique(self.y)) < 2:
            raise WrangleError("at least 2 classes must be represented")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> dict[str, int]:
        return {
            name: int(np.sum(self.y == idx)) for idx, name in enumerate(self.class_names)
        }

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        h.update("|".join(self.feature_names).encode())
        h.update("|".join(self.class_names).encode())
        return h.hexdigest()[:16]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise WrangleError(f"unknown feature {name!r}") from None

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise WrangleError(f"unknown class {name!r}") from None


def load_csv(
    path_or_text: str | Path,
    label_column: str | None = None,
    *,
    is_text: bool = False,
) -> tuple[np.ndarray, tuple[str, ...], np.ndarray, tuple[str, ...]]:
    """Parse a CSV with a header row into (X, feature_names, y, class_names).

    The label column defaults to the last one. Features must be numeric; rows
    with missing values are rejected and their 1-based data row numbers
    reported. Class names are the sorted distinct label values.
    """
    text = path_or_text if is_text else Path(path_or_text).read_text()
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise CsvValidationError("empty CSV") from None
    header = [h.strip() for h in header]
    if label_column is None:
        label_column = header[-1]
    if label_column not in header:
        raise CsvValidationError(f"label column {label_column!r} not found in header {header}")
    label_idx = header.index(label_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)
    if len(set(feature_names)) != len(feature_names):
        raise CsvValidationError("duplicate feature names in header")

    rows: list[list[float]] = []
    labels: list[str] = []
    bad_rows: list[int] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            bad_rows.append(row_no)
            continue
        values = []
        ok = True
        for i, cell in enumerate(row):
            cell = cell.strip()
            if i == label_idx:
                if cell == "":
                    ok = False
                continue
            if cell == "" or cell == "?" or cell.lower() in ("nan", "na"):
                ok = False
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvValidationError(
                    f"non-numeric feature value {cell!r} in column {header[i]!r} at data row {row_no}"
                ) from None
        if not ok:
            bad_rows.append(row_no)
            continue
        rows.append(values)
        labels.append(row[label_idx].strip())

    if bad_rows:
        shown = ", ".join(map(str, bad_rows[:20]))
        raise CsvValidationError(
            f"{len(bad_rows)} row(s) with missing values rejected at load (data rows: {shown})",
            rows=bad_rows,
        )
    if not rows:
        raise CsvValidationError("CSV contains no data rows")

    class_names = tuple(sorted(set(labels)))
    name_to_idx = {name: i for i, name in enumerate(class_names)}
    X = np.asarray(rows, dtype=float)
    y = np.asarray([name_to_idx[lab] for lab in labels], dtype=np.int64)
    return X, feature_names, y, class_names


def load_feature_csv(text: str, feature_names: tuple[str, ...]) -> np.ndarray:
    """Parse a header CSV containing (at least) the given feature columns.

    Extra columns are ignored; missing values and non-numeric cells are
    rejected the same way as in load_csv.
    """
    reader = csv.reader(text.splitlines())
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvValidationError("empty CSV") from None
    missing_cols = [f for f in feature_names if f not in header]
    if missing_cols:
        raise CsvValidationError(f"CSV is missing feature columns {missing_cols}")
    positions = [header.index(f) for f in feature_names]
    rows: list[list[float]] = []
    bad_rows: list[int] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        values = []
        ok = True
        for pos in positions:
            cell = row[pos].strip() if pos < len(row) else ""
            if cell == "" or cell == "?" or cell.lower() in ("nan", "na"):
                ok = False
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvValidationError(
                    f"non-numeric feature value {cell!r} in column {header[pos]!r} at data row {row_no}"
                ) from None
        if not ok:
            bad_rows.append(row_no)
            continue
        rows.append(values)
    if bad_rows:
        shown = ", ".join(map(str, bad_rows[:20]))
        raise CsvValidationError(
            f"{len(bad_rows)} row(s) with missing values rejected (data rows: {shown})", rows=bad_rows
        )
    if not rows:
        raise CsvValidationError("CSV contains no data rows")
    return np.asarray(rows, dtype=float)


class SnapshotStore:
    """Append-only history of snapshots with one active snapshot per session."""

    def __init__(self, initial: DatasetSnapshot, min_per_class: int = 5):
        self._history: list[DatasetSnapshot] = [initial]
        self._active_id = initial.snapshot_id
        self._counter = itertools.count(1)
        self.min_per_class = min_per_class

    @classmethod
    def from_arrays(
        cls,
        X: np.ndarray,
        feature_names: tuple[str, ...],
        y: np.ndarray,
        class_names: tuple[str, ...],
        min_per_class: int = 5,
    ) -> "SnapshotStore":
        snap = DatasetSnapshot(
            snapshot_id="d0",
            X=np.array(X, dtype=float),
            feature_names=tuple(feature_names),
            y=np.array(y, dtype=np.int64),
            class_names=tuple(class_names),
            provenance="initial load",
        )
        return cls(snap, min_per_class=min_per_class)

    @property
    def active(self) -> DatasetSnapshot:
        return self.get(self._active_id)

    def get(self, snapshot_id: str) -> DatasetSnapshot:
        for snap in self._history:
            if snap.snapshot_id == snapshot_id:
                return snap
        raise WrangleError(f"unknown snapshot {snapshot_id!r}")

    def history(self) -> list[DatasetSnapshot]:
        return list(self._history)

    def restore(self, snapshot_id: str) -> DatasetSnapshot:
        snap = self.get(snapshot_id)
        self._active_id = snap.snapshot_id
        return snap

    def _commit(self, X: np.ndarray, y: np.ndarray, provenance: str) -> DatasetSnapshot:
        parent = self.active
        snap = DatasetSnapshot(
            snapshot_id=f"d{next(self._counter)}",
            X=X,
            feature_names=parent.feature_names,
            y=y,
            class_names=parent.class_names,
            provenance=provenance,
            parent_snapshot_id=parent.snapshot_id,
        )
        self._history.append(snap)
        self._active_id = snap.snapshot_id
        return snap

    def _check_class_floor(self, y: np.ndarray, context: str) -> None:
        counts = np.bincount(y, minlength=len(self.active.class_names))
        represented = np.count_nonzero(counts)
        if represented < 2:
            raise WrangleError(f"{context} rejected (fewer than 2 classes would remain)")
        low = [
            self.active.class_names[i]
            for i, c in enumerate(counts)
            if 0 < c < self.min_per_class
        ]
        if np.any(counts == 0) or low:
            emptied = [
                self.active.class_names[i] for i, c in enumerate(counts) if c == 0
            ]
            detail = []
            if emptied:
                detail.append(f"classes emptied: {emptied}")
            if low:
                detail.append(f"classes below {self.min_per_class} instances: {low}")
            raise WrangleError(f"{context} rejected ({'; '.join(detail)})")

    def _validate_indices(self, indices: set[int]) -> list[int]:
        n = self.active.n_instances
        out = sorted(int(i) for i in indices)
        for i in out:
            if not 0 <= i < n:
                raise WrangleError(f"instance index {i} out of range [0, {n})")
        return out

    def remove_instances(self, indices: set[int]) -> DatasetSnapshot:
        """Delete rows; survivors keep their relative order."""
        snap = self.active
        idx = self._validate_indices(indices)
        keep = np.setdiff1d(np.arange(snap.n_instances), np.asarray(idx, dtype=int))
        y_new = snap.y[keep]
        if idx:
            self._check_class_floor(y_new, f"removing {len(idx)} instance(s)")
        return self._commit(
            snap.X[keep].copy(), y_new.copy(), f"remove {len(idx)} instance(s)"
        )

    def _aggregate(self, indices: list[int], mode: str) -> tuple[np.ndarray, int]:
        snap = self.active
        labels = set(int(snap.y[i]) for i in indices)
        if len(labels) != 1:
            names = sorted(snap.class_names[i] for i in labels)
            raise WrangleError(f"selection spans multiple classes {names}; merge/compose requires one class")
        if mode not in ("mean", "median"):
            raise WrangleError(f"mode must be 'mean' or 'median', got {mode!r}")
        rows = snap.X[indices]
        agg = np.mean(rows, axis=0) if mode == "mean" else np.median(rows, axis=0)
        return agg, labels.pop()

    def merge_instances(self, indices: set[int], mode: str = "mean") -> DatasetSnapshot:
        """Replace the selected same-class rows by their per-feature mean/median."""
        snap = self.active
        idx = self._validate_indices(indices)
        if len(idx) < 2:
            raise WrangleError("merge requires at least 2 instances")
        agg, label = self._aggregate(idx, mode)
        keep = np.setdiff1d(np.arange(snap.n_instances), np.asarray(idx, dtype=int))
        X_new = np.vstack([snap.X[keep], agg[None, :]])
        y_new = np.concatenate([snap.y[keep], [label]])
        self._check_class_floor(y_new, f"merging {len(idx)} instance(s)")
        return self._commit(X_new, y_new, f"merge {len(idx)} instance(s) ({mode})")

    def compose_instance(self, indices: set[int], mode: str = "mean") -> DatasetSnapshot:
        """Append a new row aggregated from the selected same-class rows."""
        snap = self.active
        idx = self._validate_indices(indices)
        if len(idx) < 1:
            raise WrangleError("compose requires at least 1 instance")
        agg, label = self._aggregate(idx, mode)
        X_new = np.vstack([snap.X, agg[None, :]])
        y_new = np.concatenate([snap.y, [label]])
        return self._commit(X_new, y_new, f"compose from {len(idx)} instance(s) ({mode})")


def instance_difficulty(snapshot: DatasetSnapshot, run, stack_models: set[int]) -> np.ndarray:
    """Fraction of stack models whose out-of-fold prediction misses each instance."""
    if not stack_models:
        raise WrangleError("stack_models must be non-empty")
    if run.snapshot_id != snapshot.snapshot_id:
        raise WrangleError(
            f"evaluation run is for snapshot {run.snapshot_id!r}, not {snapshot.snapshot_id!r}"
        )
    preds = []
    for model_id in sorted(stack_models):
        record = run.records.get(model_id)
        if record is None:
            raise WrangleError(f"model {model_id} not present in the evaluation run")
        if record.failed:
            raise WrangleError(f"model {model_id} failed evaluation and has no predictions")
        preds.append(record.oof_pred)
    stacked = np.stack(preds, axis=0)
    return np.mean(stacked != snapshot.y[None, :], axis=0)

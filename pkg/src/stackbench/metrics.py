"""Eight classification metrics, their [0,1] normalization, and the user-weighted score.

Label arrays are integer class indices; probability matrices are N x C with
columns aligned to class indices 0..C-1. The class universe is the probability
matrix width, so subsets that miss a class still score deterministically.

Conventions (documented because they define the test oracles):
  * per-class precision/recall/f-beta with a zero denominator are 0, not NaN;
  * macro averages run over the full class universe;
  * weighted averages use supports from ``y_true`` within the scored set;
  * micro pools TP/FP/FN counts over the universe;
  * g-mean is the geometric mean of recalls of the classes present in ``y_true``;
  * ROC AUC is one-vs-rest; classes without both positives and negatives are
    skipped and the remaining weights renormalized; if nothing is defined the
    value falls back to chance level 0.5;
  * log loss clips probabilities to [1e-15, 1 - 1e-15];
  * MCC is rescaled to [0,1] via (raw + 1) / 2 and log loss via 1 / (1 + raw).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

METRIC_IDS = (
    "accuracy",
    "gmean",
    "precision",
    "recall",
    "fbeta",
    "mcc",
    "roc_auc",
    "log_loss",
)
#: Metrics that carry a micro/macro/weighted averaging option.
AVERAGED_METRICS = ("precision", "recall", "fbeta", "roc_auc")
AVERAGING_MODES = ("micro", "macro", "weighted")
BETA_CHOICES = (0.5, 1.0, 2.0)

PROBA_CLIP = 1e-15
PROBA_ROW_SUM_TOL = 1e-6


class MetricError(ValueError):
    """Invalid metric input or configuration."""


class NoActiveMetricsError(MetricError):
    """Raised when a combined score is requested with all weights zero."""


@dataclass(frozen=True)
class MetricConfig:
    """Weights, averaging modes, and f-beta choice driving every score.

    Weights are percents in [0, 100]; the HTTP layer restricts them to integer
    steps of 5, but any non-negative reals are accepted here.
    """

    weights: dict[str, float] = field(default_factory=lambda: {m: 100.0 for m in METRIC_IDS})
    averaging: dict[str, str] = field(default_factory=lambda: {m: "macro" for m in AVERAGED_METRICS})
    beta: float = 1.0
    detailed_feature_search: bool = True

    def __post_init__(self) -> None:
        if set(self.weights) != set(METRIC_IDS):
            raise MetricError(f"weights must cover exactly the metrics {sorted(METRIC_IDS)}")
        for m, w in self.weights.items():
            if not 0.0 <= float(w) <= 100.0:
                raise MetricError(f"weight for {m!r} must be in [0, 100], got {w}")
        if set(self.averaging) != set(AVERAGED_METRICS):
            raise MetricError(f"averaging must cover exactly {sorted(AVERAGED_METRICS)}")
        for m, mode in self.averaging.items():
            if mode not in AVERAGING_MODES:
                raise MetricError(f"averaging for {m!r} must be one of {AVERAGING_MODES}, got {mode!r}")
        if float(self.beta) not in BETA_CHOICES:
            raise MetricError(f"beta must be one of {BETA_CHOICES}, got {self.beta}")

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "weights": {m: float(self.weights[m]) for m in METRIC_IDS},
            "averaging": {m: self.averaging[m] for m in AVERAGED_METRICS},
            "beta": float(self.beta),
            "detailed_feature_search": bool(self.detailed_feature_search),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricConfig":
        return cls(
            weights=dict(d["weights"]),
            averaging=dict(d["averaging"]),
            beta=float(d["beta"]),
            detailed_feature_search=bool(d.get("detailed_feature_search", True)),
        )


@dataclass(frozen=True)
class MetricVector:
    """Raw metric values plus their [0,1]-normalized counterparts."""

    raw: dict[str, float]
    normalized: dict[str, float]

    def to_dict(self) -> dict:
        return {"raw": dict(self.raw), "normalized": dict(self.normalized)}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricVector":
        return cls(raw=dict(d["raw"]), normalized=dict(d["normalized"]))


def normalize_metric(metric_id: str, raw: float) -> float:
    """Map a raw metric value onto the [0,1] score scale."""
    if metric_id == "mcc":
        return (raw + 1.0) / 2.0
    if metric_id == "log_loss":
        return 1.0 / (1.0 + raw)
    return raw


def _validate_inputs(y_true: np.ndarray, y_pred: np.ndarray, y_proba: np.ndarray) -> None:
    if y_true.ndim != 1 or y_pred.ndim != 1 or y_proba.ndim != 2:
        raise MetricError("y_true and y_pred must be 1-D, y_proba 2-D")
    n = y_true.shape[0]
    if n == 0:
        raise MetricError("empty input")
    if y_pred.shape[0] != n or y_proba.shape[0] != n:
        raise MetricError(f"length mismatch: y_true={n}, y_pred={y_pred.shape[0]}, y_proba={y_proba.shape[0]}")
    n_classes = y_proba.shape[1]
    if n_classes < 1:
        raise MetricError("y_proba must have at least one class column")
    row_sums = y_proba.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > PROBA_ROW_SUM_TOL):
        bad = int(np.argmax(np.abs(row_sums - 1.0)))
        raise MetricError(f"probability row {bad} sums to {row_sums[bad]:.8f}, not 1")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise MetricError(f"{name} contains labels outside the class universe [0, {n_classes})")


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    """Counts matrix with true classes on rows and predicted classes on columns."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _per_class_counts(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tp = np.diag(cm).astype(float)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    return tp, fp, fn


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)


def per_class_stats(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> dict[int, dict[str, float]]:
    """Per-class precision, recall, and f1 (zero denominators give 0)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp, fp, fn = _per_class_counts(cm)
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return {
        c: {"precision": float(precision[c]), "recall": float(recall[c]), "f1": float(f1[c])}
        for c in range(n_classes)
    }


def _fbeta_from_pr(precision: np.ndarray | float, recall: np.ndarray | float, beta: float):
    b2 = beta * beta
    num = (1 + b2) * np.asarray(precision, dtype=float) * np.asarray(recall, dtype=float)
    den = b2 * np.asarray(precision, dtype=float) + np.asarray(recall, dtype=float)
    return _safe_div(num, den)


def averaged_prf(cm: np.ndarray, kind: str, averaging: str, beta: float) -> float:
    tp, fp, fn = _per_class_counts(cm)
    support = cm.sum(axis=1).astype(float)
    if averaging == "micro":
        tp_s, fp_s, fn_s = tp.sum(), fp.sum(), fn.sum()
        p = tp_s / (tp_s + fp_s) if tp_s + fp_s > 0 else 0.0
        r = tp_s / (tp_s + fn_s) if tp_s + fn_s > 0 else 0.0
        if kind == "precision":
            return float(p)
        if kind == "recall":
            return float(r)
        return float(_fbeta_from_pr(p, r, beta))
    per_p = _safe_div(tp, tp + fp)
    per_r = _safe_div(tp, tp + fn)
    if kind == "precision":
        per = per_p
    elif kind == "recall":
        per = per_r
    else:
        per = _fbeta_from_pr(per_p, per_r, beta)
    if averaging == "macro":
        return float(per.mean())
    # weighted: support-weighted; total support is N > 0
    return float((per * support).sum() / support.sum())


def geometric_mean_recall(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    """Geometric mean of per-class recalls over classes present in y_true."""
    cm = confusion_matrix(y_true, y_pred, n_classes)
    support = cm.sum(axis=1)
    present = support > 0
    recalls = _safe_div(np.diag(cm)[present].astype(float), support[present].astype(float))
    if recalls.size == 0:
        return 0.0
    if np.any(recalls == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(recalls))))


def matthews_corrcoef(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    """Multiclass MCC from the confusion matrix; degenerate denominators give 0."""
    cm = confusion_matrix(y_true, y_pred, n_classes).astype(float)
    t = cm.sum(axis=1)
    p = cm.sum(axis=0)
    c = np.trace(cm)
    s = cm.sum()
    cov_ytyp = c * s - t @ p
    cov_ypyp = s * s - p @ p
    cov_ytyt = s * s - t @ t
    den = math.sqrt(cov_ypyp) * math.sqrt(cov_ytyt)
    if den == 0.0:
        return 0.0
    return float(cov_ytyp / den)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _binary_auc(positives: np.ndarray, scores: np.ndarray) -> float | None:
    """Rank-statistic AUC; None when positives or negatives are absent."""
    n_pos = int(positives.sum())
    n_neg = positives.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(scores)
    return float((ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_auc(y_true: np.ndarray, y_proba: np.ndarray, averaging: str) -> float:
    """One-vs-rest ROC AUC; undefined class terms are skipped and renormalized."""
    n, n_classes = y_proba.shape
    if averaging == "micro":
        onehot = np.zeros((n, n_classes), dtype=bool)
        onehot[np.arange(n), y_true] = True
        auc = _binary_auc(onehot.ravel(), y_proba.ravel())
        return 0.5 if auc is None else auc
    aucs: list[float] = []
    supports: list[float] = []
    for c in range(n_classes):
        auc = _binary_auc(y_true == c, y_proba[:, c])
        if auc is None:
            continue
        aucs.append(auc)
        supports.append(float(np.sum(y_true == c)))
    if not aucs:
        return 0.5
    if averaging == "macro":
        return float(np.mean(aucs))
    return float(np.dot(aucs, supports) / np.sum(supports))


def log_loss(y_true: np.ndarray, y_proba: np.ndarray) -> float:
    p = np.clip(y_proba[np.arange(y_true.shape[0]), y_true], PROBA_CLIP, 1.0 - PROBA_CLIP)
    return float(-np.mean(np.log(p)))


def compute_metrics(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    y_proba: np.ndarray,
    config: MetricConfig,
) -> MetricVector:
    """All eight metrics for integer-indexed predictions against a class universe.

    The universe (and probability column order) is ``y_proba.shape[1]``.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    y_proba = np.asarray(y_proba, dtype=float)
    _validate_inputs(y_true, y_pred, y_proba)
    n_classes = y_proba.shape[1]
    cm = confusion_matrix(y_true, y_pred, n_classes)

    raw: dict[str, float] = {}
    raw["accuracy"] = float(np.mean(y_true == y_pred))
    raw["gmean"] = geometric_mean_recall(y_true, y_pred, n_classes)
    raw["precision"] = averaged_prf(cm, "precision", config.averaging["precision"], config.beta)
    raw["recall"] = averaged_prf(cm, "recall", config.averaging["recall"], config.beta)
    raw["fbeta"] = averaged_prf(cm, "fbeta", config.averaging["fbeta"], config.beta)
    raw["mcc"] = matthews_corrcoef(y_true, y_pred, n_classes)
    raw["roc_auc"] = roc_auc(y_true, y_proba, config.averaging["roc_auc"])
    raw["log_loss"] = log_loss(y_true, y_proba)

    normalized = {m: float(normalize_metric(m, raw[m])) for m in METRIC_IDS}
    return MetricVector(raw=raw, normalized=normalized)


def weighted_score(v: MetricVector, config: MetricConfig) -> float:
    """Normalized weighted mean of the eight [0,1] metric scores."""
    total = sum(float(config.weights[m]) for m in METRIC_IDS)
    if total <= 0.0:
        raise NoActiveMetricsError("no active metrics")
    return float(sum(float(config.weights[m]) * v.normalized[m] for m in METRIC_IDS) / total)

"""2D embeddings for the three linked spaces.

* data space — instances by standardized features;
* models' space — models by their eight weight-scaled normalized metrics;
* predictions' space — instances by the stack's out-of-fold label vectors,
  compared with normalized Hamming distance.

MDS is classical (Torgerson) scaling: deterministic, exact on Euclidean
inputs, and happy with precomputed distances. t-SNE comes from scikit-learn.
UMAP is a small self-contained implementation (exact kNN graph, fuzzy weights,
spectral init, seeded SGD) because the reference package is not available;
at desk scale the dense version is fast and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .eval_engine import EvaluationRun
from .metrics import METRIC_IDS, MetricConfig, compute_metrics, weighted_score
from .wrangler import DatasetSnapshot, instance_difficulty

PROJECTION_METHODS = ("mds", "tsne", "umap")
SPACES = ("data", "models", "predictions")
MIN_POINTS_FOR_NEIGHBOR_METHODS = 4
HISTOGRAM_BINS = 20


class ProjectionError(ValueError):
    """Invalid projection request."""


@dataclass(frozen=True)
class ProjectionResult:
    space: str
    method: str
    coords: np.ndarray
    point_scalar: np.ndarray
    scalar_semantic: str
    point_class: np.ndarray | None
    seed: int
    notice: str | None = None

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.coords)):
            raise ProjectionError("embedding produced non-finite coordinates")
        s = np.asarray(self.point_scalar, dtype=float)
        if s.shape[0] != self.coords.shape[0]:
            raise ProjectionError("point_scalar length must match the point count")
        if np.any((s < -1e-9) | (s > 1 + 1e-9)):
            raise ProjectionError("point_scalar must lie in [0,1]")

    def to_payload(self) -> dict:
        return {
            "space": self.space,
            "method": self.method,
            "seed": self.seed,
            "coords": self.coords.tolist(),
            "point_scalar": [float(v) for v in self.point_scalar],
            "scalar_semantic": self.scalar_semantic,
            "point_class": None if self.point_class is None else [int(c) for c in self.point_class],
            "notice": self.notice,
        }


# ---------------------------------------------------------------------------
# embedding primitives


def pairwise_euclidean(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.clip(d2, 0.0, None, out=d2)
    return np.sqrt(d2)


def classical_mds(distances: np.ndarray) -> np.ndarray:
    """Torgerson scaling: exact for Euclidean inputs, deterministic always."""
    n = distances.shape[0]
    if n == 1:
        return np.zeros((1, 2))
    d2 = np.asarray(distances, dtype=float) ** 2
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * centering @ d2 @ centering
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1][:2]
    lams = np.clip(eigvals[order], 0.0, None)
    # null axes amplify fp noise through the sqrt; flatten them exactly
    lams[lams <= lams.max() * 1e-12] = 0.0
    coords = np.zeros((n, 2))
    coords[:, : len(order)] = eigvecs[:, order] * np.sqrt(lams)[None, :]
    # canonical sign so repeated runs and library versions agree
    for k in range(2):
        col = coords[:, k]
        if col.any():
            i = int(np.argmax(np.abs(col)))
            if col[i] < 0:
                coords[:, k] = -col
    return coords


def tsne_embed(X: np.ndarray | None, distances: np.ndarray | None, seed: int) -> np.ndarray:
    from sklearn.manifold import TSNE

    if distances is not None:
        m = distances.shape[0]
        tsne = TSNE(
            n_components=2,
            perplexity=min(30.0, (m - 1) / 3.0),
            random_state=seed,
            init="random",
            metric="precomputed",
            n_jobs=1,
        )
        return np.asarray(tsne.fit_transform(distances), dtype=float)
    m = X.shape[0]
    tsne = TSNE(
        n_components=2,
        perplexity=min(30.0, (m - 1) / 3.0),
        random_state=seed,
        init="pca",
        n_jobs=1,
    )
    return np.asarray(tsne.fit_transform(X), dtype=float)


# Curve parameters matching the common min_dist=0.1, spread=1.0 defaults.
_UMAP_A = 1.576943
_UMAP_B = 0.895061


def _umap_graph(distances: np.ndarray, n_neighbors: int) -> np.ndarray:
    """Fuzzy nearest-neighbor weights, symmetrized with probabilistic union."""
    n = distances.shape[0]
    weights = np.zeros((n, n))
    target = np.log2(max(n_neighbors, 2))
    for i in range(n):
        order = np.argsort(distances[i], kind="mergesort")
        neighbors = [j for j in order if j != i][:n_neighbors]
        dists = distances[i, neighbors]
        nonzero = dists[dists > 0]
        rho = nonzero.min() if nonzero.size else 0.0
        lo, hi = 1e-6, 1e3
        for _ in range(64):
            sigma = 0.5 * (lo + hi)
            total = np.exp(-np.clip(dists - rho, 0.0, None) / sigma).sum()
            if abs(total - target) < 1e-5:
                break
            if total > target:
                hi = sigma
            else:
                lo = sigma
        weights[i, neighbors] = np.exp(-np.clip(dists - rho, 0.0, None) / sigma)
    return weights + weights.T - weights * weights.T


def _spectral_init(graph: np.ndarray, seed: int) -> np.ndarray:
    n = graph.shape[0]
    deg = graph.sum(axis=1)
    deg[deg == 0] = 1.0
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - (graph * inv_sqrt[:, None]) * inv_sqrt[None, :]
    try:
        eigvals, eigvecs = np.linalg.eigh(lap)
        coords = eigvecs[:, 1:3]
        scale = np.abs(coords).max()
        if scale == 0 or not np.all(np.isfinite(coords)):
            raise np.linalg.LinAlgError
        return 10.0 * coords / scale
    except np.linalg.LinAlgError:
        rng = np.random.default_rng(seed)
        return rng.uniform(-10, 10, size=(n, 2))


def umap_embed(
    X: np.ndarray | None,
    distances: np.ndarray | None,
    seed: int,
    n_neighbors: int | None = None,
    n_epochs: int = 200,
) -> np.ndarray:
    """Seeded UMAP-style layout over an exact kNN fuzzy graph."""
    if distances is None:
        distances = pairwise_euclidean(X)
    n = distances.shape[0]
    k = n_neighbors if n_neighbors is not None else min(15, n - 1)
    graph = _umap_graph(distances, max(2, k))
    coords = _spectral_init(graph, seed)
    rng = np.random.default_rng(seed)
    edges = np.argwhere(graph > 0)
    edges = edges[edges[:, 0] < edges[:, 1]]
    if edges.size == 0:
        return coords
    w = graph[edges[:, 0], edges[:, 1]]
    w = w / w.max()
    a, b = _UMAP_A, _UMAP_B
    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        active = rng.random(len(edges)) < w
        for (i, j), keep in zip(edges, active):
            if not keep:
                continue
            diff = coords[i] - coords[j]
            d2 = float(diff @ diff)
            if d2 > 0:
                grad_coef = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2**b)
                grad = np.clip(grad_coef * diff, -4.0, 4.0)
                coords[i] += alpha * grad
                coords[j] -= alpha * grad
            for _ in range(3):  # negative samples
                kneg = int(rng.integers(0, n))
                if kneg == i:
                    continue
                diff = coords[i] - coords[kneg]
                d2 = float(diff @ diff)
                grad_coef = (2.0 * b) / ((0.001 + d2) * (1.0 + a * d2**b))
                grad = np.clip(grad_coef * diff, -4.0, 4.0)
                coords[i] += alpha * grad
    return coords


def embed(
    points: np.ndarray | None,
    method: str,
    seed: int,
    distances: np.ndarray | None = None,
) -> tuple[np.ndarray, str | None]:
    """Dispatch to one embedding method; small inputs fall back to MDS."""
    if method not in PROJECTION_METHODS:
        raise ProjectionError(f"unknown projection method {method!r}")
    m = points.shape[0] if points is not None else distances.shape[0]
    notice = None
    if method in ("tsne", "umap") and m < MIN_POINTS_FOR_NEIGHBOR_METHODS:
        notice = f"{method} needs at least {MIN_POINTS_FOR_NEIGHBOR_METHODS} points; fell back to mds"
        method = "mds"
    if method == "mds":
        d = distances if distances is not None else pairwise_euclidean(points)
        return classical_mds(d), notice
    if method == "tsne":
        return tsne_embed(points, distances, seed), notice
    return umap_embed(points, distances, seed), notice


# ---------------------------------------------------------------------------
# the three spaces


def standardize(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    out = np.zeros_like(X, dtype=float)
    nz = std > 0
    out[:, nz] = (X[:, nz] - mean[nz]) / std[nz]
    return out


def project_data_space(
    snapshot: DatasetSnapshot,
    method: str,
    difficulty: np.ndarray,
    seed: int = 0,
) -> ProjectionResult:
    """Embed standardized instances; the point scalar is stack difficulty."""
    difficulty = np.asarray(difficulty, dtype=float)
    if difficulty.shape[0] != snapshot.n_instances:
        raise ProjectionError("difficulty length must match the snapshot")
    coords, notice = embed(standardize(snapshot.X), method, seed)
    return ProjectionResult(
        space="data",
        method=method if notice is None else "mds",
        coords=coords,
        point_scalar=difficulty,
        scalar_semantic="difficulty",
        point_class=snapshot.y.copy(),
        seed=seed,
        notice=notice,
    )


def model_space_vectors(run: EvaluationRun, model_ids: Sequence[int], config: MetricConfig) -> np.ndarray:
    """Weight-scaled normalized metric vectors; zero-weight metrics vanish."""
    vectors = np.zeros((len(model_ids), len(METRIC_IDS)))
    for row, mid in enumerate(model_ids):
        rec = run.records.get(mid)
        if rec is None:
            raise ProjectionError(f"model {mid} not present in the evaluation run")
        if rec.failed:
            raise ProjectionError(f"model {mid} failed evaluation and cannot be projected")
        for col, m in enumerate(METRIC_IDS):
            vectors[row, col] = (config.weights[m] / 100.0) * rec.metrics.normalized[m]
    return vectors


def metric_boxplot_stats(run: EvaluationRun, model_ids: Sequence[int]) -> dict[str, dict[str, float]]:
    """Per-metric distribution of normalized values over the given models."""
    stats: dict[str, dict[str, float]] = {}
    for m in METRIC_IDS:
        values = np.asarray([run.records[mid].metrics.normalized[m] for mid in model_ids])
        stats[m] = {
            "min": float(values.min()),
            "q1": float(np.percentile(values, 25, method="midpoint")),
            "median": float(np.percentile(values, 50, method="midpoint")),
            "q3": float(np.percentile(values, 75, method="midpoint")),
            "max": float(values.max()),
        }
    return stats


def _model_scalars(
    run: EvaluationRun,
    model_ids: Sequence[int],
    config: MetricConfig,
    color_metric: str | None,
) -> tuple[np.ndarray, str]:
    if color_metric is not None:
        if color_metric not in METRIC_IDS:
            raise ProjectionError(f"unknown metric {color_metric!r}")
        scalars = np.asarray([run.records[mid].metrics.normalized[color_metric] for mid in model_ids])
        return scalars, f"normalized {color_metric}"
    scalars = np.asarray([weighted_score(run.records[mid].metrics, config) for mid in model_ids])
    return scalars, "combined score"


def project_model_space(
    run: EvaluationRun,
    selected_models: Sequence[int],
    config: MetricConfig,
    method: str = "mds",
    color_metric: str | None = None,
    seed: int = 0,
) -> tuple[ProjectionResult, dict[str, dict[str, float]]]:
    """Embed selected models from their 8-dimensional weighted metric vectors."""
    model_ids = sorted(selected_models)
    if len(model_ids) < 2:
        raise ProjectionError("model-space projection needs at least 2 models")
    vectors = model_space_vectors(run, model_ids, config)
    coords, notice = embed(vectors, method, seed)
    scalars, semantic = _model_scalars(run, model_ids, config, color_metric)
    result = ProjectionResult(
        space="models",
        method=method if notice is None else "mds",
        coords=coords,
        point_scalar=scalars,
        scalar_semantic=semantic,
        point_class=np.asarray(model_ids),
        seed=seed,
        notice=notice,
    )
    return result, metric_boxplot_stats(run, model_ids)


def recolor_model_space(
    result: ProjectionResult,
    run: EvaluationRun,
    config: MetricConfig,
    color_metric: str | None,
) -> ProjectionResult:
    """Swap the point scalar without touching coordinates (same array object)."""
    model_ids = [int(mid) for mid in result.point_class]
    scalars, semantic = _model_scalars(run, model_ids, config, color_metric)
    return replace(result, point_scalar=scalars, scalar_semantic=semantic)


def prediction_distance_matrix(predictions: np.ndarray) -> np.ndarray:
    """Normalized Hamming distance between instances' model-prediction vectors.

    ``predictions`` is models x instances; the result is instances x instances.
    """
    n_models, n_instances = predictions.shape
    disagree = np.zeros((n_instances, n_instances))
    for b in range(n_models):
        row = predictions[b]
        disagree += (row[:, None] != row[None, :]).astype(float)
    return disagree / n_models


def project_prediction_space(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    stack_models: Sequence[int],
    method: str = "mds",
    seed: int = 0,
) -> ProjectionResult:
    """Embed instances by how the stack's models predicted them."""
    model_ids = sorted(stack_models)
    if len(model_ids) < 2:
        raise ProjectionError("prediction-space projection needs at least 2 stack models")
    preds = []
    for mid in model_ids:
        rec = run.records.get(mid)
        if rec is None or rec.failed:
            raise ProjectionError(f"model {mid} unavailable for prediction space")
        preds.append(rec.oof_pred)
    distances = prediction_distance_matrix(np.stack(preds))
    coords, notice = embed(None, method, seed, distances=distances)
    difficulty = instance_difficulty(snapshot, run, set(model_ids))
    return ProjectionResult(
        space="predictions",
        method=method if notice is None else "mds",
        coords=coords,
        point_scalar=difficulty,
        scalar_semantic="difficulty",
        point_class=snapshot.y.copy(),
        seed=seed,
        notice=notice,
    )


def model_score_histograms(
    snapshot: DatasetSnapshot,
    run: EvaluationRun,
    stack_models: Sequence[int],
    selected_instances: Sequence[int],
    config: MetricConfig,
) -> dict:
    """Mirrored 5%-bin histograms: per-model scores on a selection vs all points."""
    model_ids = sorted(stack_models)
    if not model_ids:
        raise ProjectionError("stack_models must be non-empty")
    sel = np.asarray(sorted(set(int(i) for i in selected_instances)), dtype=int)
    if sel.size == 0:
        raise ProjectionError("selected_instances must be non-empty")
    if sel.min() < 0 or sel.max() >= snapshot.n_instances:
        raise ProjectionError("selected instance index out of range")

    def bin_of(score: float) -> int:
        return min(int(score / 0.05), HISTOGRAM_BINS - 1)

    counts_sel = [0] * HISTOGRAM_BINS
    counts_all = [0] * HISTOGRAM_BINS
    for mid in model_ids:
        rec = run.records.get(mid)
        if rec is None or rec.failed:
            raise ProjectionError(f"model {mid} unavailable for histograms")
        subset = compute_metrics(
            snapshot.y[sel], rec.oof_pred[sel], rec.oof_proba[sel], config
        )
        counts_sel[bin_of(weighted_score(subset, config))] += 1
        full = compute_metrics(snapshot.y, rec.oof_pred, rec.oof_proba, config)
        counts_all[bin_of(weighted_score(full, config))] += 1
    edges = [round(i * 0.05, 2) for i in range(HISTOGRAM_BINS + 1)]
    return {"selected": counts_sel, "all": counts_all, "bin_edges": edges}

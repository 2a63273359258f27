"""Registry of the 11 classifier families with hyperparameter grids.

The registry is immutable after construction. Model ids are assigned over the
full unfiltered pool in a fixed order (algorithm order, then grid order), so
filtering always yields a subset of the same ids and wrangling never renumbers
models.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

ALGO_IDS = ("knn", "svc", "gaunb", "mlp", "lr", "lda", "qda", "rf", "extrat", "adab", "gradb")

# Colorblind-safe categorical palette (Tol muted plus two fills).
ALGO_COLORS = {
    "knn": "#332288",
    "svc": "#88CCEE",
    "gaunb": "#44AA99",
    "mlp": "#117733",
    "lr": "#999933",
    "lda": "#DDCC77",
    "qda": "#CC6677",
    "rf": "#882255",
    "extrat": "#AA4499",
    "adab": "#661100",
    "gradb": "#6699CC",
}

# Desk-scale default grids (~310 models). Overridable via a JSON config file;
# see load_grid_config for the schema.
DEFAULT_GRIDS: dict[str, dict[str, tuple]] = {
    "knn": {
        "n_neighbors": tuple(range(1, 26)),
        "weights": ("uniform", "distance"),
        "p": (1, 2),
    },
    "svc": {
        "C": (0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0),
        "kernel": ("rbf", "linear"),
    },
    "gaunb": {
        "var_smoothing": (1e-9, 1e-8, 1e-7, 1e-6, 1e-5),
    },
    "mlp": {
        "hidden_layer_sizes": ((50,), (100,), (50, 50)),
        "alpha": (0.0001, 0.001, 0.01),
        "activation": ("relu", "tanh"),
    },
    "lr": {
        "C": (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0),
        "class_weight": (None, "balanced"),
    },
    "lda": {
        "solver": ("svd", "lsqr", "eigen"),
    },
    "qda": {
        "reg_param": (0.0, 0.001, 0.01, 0.1, 0.5),
    },
    "rf": {
        "n_estimators": (10, 25, 50, 75, 100),
        "max_depth": (2, 3, 5, 7, None),
        "criterion": ("gini", "entropy"),
    },
    "extrat": {
        "n_estimators": (10, 25, 50, 75, 100),
        "max_depth": (2, 3, 5, 7, None),
        "criterion": ("gini", "entropy"),
    },
    "adab": {
        "n_estimators": (10, 25, 50, 75, 100),
        "learning_rate": (0.01, 0.1, 0.5, 1.0),
    },
    "gradb": {
        "n_estimators": (25, 50, 100),
        "learning_rate": (0.01, 0.1, 0.5, 1.0),
        "max_depth": (2, 3),
    },
}


class ZooError(ValueError):
    """Unknown algorithm/parameter or malformed grid."""


@dataclass(frozen=True)
class AlgorithmSpec:
    algo_id: str
    color: str
    grid: dict[str, tuple]

    @property
    def grid_size(self) -> int:
        size = 1
        for values in self.grid.values():
            size *= len(values)
        return size


@dataclass(frozen=True)
class ModelSpec:
    model_id: int
    algo_id: str
    params: dict

    def params_key(self) -> tuple:
        return tuple((k, self.params[k]) for k in sorted(self.params))

    def content_hash(self) -> str:
        payload = json.dumps(
            {"algo": self.algo_id, "params": _jsonable_params(self.params)}, sort_keys=True
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _jsonable_params(params: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def load_grid_config(path: str | Path) -> dict[str, dict[str, tuple]]:
    """Read grid overrides from a JSON file.

    Schema: ``{algo_id: {param_name: [value, ...], ...}, ...}``. Listed
    algorithms replace their default grid; unlisted ones keep the defaults.
    Nested arrays (e.g. mlp hidden layer sizes) become tuples.
    """
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ZooError("grid config must be a JSON object keyed by algorithm id")
    grids: dict[str, dict[str, tuple]] = {}
    for algo_id, grid in raw.items():
        if algo_id not in ALGO_IDS:
            raise ZooError(f"unknown algorithm {algo_id!r} in grid config")
        if not isinstance(grid, dict) or not grid:
            raise ZooError(f"grid for {algo_id!r} must be a non-empty object")
        converted: dict[str, tuple] = {}
        for param, values in grid.items():
            if not isinstance(values, list) or not values:
                raise ZooError(f"{algo_id}.{param} must be a non-empty array of candidate values")
            converted[param] = tuple(_tuplify(v) for v in values)
        grids[algo_id] = converted
    return grids


class ModelZoo:
    """Immutable pool of candidate models enumerated from per-algorithm grids."""

    def __init__(self, grids: dict[str, dict[str, tuple]] | None = None):
        merged = {algo: dict(DEFAULT_GRIDS[algo]) for algo in ALGO_IDS}
        if grids:
            for algo_id, grid in grids.items():
                if algo_id not in ALGO_IDS:
                    raise ZooError(f"unknown algorithm {algo_id!r}")
                if not grid:
                    raise ZooError(f"grid for {algo_id!r} is empty")
                merged[algo_id] = dict(grid)
        self._algorithms = tuple(
            AlgorithmSpec(algo_id=a, color=ALGO_COLORS[a], grid=merged[a]) for a in ALGO_IDS
        )
        self._pool = self._enumerate_full()

    @classmethod
    def from_config_file(cls, path: str | Path) -> "ModelZoo":
        return cls(grids=load_grid_config(path))

    def _enumerate_full(self) -> tuple[ModelSpec, ...]:
        pool: list[ModelSpec] = []
        next_id = 0
        for spec in self._algorithms:
            names = list(spec.grid)
            for combo in itertools.product(*(spec.grid[n] for n in names)):
                pool.append(ModelSpec(model_id=next_id, algo_id=spec.algo_id, params=dict(zip(names, combo))))
                next_id += 1
        return tuple(pool)

    @property
    def algorithms(self) -> tuple[AlgorithmSpec, ...]:
        return self._algorithms

    def algorithm(self, algo_id: str) -> AlgorithmSpec:
        for spec in self._algorithms:
            if spec.algo_id == algo_id:
                return spec
        raise ZooError(f"unknown algorithm {algo_id!r}")

    def enumerate_pool(self, filters: dict | None = None) -> list[ModelSpec]:
        """The candidate pool, optionally narrowed by per-algorithm param constraints.

        A constraint is either a list of allowed values or ``{"min": x, "max": y}``
        (both bounds optional) for numeric parameters. Filtering only removes
        models; ids are the full-pool ids.
        """
        if not filters:
            return list(self._pool)
        self._validate_filters(filters)
        return [m for m in self._pool if self._matches(m, filters.get(m.algo_id))]

    def _validate_filters(self, filters: dict) -> None:
        for algo_id, constraints in filters.items():
            grid = self.algorithm(algo_id).grid
            for param in constraints:
                if param not in grid:
                    raise ZooError(f"unknown parameter {param!r} for algorithm {algo_id!r}")

    @staticmethod
    def _matches(model: ModelSpec, constraints: dict | None) -> bool:
        if not constraints:
            return True
        for param, rule in constraints.items():
            value = model.params[param]
            if isinstance(rule, dict):
                lo = rule.get("min")
                hi = rule.get("max")
                if value is None:
                    return False
                if lo is not None and value < lo:
                    return False
                if hi is not None and value > hi:
                    return False
            else:
                allowed = [_tuplify(v) for v in rule]
                if _tuplify(value) not in allowed:
                    return False
        return True

    def pool_size(self) -> int:
        return len(self._pool)

    def model(self, model_id: int) -> ModelSpec:
        if 0 <= model_id < len(self._pool):
            return self._pool[model_id]
        raise ZooError(f"unknown model_id {model_id}")


def algorithm_coverage(selected: set[int], pool: list[ModelSpec]) -> dict[str, dict]:
    """Radar-chart payload: per-algorithm selected/total counts and fraction."""
    known = {m.model_id for m in pool}
    unknown = set(selected) - known
    if unknown:
        raise ZooError(f"unknown model ids in selection: {sorted(unknown)[:5]}")
    coverage: dict[str, dict] = {}
    for algo_id in ALGO_IDS:
        models = [m for m in pool if m.algo_id == algo_id]
        total = len(models)
        count = sum(1 for m in models if m.model_id in selected)
        coverage[algo_id] = {
            "selected_count": count,
            "total_count": total,
            "fraction": (count / total) if total else 0.0,
        }
    return coverage

"""Session-scoped HTTP API.

JSON in and out everywhere. Long-running work (pool evaluation, the expensive
importance methods, projections) returns a job id; progress is polled at
``GET /api/sessions/{sid}/jobs/{job_id}`` as ``{done, total, phase}``. Within a
session exactly one mutation runs at a time: concurrent mutating calls get a
409 with code ``session_busy``. Sessions are fully isolated from each other.

With a persistence directory every session appends its mutating actions to a
journal (the same JSON action format the workflow runner executes), and the
evaluation cache lives on disk, so a restarted server replays the journals and
resumes instantly.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .importance import DetailedSearchDisabled, FeatureMaskSet, ImportanceError
from .eval_engine import EvalError
from .history import provenance_document, stack_summaries
from .metrics import (
    AVERAGED_METRICS,
    AVERAGING_MODES,
    BETA_CHOICES,
    METRIC_IDS,
    MetricConfig,
    MetricError,
)
from .model_zoo import ZooError
from .projections import ProjectionError
from .session import SessionError, StaleRunError, WorkbenchSession
from .stacker import StackError, StackValidationError, import_stack
from .eval_engine import algorithm_score_distribution, per_class_summary
from .wrangler import CsvValidationError, WrangleError, load_feature_csv
from . import workflow as wf

class _Job:
    def __init__(self, kind: str):
        self.job_id = uuid.uuid4().hex[:12]
        self.kind = kind
        self.status = "queued"
        self.progress = {"done": 0, "total": 0, "phase": "queued"}
        self.error: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "progress": dict(self.progress),
            "error": self.error,
        }


class _Entry:
    def __init__(self, session: WorkbenchSession, journal_path: Path | None):
        self.session = session
        self.jobs: dict[str, _Job] = {}
        self.journal_path = journal_path


def _http_error(status: int, code: str, message: str, **details) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message, **details})


@contextmanager
def _translate_errors():
    try:
        yield
    except HTTPException:
        raise
    except StaleRunError as exc:
        raise _http_error(409, "stale_run", str(exc)) from exc
    except DetailedSearchDisabled as exc:
        raise _http_error(409, "detailed_search_disabled", str(exc)) from exc
    except StackValidationError as exc:
        raise _http_error(400, "stack_validation_error", str(exc)) from exc
    except CsvValidationError as exc:
        raise _http_error(400, "csv_validation_error", str(exc), rows=exc.rows) from exc
    except (WrangleError, MetricError, ZooError, EvalError, ImportanceError,
            ProjectionError, StackError, SessionError, wf.WorkflowError) as exc:
        code = "bad_request"
        for klass, name in (
            (WrangleError, "wrangle_error"),
            (MetricError, "metric_error"),
            (ZooError, "zoo_error"),
            (EvalError, "eval_error"),
            (ImportanceError, "importance_error"),
            (ProjectionError, "projection_error"),
            (StackError, "stack_error"),
            (SessionError, "session_error"),
            (wf.WorkflowError, "workflow_error"),
        ):
            if isinstance(exc, klass):
                code = name
                break
        raise _http_error(400, code, str(exc)) from exc


class CreateSessionBody(BaseModel):
    csv_text: str | None = None
    csv_path: str | None = None
    builtin: str | None = None
    label_column: str | None = None
    seed: int = 1
    n_folds: int = Field(default=5, ge=2, le=10)
    grids: dict | None = None


class MetricConfigBody(BaseModel):
    weights: dict[str, int]
    averaging: dict[str, str]
    beta: float = 1.0
    detailed_feature_search: bool = True

    def validated(self) -> MetricConfig:
        if set(self.weights) != set(METRIC_IDS):
            raise _http_error(400, "metric_error", f"weights must cover exactly {sorted(METRIC_IDS)}")
        for m, w in self.weights.items():
            if not 0 <= w <= 100 or w % 5 != 0:
                raise _http_error(
                    400, "metric_error", f"weight for {m!r} must be an integer in [0,100] in steps of 5"
                )
        if sum(self.weights.values()) <= 0:
            raise _http_error(400, "no_active_metrics", "no active metrics")
        if set(self.averaging) != set(AVERAGED_METRICS):
            raise _http_error(400, "metric_error", f"averaging must cover exactly {sorted(AVERAGED_METRICS)}")
        for m, mode in self.averaging.items():
            if mode not in AVERAGING_MODES:
                raise _http_error(400, "metric_error", f"averaging for {m!r} must be one of {AVERAGING_MODES}")
        if float(self.beta) not in BETA_CHOICES:
            raise _http_error(400, "metric_error", f"beta must be one of {BETA_CHOICES}")
        return MetricConfig(
            weights={m: float(w) for m, w in self.weights.items()},
            averaging=dict(self.averaging),
            beta=float(self.beta),
            detailed_feature_search=self.detailed_feature_search,
        )


class SelectionBody(BaseModel):
    model_ids: list[int] | None = None
    algorithms: list[str] | None = None


class FilterBody(BaseModel):
    filters: dict


class WrangleBody(BaseModel):
    op: str
    indices: list[int]
    mode: str = "mean"


class RestoreBody(BaseModel):
    snapshot_id: str


class MasksBody(BaseModel):
    features: list[str]
    global_mask: list[bool] = Field(alias="global")
    per_model: dict[str, list[bool]] = {}

    model_config = {"populate_by_name": True}


class ImportanceBody(BaseModel):
    method: str


class ProjectBody(BaseModel):
    method: str = "mds"
    color_metric: str | None = None
    seed: int | None = None


class RecolorBody(BaseModel):
    color_metric: str | None = None


class HistogramBody(BaseModel):
    selected_instances: list[int]


class BuildBody(BaseModel):
    label: str | None = None


class StoreBody(BaseModel):
    note: str = ""


class ActivateBody(BaseModel):
    stack_id: str


class EvaluateBody(BaseModel):
    scope: str = "all"


class PredictBody(BaseModel):
    stack: dict
    csv_text: str


def create_app(persist_dir: str | Path | None = None, max_workers: int | None = None,
               job_workers: int = 2) -> FastAPI:
    app = FastAPI(title="stackbench", version="0.1.0")
    entries: dict[str, _Entry] = {}
    executor = ThreadPoolExecutor(max_workers=job_workers)
    persist = Path(persist_dir) if persist_dir else None
    cache_dir = None
    if persist:
        persist.mkdir(parents=True, exist_ok=True)
        (persist / "sessions").mkdir(exist_ok=True)
        cache_dir = persist / "cache"

    # -- persistence helpers -------------------------------------------------

    def journal(entry: _Entry, action: dict) -> None:
        if entry.journal_path is None:
            return
        with entry.journal_path.open("a") as fh:
            fh.write(json.dumps(action, sort_keys=True) + "\n")

    def resume_sessions() -> None:
        if not persist:
            return
        for path in sorted((persist / "sessions").glob("*.jsonl")):
            sid = path.stem
            lines = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
            if not lines:
                continue
            header, actions = lines[0], lines[1:]
            try:
                session = wf.build_session(header, cache_dir=cache_dir, max_workers=max_workers)
                for action in actions:
                    wf.apply_action(session, action)
            except Exception:  # noqa: BLE001 - a broken journal must not kill startup
                continue
            entries[sid] = _Entry(session, path)

    resume_sessions()

    # -- helpers --------------------------------------------------------------

    def get_entry(sid: str) -> _Entry:
        if sid not in entries:
            raise _http_error(404, "unknown_session", f"no session {sid!r}")
        return entries[sid]

    @contextmanager
    def mutate(entry: _Entry):
        if not entry.session.mutex.acquire(blocking=False):
            raise _http_error(409, "session_busy", "another mutation is in progress for this session")
        try:
            with _translate_errors():
                yield entry.session
        finally:
            entry.session.mutex.release()

    def submit_job(entry: _Entry, kind: str, fn) -> dict:
        if not entry.session.mutex.acquire(blocking=False):
            raise _http_error(409, "session_busy", "another mutation is in progress for this session")
        job = _Job(kind)
        entry.jobs[job.job_id] = job

        def progress(done: int, total: int, phase: str) -> None:
            job.progress = {"done": done, "total": total, "phase": phase}

        def runner() -> None:
            job.status = "running"
            job.progress["phase"] = kind
            try:
                fn(progress)
                job.status = "done"
            except Exception as exc:  # noqa: BLE001 - surfaced through polling
                job.status = "failed"
                job.error = f"{type(exc).__name__}: {exc}"
            finally:
                entry.session.mutex.release()

        executor.submit(runner)
        return {"job_id": job.job_id, "status": job.status}

    # -- meta -----------------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(entries)}

    # -- sessions -------------------------------------------------------------

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        doc = {
            "dataset": {},
            "label_column": body.label_column,
            "seed": body.seed,
            "n_folds": body.n_folds,
        }
        if body.grids is not None:
            doc["grids"] = body.grids
        if body.csv_text is not None:
            doc["dataset"] = {"csv_text": body.csv_text}
        elif body.csv_path is not None:
            doc["dataset"] = {"csv_path": body.csv_path}
        elif body.builtin is not None:
            doc["dataset"] = {"builtin": body.builtin}
        else:
            raise _http_error(400, "bad_request", "one of csv_text, csv_path, builtin is required")
        sid = uuid.uuid4().hex[:8]
        with _translate_errors():
            session = wf.build_session(doc, cache_dir=cache_dir, max_workers=max_workers)
        journal_path = (persist / "sessions" / f"{sid}.jsonl") if persist else None
        entry = _Entry(session, journal_path)
        entries[sid] = entry
        if journal_path:
            journal(entry, doc)
        return {"session_id": sid, "summary": session.dataset_summary()}

    @app.get("/api/sessions/{sid}")
    def session_summary(sid: str) -> dict:
        entry = get_entry(sid)
        return {
            "session_id": sid,
            "summary": entry.session.dataset_summary(),
            "seed": entry.session.seed,
            "n_folds": entry.session.n_folds,
            "pool_size": len(entry.session.pool),
            "selection_size": len(entry.session.selection),
            "has_run": entry.session.run is not None,
        }

    # -- metric config ----------------------------------------------------

    @app.get("/api/sessions/{sid}/metric-config")
    def get_metric_config(sid: str) -> dict:
        return get_entry(sid).session.config.to_dict()

    @app.put("/api/sessions/{sid}/metric-config")
    def put_metric_config(sid: str, body: MetricConfigBody) -> dict:
        entry = get_entry(sid)
        config = body.validated()
        with mutate(entry) as session:
            session.set_config(config)
            journal(entry, {"action": "set_metric_config", **config.to_dict()})
            return session.config.to_dict()

    # -- evaluation ---------------------------------------------------------

    @app.post("/api/sessions/{sid}/evaluate", status_code=202)
    def evaluate(sid: str, body: EvaluateBody | None = None) -> dict:
        entry = get_entry(sid)
        scope = body.scope if body else "all"

        def work(progress):
            entry.session.evaluate(scope=scope, progress=progress)
            journal(entry, {"action": "evaluate", "scope": scope})

        return submit_job(entry, "evaluate", work)

    @app.get("/api/sessions/{sid}/jobs/{job_id}")
    def job_status(sid: str, job_id: str) -> dict:
        entry = get_entry(sid)
        if job_id not in entry.jobs:
            raise _http_error(404, "unknown_job", f"no job {job_id!r}")
        return entry.jobs[job_id].to_dict()

    # -- pool ---------------------------------------------------------------

    @app.get("/api/sessions/{sid}/pool/algorithms")
    def pool_algorithms(sid: str) -> dict:
        session = get_entry(sid).session
        return {
            "algorithms": [
                {
                    "algo_id": spec.algo_id,
                    "color": spec.color,
                    "total_count": spec.grid_size,
                    "grid": {k: list(v) for k, v in spec.grid.items()},
                }
                for spec in session.zoo.algorithms
            ]
        }

    @app.get("/api/sessions/{sid}/pool/models")
    def pool_models(sid: str, algo_id: str | None = None) -> dict:
        session = get_entry(sid).session
        models = [
            {"model_id": m.model_id, "algo_id": m.algo_id, "params": m.params}
            for m in session.pool
            if algo_id is None or m.algo_id == algo_id
        ]
        return {"models": models}

    @app.post("/api/sessions/{sid}/pool/filtered")
    def pool_filtered(sid: str, body: FilterBody) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            matches = session.zoo.enumerate_pool(body.filters)
        return {"model_ids": [m.model_id for m in matches]}

    @app.get("/api/sessions/{sid}/pool/distributions")
    def pool_distributions(sid: str) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            run = session.require_run()
            stats, omitted = algorithm_score_distribution(run)
        return {"distributions": stats, "omitted": omitted}

    @app.get("/api/sessions/{sid}/pool/per-class")
    def pool_per_class(sid: str) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            run = session.require_run()
            summary = per_class_summary(run, session.selection & set(run.records))
        return {"per_class": summary}

    @app.get("/api/sessions/{sid}/pool/coverage")
    def pool_coverage(sid: str) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            return {"coverage": session.coverage()}

    # -- selection ----------------------------------------------------------

    @app.get("/api/sessions/{sid}/selection")
    def get_selection(sid: str) -> dict:
        session = get_entry(sid).session
        return {"model_ids": sorted(session.selection)}

    @app.put("/api/sessions/{sid}/selection")
    def put_selection(sid: str, body: SelectionBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            if body.model_ids is not None:
                session.select_models(body.model_ids)
                journal(entry, {"action": "select_models", "model_ids": sorted(session.selection)})
            elif body.algorithms is not None:
                session.select_algorithms(body.algorithms)
                journal(entry, {"action": "select_algorithms", "algorithms": body.algorithms})
            else:
                raise _http_error(400, "bad_request", "model_ids or algorithms required")
            return {"model_ids": sorted(session.selection)}

    # -- wrangling ------------------------------------------------------------

    @app.post("/api/sessions/{sid}/wrangle")
    def wrangle(sid: str, body: WrangleBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            if body.op == "remove":
                snap = session.remove_instances(set(body.indices))
                journal(entry, {"action": "remove_instances", "indices": sorted(body.indices)})
            elif body.op == "merge":
                snap = session.merge_instances(set(body.indices), body.mode)
                journal(entry, {"action": "merge_instances", "indices": sorted(body.indices), "mode": body.mode})
            elif body.op == "compose":
                snap = session.compose_instance(set(body.indices), body.mode)
                journal(entry, {"action": "compose_instance", "indices": sorted(body.indices), "mode": body.mode})
            else:
                raise _http_error(400, "bad_request", f"unknown wrangle op {body.op!r}")
            return session.dataset_summary()

    @app.get("/api/sessions/{sid}/wrangle/history")
    def wrangle_history(sid: str) -> dict:
        session = get_entry(sid).session
        return {
            "active_snapshot_id": session.snapshot.snapshot_id,
            "history": [
                {
                    "snapshot_id": s.snapshot_id,
                    "parent_snapshot_id": s.parent_snapshot_id,
                    "provenance": s.provenance,
                    "instances": s.n_instances,
                }
                for s in session.store.history()
            ],
        }

    @app.post("/api/sessions/{sid}/wrangle/restore")
    def wrangle_restore(sid: str, body: RestoreBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            session.restore_snapshot(body.snapshot_id)
            journal(entry, {"action": "restore_snapshot", "snapshot_id": body.snapshot_id})
            return session.dataset_summary()

    @app.get("/api/sessions/{sid}/data/table")
    def data_table(sid: str) -> dict:
        return get_entry(sid).session.feature_table()

    @app.get("/api/sessions/{sid}/data/difficulty")
    def data_difficulty(sid: str) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            difficulty = session.difficulty()
        return {
            "snapshot_id": session.snapshot.snapshot_id,
            "difficulty": [float(d) for d in difficulty],
        }

    # -- importance -----------------------------------------------------------

    @app.post("/api/sessions/{sid}/importance", status_code=202)
    def importance_compute(sid: str, body: ImportanceBody) -> dict:
        entry = get_entry(sid)
        method = body.method

        def work(progress):
            entry.session.compute_importance(method, progress=progress)

        return submit_job(entry, f"importance:{method}", work)

    @app.get("/api/sessions/{sid}/importance/combined")
    def importance_combined(sid: str, methods: str) -> dict:
        session = get_entry(sid).session
        wanted = {m.strip() for m in methods.split(",") if m.strip()}
        with _translate_errors():
            return session.combined_importance(wanted).to_payload()

    @app.get("/api/sessions/{sid}/importance/{method}")
    def importance_table(sid: str, method: str) -> dict:
        session = get_entry(sid).session
        if method not in session.importance_tables:
            raise _http_error(404, "importance_not_computed", f"{method} importance not computed yet")
        return session.importance_tables[method].to_payload()

    # -- masks ------------------------------------------------------------------

    @app.get("/api/sessions/{sid}/masks")
    def get_masks(sid: str) -> dict:
        return get_entry(sid).session.masks.to_dict()

    @app.put("/api/sessions/{sid}/masks")
    def put_masks(sid: str, body: MasksBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            state = {
                "features": body.features,
                "global": body.global_mask,
                "per_model": body.per_model,
            }
            if tuple(body.features) != session.masks.feature_names:
                raise _http_error(400, "importance_error", "mask feature list does not match the dataset")
            session.masks = FeatureMaskSet.from_dict(state)
            journal(entry, {"action": "set_masks_state", "state": state})
            return session.masks.to_dict()

    # -- projections -------------------------------------------------------------

    @app.post("/api/sessions/{sid}/projections/{space}", status_code=202)
    def project(sid: str, space: str, body: ProjectBody) -> dict:
        entry = get_entry(sid)
        if space not in ("data", "models", "predictions"):
            raise _http_error(404, "unknown_space", f"unknown projection space {space!r}")

        def work(progress):
            progress(0, 1, f"projecting {space}")
            entry.session.project(space, method=body.method, color_metric=body.color_metric, seed=body.seed)
            progress(1, 1, f"projecting {space}")

        return submit_job(entry, f"project:{space}", work)

    @app.get("/api/sessions/{sid}/projections/{space}")
    def projection_result(sid: str, space: str) -> dict:
        session = get_entry(sid).session
        if space not in session.projections:
            raise _http_error(404, "projection_not_computed", f"no {space} projection computed yet")
        payload = session.projections[space].to_payload()
        if space == "models":
            payload["metric_boxplots"] = session.model_boxplots
        return payload

    @app.post("/api/sessions/{sid}/projections/models/recolor")
    def recolor(sid: str, body: RecolorBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            return session.recolor_models(body.color_metric)

    @app.post("/api/sessions/{sid}/histograms")
    def histograms(sid: str, body: HistogramBody) -> dict:
        session = get_entry(sid).session
        with _translate_errors():
            return session.histograms(body.selected_instances)

    # -- stacking -----------------------------------------------------------------

    @app.post("/api/sessions/{sid}/stack/build")
    def stack_build(sid: str, body: BuildBody | None = None) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            label = body.label if body else None
            perf = session.build_active_stack(label=label)
            journal(entry, {"action": "build_stack", "label": label})
            return {"performance": perf, "model_ids": sorted(session.active_stack.model_ids)}

    @app.post("/api/sessions/{sid}/stack/store")
    def stack_store(sid: str, body: StoreBody | None = None) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            record = session.store_active_stack(note=body.note if body else "")
            journal(entry, {"action": "store_stack", "note": body.note if body else ""})
            return {
                "stack_id": record.stack_id,
                "parent_stack_id": record.parent_stack_id,
                "performance": dict(record.performance),
                "model_count": record.model_count,
            }

    @app.post("/api/sessions/{sid}/stack/activate")
    def stack_activate(sid: str, body: ActivateBody) -> dict:
        entry = get_entry(sid)
        with mutate(entry) as session:
            if body.stack_id not in {r.stack_id for r in session.registry.all()}:
                raise _http_error(404, "unknown_stack", f"no stack {body.stack_id!r}")
            record = session.activate_stack(body.stack_id)
            journal(entry, {"action": "activate_stack", "stack_id": body.stack_id})
            return {
                "stack_id": record.stack_id,
                "snapshot_id": record.snapshot_id,
                "model_ids": sorted(record.model_ids),
            }

    @app.get("/api/sessions/{sid}/stacks")
    def stacks(sid: str) -> dict:
        session = get_entry(sid).session
        return {"stacks": stack_summaries(session.registry)}

    @app.get("/api/sessions/{sid}/comparison")
    def comparison(sid: str) -> dict:
        return get_entry(sid).session.history.comparison_series()

    @app.get("/api/sessions/{sid}/provenance")
    def provenance(sid: str) -> dict:
        session = get_entry(sid).session
        return provenance_document(session.history, session.registry)

    @app.get("/api/sessions/{sid}/stacks/{stack_id}/export")
    def stack_export(sid: str, stack_id: str) -> dict:
        session = get_entry(sid).session
        if stack_id not in {r.stack_id for r in session.registry.all()}:
            raise _http_error(404, "unknown_stack", f"no stack {stack_id!r}")
        with _translate_errors():
            return session.export_stored_stack(stack_id)

    # -- stateless prediction ------------------------------------------------------

    @app.post("/api/predict")
    def predict(body: PredictBody) -> dict:
        with _translate_errors():
            predictor = import_stack(body.stack)
            X = load_feature_csv(body.csv_text, tuple(predictor.feature_names))
            labels = predictor.predict_labels(X)
            proba = predictor.predict_proba(X)
        return {
            "labels": labels,
            "classes": list(predictor.class_names),
            "probabilities": np.round(proba, 10).tolist(),
        }

    return app


app = create_app()

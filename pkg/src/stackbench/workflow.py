"""Scripted session replay: the JSON workflow format and its runner.

A workflow document drives a full session through the same operations the HTTP
API exposes, which makes end-to-end runs reproducible for CI and lets a
restarted server replay its journal. Schema (all steps optional except as
noted by each action):

    {
      "dataset": {"builtin": "heart"} | {"csv_path": "..."} | {"csv_text": "..."},
      "label_column": "Diagnosis",          # optional, default last column
      "seed": 1, "n_folds": 5,              # optional
      "grids": {...} | "grids_path": "...", # optional grid overrides
      "steps": [ {"action": "...", ...}, ... ]
    }

Actions: set_metric_config, evaluate, select_algorithms, select_models,
select_filtered, prune_selection, remove_instances, merge_instances,
compose_instance, restore_snapshot, set_masks, importance, project,
build_stack, store_stack, activate_stack, export_stack.
"""

from __future__ import annotations

import json
from pathlib import Path

from .metrics import MetricConfig
from .model_zoo import ModelZoo, load_grid_config
from .session import SessionError, WorkbenchSession


class WorkflowError(ValueError):
    pass


def load_dataset_text(doc: dict) -> str:
    ds = doc.get("dataset")
    if not isinstance(ds, dict):
        raise WorkflowError("workflow needs a 'dataset' object")
    if "csv_text" in ds:
        return ds["csv_text"]
    if "csv_path" in ds:
        return Path(ds["csv_path"]).read_text()
    if "builtin" in ds:
        if ds["builtin"] != "heart":
            raise WorkflowError(f"unknown builtin dataset {ds['builtin']!r}")
        from .data import heart_csv_text

        return heart_csv_text()
    raise WorkflowError("dataset must provide csv_text, csv_path, or builtin")


def build_session(doc: dict, *, cache_dir=None, max_workers=None) -> WorkbenchSession:
    grids = doc.get("grids")
    if grids is None and "grids_path" in doc:
        grids = load_grid_config(doc["grids_path"])
    elif grids is not None:
        # normalize the inline-JSON form (lists) the same way as grid files
        from .model_zoo import _tuplify

        grids = {
            algo: {param: tuple(_tuplify(v) for v in values) for param, values in grid.items()}
            for algo, grid in grids.items()
        }
    zoo = ModelZoo(grids=grids)
    return WorkbenchSession.from_csv(
        load_dataset_text(doc),
        label_column=doc.get("label_column"),
        zoo=zoo,
        seed=int(doc.get("seed", 1)),
        n_folds=int(doc.get("n_folds", 5)),
        cache_dir=cache_dir,
        max_workers=max_workers,
    )


def apply_action(session: WorkbenchSession, step: dict, *, export_dir: Path | None = None) -> str:
    action = step.get("action")
    if action == "set_metric_config":
        cfg = {**session.config.to_dict()}
        for key in ("weights", "averaging"):
            if key in step:
                cfg[key] = {**cfg[key], **step[key]}
        for key in ("beta", "detailed_feature_search"):
            if key in step:
                cfg[key] = step[key]
        session.set_config(MetricConfig.from_dict(cfg))
        return "metric config updated"
    if action == "evaluate":
        run = session.evaluate(scope=step.get("scope", "all"))
        return f"evaluated {len(run.records)} models on {run.snapshot_id}"
    if action == "select_algorithms":
        session.select_algorithms(step["algorithms"])
        return f"selected {len(session.selection)} models from {len(step['algorithms'])} algorithms"
    if action == "select_models":
        session.select_models(step["model_ids"])
        return f"selected {len(session.selection)} models"
    if action == "select_filtered":
        matches = session.zoo.enumerate_pool(step["filters"])
        session.select_models([m.model_id for m in matches])
        return f"selected {len(session.selection)} models by filter"
    if action == "prune_selection":
        session.prune_selection(
            keep_top=step.get("keep_top"),
            keep_bottom=step.get("keep_bottom"),
            keep_top_fraction=step.get("keep_top_fraction"),
            min_combined=step.get("min_combined"),
        )
        return f"selection pruned to {len(session.selection)} models"
    if action == "remove_instances":
        indices = step.get("indices")
        if indices is None:
            sel = step["selector"]
            indices = session.find_instances(
                sel["feature"],
                sel["value"],
                class_name=sel.get("class_name"),
                top_difficulty=sel.get("top_difficulty"),
            )
            if not indices:
                raise WorkflowError(f"selector matched no instances: {sel}")
        snap = session.remove_instances(set(indices))
        return f"removed {len(indices)} instance(s) -> {snap.snapshot_id} ({snap.n_instances} rows)"
    if action == "merge_instances":
        snap = session.merge_instances(set(step["indices"]), step.get("mode", "mean"))
        return f"merged -> {snap.snapshot_id}"
    if action == "compose_instance":
        snap = session.compose_instance(set(step["indices"]), step.get("mode", "mean"))
        return f"composed -> {snap.snapshot_id}"
    if action == "restore_snapshot":
        snap = session.restore_snapshot(step["snapshot_id"])
        return f"restored {snap.snapshot_id}"
    if action == "set_masks_state":
        from .importance import FeatureMaskSet

        session.masks = FeatureMaskSet.from_dict(step["state"])
        return "masks replaced"
    if action == "set_masks":
        if "disable_features" in step:
            session.masks.disable_features(step["disable_features"])
        for name in step.get("enable_features", []):
            session.masks.set_global(name, True)
        for mid, entries in step.get("model_masks", {}).items():
            for feature, enabled in entries.items():
                session.masks.set_model(int(mid), feature, bool(enabled))
        kept = int(session.masks.global_mask.sum())
        return f"masks updated ({kept}/{len(session.masks.feature_names)} features globally enabled)"
    if action == "importance":
        for method in step["methods"]:
            session.compute_importance(method)
        return f"importance computed: {', '.join(step['methods'])}"
    if action == "project":
        payload = session.project(
            step["space"], method=step.get("method", "mds"), color_metric=step.get("color_metric")
        )
        return f"projected {step['space']} via {payload['method']}"
    if action == "build_stack":
        perf = session.build_active_stack(label=step.get("label"))
        return "active stack: " + " ".join(f"{k}={perf[k]:.6f}" for k in ("accuracy", "precision", "recall", "f1"))
    if action == "store_stack":
        record = session.store_active_stack(note=step.get("note", ""))
        return f"stored {record.stack_id} (parent {record.parent_stack_id or '-'}, {record.model_count} models)"
    if action == "activate_stack":
        record = session.activate_stack(step["stack_id"])
        return f"activated {record.stack_id}"
    if action == "export_stack":
        doc = session.export_stored_stack(step["stack_id"])
        path = step.get("path", f"{step['stack_id'].lower()}.json")
        target = (export_dir or Path.cwd()) / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(doc, indent=1))
        return f"exported {step['stack_id']} -> {target} ({len(doc['models'])} models)"
    raise WorkflowError(f"unknown workflow action {step.get('action')!r}")


def performance_table(session: WorkbenchSession) -> str:
    """Deterministic per-step 4-metric table with stored-stack annotations."""
    lines = [f"{'step':<6}{'label':<34}{'accuracy':>10}{'precision':>11}{'recall':>9}{'f1':>9}  stored"]
    for step in session.history.comparison_series()["steps"]:
        a = step["active"]
        stored = step["stored"]["stack_id"] if step["stored"] else "-"
        lines.append(
            f"{step['step_index']:<6}{step['label'][:33]:<34}"
            f"{a['accuracy']:>10.6f}{a['precision']:>11.6f}{a['recall']:>9.6f}{a['f1']:>9.6f}  {stored}"
        )
    return "\n".join(lines)


def run_workflow(
    doc: dict,
    *,
    cache_dir=None,
    max_workers=None,
    export_dir: Path | None = None,
    echo=None,
) -> tuple[WorkbenchSession, str]:
    """Execute every step; returns the session and the final performance table."""
    if "steps" not in doc or not isinstance(doc["steps"], list):
        raise WorkflowError("workflow needs a 'steps' array")
    session = build_session(doc, cache_dir=cache_dir, max_workers=max_workers)
    for i, step in enumerate(doc["steps"]):
        try:
            message = apply_action(session, step, export_dir=export_dir)
        except (SessionError, KeyError) as exc:
            raise WorkflowError(f"step {i} ({step.get('action')}) failed: {exc}") from exc
        if echo is not None:
            echo(f"[{i + 1:02d}/{len(doc['steps']):02d}] {message}")
    return session, performance_table(session)

"""Record HTTP API fixtures for the frontend contract tests.

Drives a real in-process service session over the bundled heart table with a
small grid, and dumps every payload the six panels consume into
frontend/tests/fixtures/.
"""

import json
import sys
import time
from pathlib import Path

from fastapi.testclient import TestClient

from stackbench.service import create_app

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

GRIDS = {
    "knn": {"n_neighbors": [5, 11], "weights": ["uniform"], "p": [2]},
    "svc": {"C": [1.0], "kernel": ["linear"]},
    "gaunb": {"var_smoothing": [1e-9]},
    "mlp": {"hidden_layer_sizes": [[20]], "alpha": [0.001], "activation": ["relu"]},
    "lr": {"C": [1.0], "class_weight": [None]},
    "lda": {"solver": ["svd"]},
    "qda": {"reg_param": [0.1]},
    "rf": {"n_estimators": [25], "max_depth": [5], "criterion": ["gini"]},
    "extrat": {"n_estimators": [25], "max_depth": [5], "criterion": ["gini"]},
    "adab": {"n_estimators": [25], "learning_rate": [0.5]},
    "gradb": {"n_estimators": [25], "learning_rate": [0.1], "max_depth": [2]},
}

PAPER_CONFIG = {
    "weights": {
        "accuracy": 100,
        "gmean": 0,
        "precision": 80,
        "recall": 100,
        "fbeta": 100,
        "mcc": 100,
        "roc_auc": 0,
        "log_loss": 100,
    },
    "averaging": {"precision": "micro", "recall": "micro", "fbeta": "micro", "roc_auc": "micro"},
    "beta": 2,
    "detailed_feature_search": True,
}


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{name}.json").write_text(json.dumps(payload, indent=1, sort_keys=True))
    print(f"recorded {name}.json")


def wait(client: TestClient, sid: str, job_id: str) -> dict:
    while True:
        status = client.get(f"/api/sessions/{sid}/jobs/{job_id}").json()
        if status["status"] in ("done", "failed"):
            assert status["status"] == "done", status
            return status
        time.sleep(0.05)


def main() -> None:
    client = TestClient(create_app(job_workers=2))
    created = client.post(
        "/api/sessions",
        json={"builtin": "heart", "label_column": "Diagnosis", "seed": 1, "n_folds": 5, "grids": GRIDS},
    ).json()
    sid = created["session_id"]
    created["session_id"] = "fixture"  # stable id for tests
    dump("create_session", created)

    client.put(f"/api/sessions/{sid}/metric-config", json=PAPER_CONFIG)
    dump("metric_config", client.get(f"/api/sessions/{sid}/metric-config").json())

    dump("algorithms", client.get(f"/api/sessions/{sid}/pool/algorithms").json())
    dump("models_knn", client.get(f"/api/sessions/{sid}/pool/models?algo_id=knn").json())

    client.put(
        f"/api/sessions/{sid}/selection",
        json={"algorithms": ["knn", "svc", "lr", "rf", "extrat", "gradb"]},
    )
    job = client.post(f"/api/sessions/{sid}/evaluate", json={"scope": "all"}).json()
    dump("job_running", client.get(f"/api/sessions/{sid}/jobs/{job['job_id']}").json())
    dump("job_done", wait(client, sid, job["job_id"]))

    dump("selection", client.get(f"/api/sessions/{sid}/selection").json())
    dump("distributions", client.get(f"/api/sessions/{sid}/pool/distributions").json())
    dump("per_class", client.get(f"/api/sessions/{sid}/pool/per-class").json())
    dump("coverage", client.get(f"/api/sessions/{sid}/pool/coverage").json())
    dump("masks", client.get(f"/api/sessions/{sid}/masks").json())
    dump("data_table", client.get(f"/api/sessions/{sid}/data/table").json())
    dump("difficulty", client.get(f"/api/sessions/{sid}/data/difficulty").json())

    # a second distributions payload under accuracy-only weights, so the
    # re-score contract test can observe the boxplots change
    accuracy_only = json.loads(json.dumps(PAPER_CONFIG))
    accuracy_only["weights"] = {m: (100 if m == "accuracy" else 0) for m in accuracy_only["weights"]}
    client.put(f"/api/sessions/{sid}/metric-config", json=accuracy_only)
    dump("distributions_accuracy_only", client.get(f"/api/sessions/{sid}/pool/distributions").json())
    client.put(f"/api/sessions/{sid}/metric-config", json=PAPER_CONFIG)

    for method in ("univariate", "permutation"):
        job = client.post(f"/api/sessions/{sid}/importance", json={"method": method}).json()
        wait(client, sid, job["job_id"])
        dump(f"importance_{method}", client.get(f"/api/sessions/{sid}/importance/{method}").json())
    dump(
        "importance_combined",
        client.get(f"/api/sessions/{sid}/importance/combined?methods=univariate,permutation").json(),
    )

    for space, method in (("data", "mds"), ("models", "mds"), ("predictions", "mds")):
        job = client.post(f"/api/sessions/{sid}/projections/{space}", json={"method": method}).json()
        wait(client, sid, job["job_id"])
        dump(f"projection_{space}", client.get(f"/api/sessions/{sid}/projections/{space}").json())
    dump(
        "projection_models_recolored",
        client.post(f"/api/sessions/{sid}/projections/models/recolor", json={"color_metric": "mcc"}).json(),
    )

    dump(
        "histograms",
        client.post(f"/api/sessions/{sid}/histograms", json={"selected_instances": list(range(40))}).json(),
    )

    dump("build", client.post(f"/api/sessions/{sid}/stack/build", json={"label": "Step 1: baseline"}).json())
    dump("store_s1", client.post(f"/api/sessions/{sid}/stack/store", json={"note": "baseline"}).json())
    client.post(f"/api/sessions/{sid}/wrangle", json={"op": "remove", "indices": [7], "mode": "mean"})
    job = client.post(f"/api/sessions/{sid}/evaluate", json={"scope": "all"}).json()
    wait(client, sid, job["job_id"])
    client.post(f"/api/sessions/{sid}/stack/build", json={"label": "Step 2: removed one instance"})
    dump("store_s2", client.post(f"/api/sessions/{sid}/stack/store", json={"note": "after removal"}).json())
    dump("wrangle_history", client.get(f"/api/sessions/{sid}/wrangle/history").json())
    dump("stacks", client.get(f"/api/sessions/{sid}/stacks").json())
    dump("comparison", client.get(f"/api/sessions/{sid}/comparison").json())

    # the post-activate wrangling view: S1 restores the original snapshot
    client.post(f"/api/sessions/{sid}/stack/activate", json={"stack_id": "S1"})
    dump("wrangle_history_after_activate", client.get(f"/api/sessions/{sid}/wrangle/history").json())
    dump("data_table_after_activate", client.get(f"/api/sessions/{sid}/data/table").json())
    dump("selection_after_activate", client.get(f"/api/sessions/{sid}/selection").json())
    print("all fixtures recorded")


if __name__ == "__main__":
    sys.exit(main())

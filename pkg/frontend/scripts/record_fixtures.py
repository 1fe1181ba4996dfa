#!/usr/bin/env python3
"""Record live API responses into test/fixtures/ for the dashboard's
contract tests. Runs the real service in-process with a pinned clock, so
re-recording is deterministic.

Usage: python frontend/scripts/record_fixtures.py
"""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from scr.api import create_app
from scr.store import Store
from scr.workflow import ChecklistKind, generic_checklist, instance_all_pass

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"

BOOK = {
    "name": "budget",
    "sheets": [{"name": "S1", "cells": {"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)"}}],
}
CHANGED = {
    "name": "budget",
    "sheets": [
        {
            "name": "S1",
            "cells": {"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)", "B3": "=A3*2", "C1": "9"},
        }
    ],
}


def save(name: str, payload) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / f"{name}.json").write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"recorded {name}.json")


def drive_to_pending(client: TestClient) -> str:
    client.post(
        "/entries",
        json={"name": "Budget Model", "owner": "alice", "classification": "critical", "workbook": BOOK},
    ).raise_for_status()
    client.post(
        "/entries/budget-model/reviews",
        json={
            "reviewer": "bob",
            "decision": "approve",
            "checklist": instance_all_pass(generic_checklist(ChecklistKind.IN_DEPTH)).to_json(),
        },
    ).raise_for_status()
    response = client.post(
        "/entries/budget-model/changes",
        json={"workbook": CHANGED, "author": "alice", "description": "double the total"},
    )
    response.raise_for_status()
    return response.json()["changeset"]["id"]


def change_checklist_all_pass() -> dict:
    return instance_all_pass(generic_checklist(ChecklistKind.CHANGE)).to_json()


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        # --- approve path ---------------------------------------------------
        store = Store.init(Path(tmp) / "approve")
        client = TestClient(create_app(store, at="2026-07-15T09:00:00Z"))
        client.headers["X-Actor"] = "carol"
        change_id = drive_to_pending(client)

        save("inventory", client.get("/inventory").json())
        save("entry_pending", client.get("/entries/budget-model").json())
        save("change", client.get(f"/entries/budget-model/changes/{change_id}").json())
        save("metrics", client.get("/entries/budget-model/metrics").json())
        save("audit", client.get("/entries/budget-model/audit").json())

        approve_request = {
            "reviewer": "carol",
            "decision": "approve",
            "checklist": change_checklist_all_pass(),
            "note": "",
        }
        save("review_approve_request", approve_request)
        response = client.post(
            "/entries/budget-model/reviews",
            json=approve_request,
            headers={"Idempotency-Key": "fixture-approve"},
        )
        response.raise_for_status()
        save("review_approve_response", response.json())
        review_index = response.json()["review"]
        save(
            "statement",
            client.get(f"/entries/budget-model/statement/{review_index}").json(),
        )
        save("entry_after_approve", client.get("/entries/budget-model").json())

        # --- decline path ---------------------------------------------------
        store = Store.init(Path(tmp) / "decline")
        client = TestClient(create_app(store, at="2026-07-15T09:00:00Z"))
        client.headers["X-Actor"] = "carol"
        drive_to_pending(client)
        decline_request = {
            "reviewer": "carol",
            "decision": "decline",
            "checklist": change_checklist_all_pass(),
            "note": "run the tooling first",
        }
        save("review_decline_request", decline_request)
        response = client.post(
            "/entries/budget-model/reviews",
            json=decline_request,
            headers={"Idempotency-Key": "fixture-decline"},
        )
        response.raise_for_status()
        save("review_decline_response", response.json())
        save("entry_after_decline", client.get("/entries/budget-model").json())
        evaluation = client.post("/entries/budget-model/evaluations", json={})
        evaluation.raise_for_status()
        save("evaluation_response", evaluation.json())

        # --- error shape ------------------------------------------------------
        save("error_not_found", client.get("/entries/ghost").json())
    return 0


if __name__ == "__main__":
    sys.exit(main())

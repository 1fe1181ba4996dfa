import pytest
from fastapi.testclient import TestClient

from conftest import one_sheet
from scr.api import create_app
from scr.metrics import metrics_report
from scr.workflow import (
    ChecklistKind,
    Classification,
    WorkflowEngine,
    generic_checklist,
    instance_all_pass,
)

BOOK = {
    "name": "budget",
    "sheets": [{"name": "S1", "cells": {"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)"}}],
}
CHANGED = {
    "name": "budget",
    "sheets": [
        {"name": "S1", "cells": {"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)", "B3": "=A3*2"}}
    ],
}


@pytest.fixture
def client(store):
    app = create_app(store, at="2026-05-01T08:00:00Z")
    return TestClient(app, headers={"X-Actor": "alice"})


def all_pass_checklist(kind: ChecklistKind) -> dict:
    return instance_all_pass(generic_checklist(kind)).to_json()


def register(client, name="Budget Model"):
    response = client.post(
        "/entries",
        json={"name": name, "owner": "alice", "classification": "critical", "workbook": BOOK},
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_empty_inventory(client):
    response = client.get("/inventory")
    assert response.status_code == 200
    assert response.json() == []


def test_register_and_detail(client):
    entry = register(client)
    assert entry["state"] == "in_depth_review_pending"
    detail = client.get(f"/entries/{entry['id']}").json()
    assert detail["name"] == "Budget Model"
    assert detail["checklist_template"]["kind"] == "in_depth"
    assert len(detail["checklist_template"]["items"]) >= 8


def test_unknown_entry_404(client):
    response = client.get("/entries/ghost")
    assert response.status_code == 404
    body = response.json()
    assert body["error"]["code"] == "not_found"
    assert "message" in body["error"]


def test_review_independence_rejected(client):
    entry = register(client)
    response = client.post(
        f"/entries/{entry['id']}/reviews",
        json={
            "reviewer": "alice",  # owner registered it
            "decision": "approve",
            "checklist": all_pass_checklist(ChecklistKind.IN_DEPTH),
        },
    )
    assert response.status_code == 409
    assert response.json()["error"]["code"] == "validation_error"


def test_review_flow_and_statement_bytes(client, store):
    entry = register(client)
    response = client.post(
        f"/entries/{entry['id']}/reviews",
        json={
            "reviewer": "bob",
            "decision": "approve",
            "checklist": all_pass_checklist(ChecklistKind.IN_DEPTH),
        },
    )
    assert response.status_code == 200
    assert response.json()["state"] == "in_use"
    review_index = response.json()["review"]

    over_api = client.get(f"/entries/{entry['id']}/statement/{review_index}").json()
    on_disk = store.get_entry(entry["id"])["reviews"][review_index]["statement"]
    assert over_api["statement"] == on_disk
    assert "I attest to have reviewed the spreadsheet changes" in over_api["statement"]


def test_idempotent_review_replay(client, store):
    entry = register(client)
    payload = {
        "reviewer": "bob",
        "decision": "approve",
        "checklist": all_pass_checklist(ChecklistKind.IN_DEPTH),
    }
    first = client.post(
        f"/entries/{entry['id']}/reviews", json=payload, headers={"Idempotency-Key": "k-1"}
    )
    assert first.status_code == 200
    events_after_first = len(store.read_events(entry["id"]))
    replayed = client.post(
        f"/entries/{entry['id']}/reviews", json=payload, headers={"Idempotency-Key": "k-1"}
    )
    assert replayed.status_code == 200
    assert replayed.json() == first.json()
    assert len(store.read_events(entry["id"])) == events_after_first  # no duplicates
    # without the key, the same POST is a state error now (already in use)
    repeat = client.post(f"/entries/{entry['id']}/reviews", json=payload)
    assert repeat.status_code == 409


def test_submit_and_ranked_change(client):
    entry = register(client)
    client.post(
        f"/entries/{entry['id']}/reviews",
        json={
            "reviewer": "bob",
            "decision": "approve",
            "checklist": all_pass_checklist(ChecklistKind.IN_DEPTH),
        },
    )
    response = client.post(
        f"/entries/{entry['id']}/changes",
        json={"workbook": CHANGED, "author": "alice", "description": "double it"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["classification"] == "structural"
    assert body["state"] == "change_review_pending"
    change_id = body["changeset"]["id"]

    detail = client.get(f"/entries/{entry['id']}/changes/{change_id}").json()
    assert detail["changeset"]["id"] == change_id
    scores = [r["score"] for r in detail["ranked"]]
    assert scores == sorted(scores, reverse=True)
    assert detail["ranked"][0]["delta"]["address"] == "S1!B3"


def test_metrics_endpoint_matches_module(client, store):
    entry = register(client)
    over_api = client.get(f"/entries/{entry['id']}/metrics").json()
    record = store.get_entry(entry["id"])
    direct = metrics_report(store.get_snapshot(record["current"])).to_json()
    assert over_api == direct


def test_evaluation_endpoint(client):
    entry = register(client)
    client.post(
        f"/entries/{entry['id']}/reviews",
        json={
            "reviewer": "bob",
            "decision": "decline",
            "checklist": all_pass_checklist(ChecklistKind.IN_DEPTH),
            "note": "wants tooling",
        },
    )
    response = client.post(f"/entries/{entry['id']}/evaluations", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["report"]["recommendation"] == "approve"
    assert body["state"] == "in_use"


def test_audit_endpoint_pagination(client):
    entry = register(client)
    events = client.get(f"/entries/{entry['id']}/audit").json()
    assert [e["sequence"] for e in events] == [1, 2, 3]
    page = client.get(f"/entries/{entry['id']}/audit", params={"limit": 1, "offset": 1}).json()
    assert [e["sequence"] for e in page] == [2]


def test_locked_store_yields_503(client, store):
    with store.lock():
        response = client.post(
            "/entries",
            json={
                "name": "Blocked",
                "owner": "alice",
                "classification": "critical",
                "workbook": BOOK,
            },
        )
    assert response.status_code == 503
    assert response.json()["error"]["code"] == "store_locked"


def test_malformed_workbook_400(client):
    response = client.post(
        "/entries",
        json={
            "name": "Broken",
            "owner": "alice",
            "classification": "critical",
            "workbook": {"name": "x", "sheets": [{"name": "S", "cells": {"A1": "=1+"}}]},
        },
    )
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "bad_request"

"""HTTP/JSON facade over the store and workflow.

Every endpoint delegates to the corresponding module operation; no domain
logic lives here. Actor identity arrives in the ``X-Actor`` header (there
is no authentication by design). Mutations may carry an
``Idempotency-Key`` header: a repeated key returns the originally recorded
response without re-executing, so retries never duplicate audit events.

Error bodies are ``{"error": {"code", "message"}}``; codes mirror the CLI
exit-code classes (validation and state problems are 4xx "domain refusals",
integrity problems 500, a held store lock 503).
"""

import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import diffs, risk
from .errors import (
    AnalysisError,
    ConfigError,
    FormulaParseError,
    IngestionError,
    IntegrityError,
    NotFoundError,
    ScrError,
    StalenessError,
    StateError,
    StoreLockError,
    WorkflowValidationError,
)
from .evaluator import rule_from_json
from .grid import parse_workbook
from .jsonutil import canonical_json, load_json
from .metrics import metrics_report
from .store import Store, validate_timestamp
from .workflow import (
    ChecklistInstance,
    ChecklistKind,
    Classification,
    Decision,
    ReviewRecord,
    SpreadsheetState,
    WorkflowEngine,
)

_ERROR_MAP = (
    (NotFoundError, 404, "not_found"),
    (StalenessError, 409, "staleness_error"),
    (StateError, 409, "state_error"),
    (WorkflowValidationError, 409, "validation_error"),
    (IngestionError, 400, "bad_request"),
    (FormulaParseError, 400, "bad_request"),
    (AnalysisError, 400, "bad_request"),
    (ConfigError, 400, "bad_request"),
    (StoreLockError, 503, "store_locked"),
    (IntegrityError, 500, "integrity_error"),
)


def _error_response(exc: ScrError) -> JSONResponse:
    for klass, status, code in _ERROR_MAP:
        if isinstance(exc, klass):
            return JSONResponse(
                {"error": {"code": code, "message": str(exc)}}, status_code=status
            )
    return JSONResponse(
        {"error": {"code": "internal", "message": str(exc)}}, status_code=500
    )


def _workbook_from_body(obj) -> str:
    if isinstance(obj, str):
        return obj
    return canonical_json(obj)


def create_app(store: Store, at: str | None = None, dashboard_dir: str | None = None) -> FastAPI:
    """Build the service around one store. ``at`` pins the clock for
    reproducible end-to-end runs."""
    clock = None
    if at:
        fixed = validate_timestamp(at)
        clock = lambda: fixed  # noqa: E731
    engine = WorkflowEngine(store, clock=clock)
    app = FastAPI(title="scr", docs_url=None, redoc_url=None)

    idem_dir = store.root / "config" / "idempotency"

    def idem_lookup(key: str) -> dict | None:
        path = idem_dir / (hashlib.sha256(key.encode()).hexdigest() + ".json")
        if path.exists():
            return load_json(path.read_text(encoding="utf-8"))
        return None

    def idem_record(key: str, status: int, body) -> None:
        idem_dir.mkdir(parents=True, exist_ok=True)
        path = idem_dir / (hashlib.sha256(key.encode()).hexdigest() + ".json")
        path.write_text(canonical_json({"status": status, "body": body}), encoding="utf-8")

    def mutate(request: Request, func) -> JSONResponse:
        """Run a mutation under the store lock with idempotency-key replay."""
        key = request.headers.get("Idempotency-Key")
        if key:
            recorded = idem_lookup(key)
            if recorded is not None:
                return JSONResponse(recorded["body"], status_code=recorded["status"])
        try:
            with store.lock():
                body = func()
            status = 200
        except ScrError as exc:
            response = _error_response(exc)
            if key and response.status_code < 500:
                idem_record(key, response.status_code, json.loads(response.body))
            return response
        if key:
            idem_record(key, status, body)
        return JSONResponse(body, status_code=status)

    def actor_of(request: Request) -> str:
        return request.headers.get("X-Actor", "anonymous")

    @app.exception_handler(ScrError)
    async def scr_error_handler(request: Request, exc: ScrError):
        return _error_response(exc)

    # -- reads ---------------------------------------------------------------

    @app.get("/inventory")
    def inventory(limit: int = 1000, offset: int = 0):
        entries = [e.to_json() for e in engine.list_entries()]
        return entries[offset : offset + limit]

    @app.get("/entries/{entry_id}")
    def entry_detail(entry_id: str):
        entry = engine.get_entry(entry_id)
        detail = entry.to_json()
        if entry.state in (
            SpreadsheetState.IN_DEPTH_REVIEW_PENDING,
            SpreadsheetState.CHANGE_REVIEW_PENDING,
        ):
            kind = (
                ChecklistKind.IN_DEPTH
                if entry.state is SpreadsheetState.IN_DEPTH_REVIEW_PENDING
                else ChecklistKind.CHANGE
            )
            detail["checklist_template"] = engine.checklist_template(kind).to_json()
        return detail

    @app.get("/entries/{entry_id}/audit")
    def entry_audit(entry_id: str, limit: int = 1000, offset: int = 0):
        events = [e.to_json() for e in engine.audit_log(entry_id)]
        return events[offset : offset + limit]

    @app.get("/entries/{entry_id}/metrics")
    def entry_metrics(entry_id: str):
        entry = engine.get_entry(entry_id)
        workbook = store.get_snapshot(engine.submitted_snapshot(entry))
        return metrics_report(workbook).to_json()

    @app.get("/entries/{entry_id}/changes/{change_id}")
    def change_detail(entry_id: str, change_id: str):
        engine.get_entry(entry_id)
        cs = store.get_change(change_id)
        before = store.get_snapshot(cs.base)
        after = store.get_snapshot(cs.result)
        ranked = diffs.rank_by_risk(cs, before, after)
        return {
            "changeset": cs.to_json(),
            "classification": diffs.classify(cs),
            "ranked": [r.to_json() for r in ranked],
        }

    @app.get("/entries/{entry_id}/statement/{review_index}")
    def statement(entry_id: str, review_index: int):
        entry = engine.get_entry(entry_id)
        if not 0 <= review_index < len(entry.reviews):
            raise NotFoundError(f"entry {entry_id!r} has no review #{review_index}")
        record = entry.reviews[review_index]
        if not record.get("statement"):
            raise NotFoundError(f"review #{review_index} carries no approval statement")
        return {
            "entry": entry_id,
            "review": review_index,
            "statement": record["statement"],
        }

    # -- mutations -----------------------------------------------------------

    @app.post("/entries")
    async def register(request: Request):
        body = await request.json()

        def run():
            workbook = parse_workbook(_workbook_from_body(body["workbook"]))
            rules = tuple(rule_from_json(r) for r in body.get("rules", ()))
            if body.get("redevelops"):
                entry = engine.register_redevelopment(
                    body["redevelops"],
                    workbook,
                    body["name"],
                    owner=body.get("owner"),
                    classification=Classification(body["classification"])
                    if body.get("classification")
                    else None,
                    rules=rules or None,
                    actor=actor_of(request),
                )
            else:
                entry = engine.register(
                    workbook,
                    body["name"],
                    body.get("owner", actor_of(request)),
                    Classification(body["classification"]),
                    rules=rules,
                    actor=actor_of(request),
                )
            return entry.to_json()

        return mutate(request, run)

    @app.post("/entries/{entry_id}/changes")
    async def submit(entry_id: str, request: Request):
        body = await request.json()

        def run():
            workbook = parse_workbook(_workbook_from_body(body["workbook"]))
            cs = engine.submit_change(
                entry_id,
                workbook,
                body.get("author", actor_of(request)),
                body.get("description", ""),
            )
            return {
                "changeset": cs.to_json(),
                "classification": diffs.classify(cs),
                "state": engine.get_entry(entry_id).state.value,
            }

        return mutate(request, run)

    @app.post("/entries/{entry_id}/reviews")
    async def review(entry_id: str, request: Request):
        body = await request.json()

        def run():
            checklist = ChecklistInstance.from_json(body["checklist"])
            record = ReviewRecord(
                entry=entry_id,
                reviewer=body.get("reviewer", actor_of(request)),
                decision=Decision(body["decision"]),
                checklist=checklist,
                change=body.get("change"),
                note=body.get("note", ""),
            )
            state = engine.record_review(entry_id, record)
            entry = engine.get_entry(entry_id)
            return {
                "state": state.value,
                "review": len(entry.reviews) - 1,
                "record": entry.reviews[-1],
            }

        return mutate(request, run)

    @app.post("/entries/{entry_id}/evaluations")
    async def evaluate(entry_id: str, request: Request):
        body = await request.json()

        def run():
            if body.get("report"):
                report = risk.EvaluationReport.from_json(body["report"])
            else:
                entry = engine.get_entry(entry_id)
                workbook = store.get_snapshot(engine.submitted_snapshot(entry))
                profile_obj = store.get_config("profile")
                profile = (
                    risk.ThresholdProfile.from_json(profile_obj)
                    if profile_obj
                    else risk.DEFAULT_PROFILE
                )
                report = risk.evaluate_workbook(metrics_report(workbook), profile)
            state = engine.record_evaluation(entry_id, report, actor_of(request))
            return {"state": state.value, "report": report.to_json()}

        return mutate(request, run)

    if dashboard_dir and Path(dashboard_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=dashboard_dir, html=True), name="ui")

    @app.get("/")
    def index():
        return Response(
            canonical_json({"service": "scr", "inventory": "/inventory"}),
            media_type="application/json",
        )

    return app

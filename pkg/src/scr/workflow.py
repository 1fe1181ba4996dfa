"""Governed spreadsheet lifecycle: inventory, reviews, evaluations, audit trail.

State machine (authoritative):

    Registered            --promote-->                    InDepthReviewPending
    InDepthReviewPending  --review approve-->             InUse
    InDepthReviewPending  --review decline-->             ToolEvalPending
    InUse                 --structural submit-->          ChangeReviewPending
    InUse                 --non-structural submit-->      InUse
    ChangeReviewPending   --review approve-->             InUse
    ChangeReviewPending   --review decline-->             ToolEvalPending
    ToolEvalPending       --evaluation approve-->         InUse
    ToolEvalPending       --evaluation restructure-->     RestructureRequired
    ToolEvalPending       --evaluation redevelop-->       RedevelopRequired
    RestructureRequired   --submit (any)-->               ToolEvalPending
    RedevelopRequired     --register_redevelopment-->     Retired

Every other (state, operation) pair is a state error, never a silent no-op.
Entries classified Throwaway rest in Registered (recorded, not reviewed)
until promoted with a real classification.

Only Critical/Operational entries enter review; the reviewer must differ
from the change author (the owner, for in-depth reviews). Approval renders
a formal statement from a byte-exact template; non-structural submissions
advance the snapshot without review but are still recorded in the audit
trail. The audit trail is append-only with strictly increasing sequence
numbers per entry; replaying its state-change events reconstructs the
entry's state history exactly.

Callers must serialize mutating operations through ``store.lock()``.
"""

import re
from dataclasses import dataclass, replace
from enum import Enum

from .diffs import NON_STRUCTURAL, STRUCTURAL, ChangeSet, classify, diff
from .errors import (
    NotFoundError,
    StalenessError,
    StateError,
    WorkflowValidationError,
)
from .evaluator import ExpectedValueRule, check_rules, rule_from_json
from .grid import Workbook, snapshot_id
from .metrics import detect_blocks, inconsistent_cells
from .risk import EvaluationReport, Recommendation
from .store import AuditEvent, Store, utc_now_iso


class Classification(Enum):
    CRITICAL = "critical"
    OPERATIONAL = "operational"
    THROWAWAY = "throwaway"


class SpreadsheetState(Enum):
    REGISTERED = "registered"
    IN_DEPTH_REVIEW_PENDING = "in_depth_review_pending"
    IN_USE = "in_use"
    CHANGE_REVIEW_PENDING = "change_review_pending"
    TOOL_EVAL_PENDING = "tool_eval_pending"
    RESTRUCTURE_REQUIRED = "restructure_required"
    REDEVELOP_REQUIRED = "redevelop_required"
    RETIRED = "retired"


class Decision(Enum):
    APPROVE = "approve"
    DECLINE = "decline"


#: Operations the state machine recognizes, as used in the transition table.
OPERATIONS = (
    "promote",
    "submit_structural",
    "submit_non_structural",
    "review_approve",
    "review_decline",
    "eval_approve",
    "eval_restructure",
    "eval_redevelop",
    "register_redevelopment",
)

_S = SpreadsheetState
TRANSITIONS = {
    (_S.REGISTERED, "promote"): _S.IN_DEPTH_REVIEW_PENDING,
    (_S.IN_DEPTH_REVIEW_PENDING, "review_approve"): _S.IN_USE,
    (_S.IN_DEPTH_REVIEW_PENDING, "review_decline"): _S.TOOL_EVAL_PENDING,
    (_S.IN_USE, "submit_structural"): _S.CHANGE_REVIEW_PENDING,
    (_S.IN_USE, "submit_non_structural"): _S.IN_USE,
    (_S.CHANGE_REVIEW_PENDING, "review_approve"): _S.IN_USE,
    (_S.CHANGE_REVIEW_PENDING, "review_decline"): _S.TOOL_EVAL_PENDING,
    (_S.TOOL_EVAL_PENDING, "eval_approve"): _S.IN_USE,
    (_S.TOOL_EVAL_PENDING, "eval_restructure"): _S.RESTRUCTURE_REQUIRED,
    (_S.TOOL_EVAL_PENDING, "eval_redevelop"): _S.REDEVELOP_REQUIRED,
    (_S.RESTRUCTURE_REQUIRED, "submit_structural"): _S.TOOL_EVAL_PENDING,
    (_S.RESTRUCTURE_REQUIRED, "submit_non_structural"): _S.TOOL_EVAL_PENDING,
    (_S.REDEVELOP_REQUIRED, "register_redevelopment"): _S.RETIRED,
}


def next_state(state: SpreadsheetState, operation: str) -> SpreadsheetState:
    if operation not in OPERATIONS:
        raise WorkflowValidationError(f"unknown workflow operation {operation!r}")
    try:
        return TRANSITIONS[(state, operation)]
    except KeyError:
        raise StateError(
            f"operation {operation!r} is not permitted in state {state.value!r}"
        ) from None


# ---------------------------------------------------------------------------
# Checklists
# ---------------------------------------------------------------------------


class ChecklistKind(Enum):
    IN_DEPTH = "in_depth"
    CHANGE = "change"


@dataclass(frozen=True)
class ChecklistItem:
    id: str
    title: str
    guidance: str
    automatable: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "guidance": self.guidance,
            "automatable": self.automatable,
        }


@dataclass(frozen=True)
class ChecklistTemplate:
    kind: ChecklistKind
    items: tuple

    def item_ids(self) -> list:
        return [item.id for item in self.items]

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "items": [i.to_json() for i in self.items]}


_GENERIC_CONTROLS = (
    ChecklistItem(
        "version-management",
        "Version management",
        "Every revision of the workbook is retained and retrievable on demand.",
    ),
    ChecklistItem(
        "change-management",
        "Change management",
        "Author, description, and date are recorded for each change under review.",
    ),
    ChecklistItem(
        "access-restrictions",
        "Access restrictions",
        "Only people who need the workbook can reach it, with viewing and editing separated.",
    ),
    ChecklistItem(
        "input-restrictions",
        "Input restrictions",
        "Editable areas are confined so logic and constants cannot be overwritten by entry.",
    ),
    ChecklistItem(
        "backup-procedures",
        "Backup procedures",
        "A backup schedule proportional to the workbook's use and change rate is in effect.",
    ),
    ChecklistItem(
        "archiving-procedures",
        "Archiving procedures",
        "Versions and data that audits may require are archived and locatable.",
    ),
    ChecklistItem(
        "separation-of-concerns",
        "Separation of concerns",
        "Inputs, computations, and outputs occupy distinct areas of the workbook.",
        automatable=True,
    ),
    ChecklistItem(
        "expected-values",
        "Expected values",
        "Declared assertions on computed values (ranges, sums, signs) all hold.",
        automatable=True,
    ),
)

_CHANGE_CONTROL_IDS = (
    "change-management",
    "input-restrictions",
    "separation-of-concerns",
    "expected-values",
)


def generic_checklist(kind: ChecklistKind, extra_items: tuple = ()) -> ChecklistTemplate:
    """The built-in template for a review kind, plus organization items."""
    if kind is ChecklistKind.IN_DEPTH:
        items = _GENERIC_CONTROLS
    else:
        by_id = {item.id: item for item in _GENERIC_CONTROLS}
        items = tuple(
            replace(by_id[i], guidance=by_id[i].guidance + " (scoped to the changed areas)")
            for i in _CHANGE_CONTROL_IDS
        )
    return ChecklistTemplate(kind=kind, items=items + tuple(extra_items))


@dataclass(frozen=True)
class ChecklistItemResult:
    id: str
    status: str  # "pass" | "fail" | "na"
    note: str = ""
    machine: dict | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "status": self.status, "note": self.note, "machine": self.machine}


@dataclass(frozen=True)
class ChecklistInstance:
    kind: ChecklistKind
    items: tuple

    def failures(self) -> list:
        return [item for item in self.items if item.status == "fail"]

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "items": [i.to_json() for i in self.items]}

    @classmethod
    def from_json(cls, obj: dict) -> "ChecklistInstance":
        return cls(
            kind=ChecklistKind(obj["kind"]),
            items=tuple(
                ChecklistItemResult(
                    id=i["id"],
                    status=i["status"],
                    note=i.get("note", ""),
                    machine=i.get("machine"),
                )
                for i in obj["items"]
            ),
        )


def instance_all_pass(template: ChecklistTemplate, machine: dict | None = None) -> ChecklistInstance:
    machine = machine or {}
    return ChecklistInstance(
        kind=template.kind,
        items=tuple(
            ChecklistItemResult(id=item.id, status="pass", machine=machine.get(item.id))
            for item in template.items
        ),
    )


def validate_checklist(instance: ChecklistInstance, template: ChecklistTemplate) -> None:
    wanted = template.item_ids()
    got = [item.id for item in instance.items]
    if sorted(wanted) != sorted(got):
        missing = sorted(set(wanted) - set(got))
        extra = sorted(set(got) - set(wanted))
        raise WorkflowValidationError(
            f"checklist does not cover the template (missing {missing}, unexpected {extra})"
        )
    bad = [item.id for item in instance.items if item.status not in ("pass", "fail", "na")]
    if bad:
        raise WorkflowValidationError(f"checklist items with invalid status: {bad}")


def machine_checks(workbook: Workbook, rules: tuple) -> dict:
    """Run the automatable controls; results attach to checklist items."""
    violations = check_rules(workbook, list(rules))
    blocks = detect_blocks(workbook)
    mixed = inconsistent_cells(workbook, blocks)
    return {
        "expected-values": {
            "status": "pass" if not violations else "fail",
            "detail": f"{len(violations)} rule violation(s)",
            "violations": [v.to_json() for v in violations],
        },
        "separation-of-concerns": {
            "status": "pass" if not mixed else "fail",
            "detail": f"{len(mixed)} cell(s) mixing data and formulas in their block",
            "cells": sorted(a.qualified() for a in mixed),
        },
    }


# ---------------------------------------------------------------------------
# Approval statement
# ---------------------------------------------------------------------------

ATTESTATION_SENTENCE = (
    "I attest to have reviewed the spreadsheet changes listed above against "
    "the defined spreadsheet controls and found no nonconformities."
)
RISK_SENTENCE = (
    "To the best of my knowledge the adoption of these changes does not "
    "introduce additional operational risk."
)


def render_statement(changes: list, reviewer: str, date: str) -> str:
    """Byte-exact approval statement; same inputs always yield the same bytes."""
    if not changes:
        raise WorkflowValidationError("a change review statement needs at least one change line")
    bullets = "".join(f"- {line}\n" for line in changes)
    return (
        "Changes under review:\n"
        f"{bullets}"
        "\n"
        f"{ATTESTATION_SENTENCE}\n"
        "\n"
        f"{RISK_SENTENCE}\n"
        "\n"
        f"Reviewer: {reviewer}\n"
        f"Date: {date}\n"
    )


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReviewRecord:
    entry: str
    reviewer: str
    decision: Decision
    checklist: ChecklistInstance
    change: str | None = None  # change set id; absent for in-depth reviews
    note: str = ""
    statement: str | None = None
    timestamp: str | None = None

    def to_json(self) -> dict:
        return {
            "entry": self.entry,
            "change": self.change,
            "reviewer": self.reviewer,
            "decision": self.decision.value,
            "checklist": self.checklist.to_json(),
            "note": self.note,
            "statement": self.statement,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReviewRecord":
        return cls(
            entry=obj["entry"],
            change=obj.get("change"),
            reviewer=obj["reviewer"],
            decision=Decision(obj["decision"]),
            checklist=ChecklistInstance.from_json(obj["checklist"]),
            note=obj.get("note", ""),
            statement=obj.get("statement"),
            timestamp=obj.get("timestamp"),
        )


@dataclass(frozen=True)
class InventoryEntry:
    id: str
    name: str
    owner: str
    classification: Classification
    state: SpreadsheetState
    current: str  # snapshot digest in force
    pending: str | None  # submitted but not yet adopted snapshot digest
    pending_change: str | None  # change set id awaiting review/evaluation
    rules: tuple
    reviews: tuple  # ReviewRecord JSON dicts, oldest first
    evaluations: tuple  # EvaluationReport JSON dicts, oldest first
    links: dict
    created: str
    updated: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "owner": self.owner,
            "classification": self.classification.value,
            "state": self.state.value,
            "current": self.current,
            "pending": self.pending,
            "pending_change": self.pending_change,
            "rules": [r.to_json() for r in self.rules],
            "reviews": list(self.reviews),
            "evaluations": list(self.evaluations),
            "links": dict(self.links),
            "created": self.created,
            "updated": self.updated,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InventoryEntry":
        return cls(
            id=obj["id"],
            name=obj["name"],
            owner=obj["owner"],
            classification=Classification(obj["classification"]),
            state=SpreadsheetState(obj["state"]),
            current=obj["current"],
            pending=obj.get("pending"),
            pending_change=obj.get("pending_change"),
            rules=tuple(rule_from_json(r) for r in obj.get("rules", ())),
            reviews=tuple(obj.get("reviews", ())),
            evaluations=tuple(obj.get("evaluations", ())),
            links=dict(obj.get("links", {})),
            created=obj["created"],
            updated=obj["updated"],
        )


def entry_id_for(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    if not slug:
        raise WorkflowValidationError(f"cannot derive an entry id from name {name!r}")
    return slug


def state_history(events: list) -> list:
    """The entry's state sequence as recorded by state-change audit events."""
    return [
        SpreadsheetState(e.payload["to"]) for e in events if e.kind == "state-change"
    ]


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class WorkflowEngine:
    """Workflow operations over a store. ``clock`` is injectable for
    reproducible runs and must return ISO UTC second-precision strings."""

    def __init__(self, store: Store, clock=None):
        self.store = store
        self.clock = clock or utc_now_iso

    # -- helpers ------------------------------------------------------------

    def get_entry(self, entry_id: str) -> InventoryEntry:
        return InventoryEntry.from_json(self.store.get_entry(entry_id))

    def list_entries(self) -> list:
        return [InventoryEntry.from_json(obj) for obj in self.store.list_entries()]

    def _append(
        self, entry_id: str, kind: str, actor: str, payload: dict, when: str
    ) -> None:
        self.store.append_event(
            AuditEvent(
                sequence=self.store.last_sequence(entry_id) + 1,
                entry=entry_id,
                kind=kind,
                actor=actor,
                timestamp=when,
                payload=payload,
            )
        )

    def _save(self, entry: InventoryEntry, when: str) -> InventoryEntry:
        entry = replace(entry, updated=when)
        self.store.put_entry(entry.to_json())
        return entry

    def checklist_template(self, kind: ChecklistKind) -> ChecklistTemplate:
        config = self.store.get_config("checklists") or {}
        extras = tuple(
            ChecklistItem(
                id=i["id"],
                title=i["title"],
                guidance=i.get("guidance", ""),
                automatable=bool(i.get("automatable", False)),
            )
            for i in config.get(kind.value, ())
        )
        return generic_checklist(kind, extras)

    def submitted_snapshot(self, entry: InventoryEntry) -> str:
        """The snapshot under consideration: pending if any, else current."""
        return entry.pending or entry.current

    # -- operations ---------------------------------------------------------

    def register(
        self,
        workbook: Workbook,
        name: str,
        owner: str,
        classification: Classification,
        rules: tuple = (),
        actor: str | None = None,
        links: dict | None = None,
    ) -> InventoryEntry:
        actor = actor or owner
        entry_id = entry_id_for(name)
        if self.store.entry_exists(entry_id):
            raise WorkflowValidationError(
                f"an entry with id {entry_id!r} already exists; names must be unique"
            )
        if any(record["name"] == name for record in self.store.list_entries()):
            raise WorkflowValidationError(f"an entry named {name!r} already exists")
        when = self.clock()
        sid = self.store.put_snapshot(workbook)
        state = (
            SpreadsheetState.REGISTERED
            if classification is Classification.THROWAWAY
            else SpreadsheetState.IN_DEPTH_REVIEW_PENDING
        )
        entry = InventoryEntry(
            id=entry_id,
            name=name,
            owner=owner,
            classification=classification,
            state=state,
            current=sid.hash,
            pending=None,
            pending_change=None,
            rules=tuple(rules),
            reviews=(),
            evaluations=(),
            links=dict(links or {}),
            created=when,
            updated=when,
        )
        self.store.put_entry(entry.to_json())
        registered_payload = {
            "name": name,
            "owner": owner,
            "classification": classification.value,
        }
        registered_payload.update(entry.links)
        self._append(entry_id, "registered", actor, registered_payload, when)
        self._append(entry_id, "snapshot", actor, {"snapshot": sid.hash}, when)
        self._append(
            entry_id, "state-change", actor, {"from": None, "to": state.value}, when
        )
        return entry

    def promote(
        self, entry_id: str, classification: Classification, actor: str
    ) -> InventoryEntry:
        entry = self.get_entry(entry_id)
        new_state = next_state(entry.state, "promote")
        if classification is Classification.THROWAWAY:
            raise WorkflowValidationError("promotion requires a reviewed classification")
        when = self.clock()
        old_state = entry.state
        entry = replace(entry, state=new_state, classification=classification)
        entry = self._save(entry, when)
        self._append(
            entry_id,
            "state-change",
            actor,
            {
                "from": old_state.value,
                "to": new_state.value,
                "classification": classification.value,
            },
            when,
        )
        return entry

    def submit_change(
        self, entry_id: str, workbook: Workbook, author: str, description: str
    ) -> ChangeSet:
        entry = self.get_entry(entry_id)
        if entry.state not in (
            SpreadsheetState.IN_USE,
            SpreadsheetState.RESTRUCTURE_REQUIRED,
        ):
            raise StateError(
                f"submissions are not accepted in state {entry.state.value!r}"
            )
        base_hash = self.submitted_snapshot(entry)
        if snapshot_id(workbook).hash == base_hash:
            raise WorkflowValidationError(
                "submitted workbook is identical to the snapshot on record"
            )
        when = self.clock()
        base = self.store.get_snapshot(base_hash)
        cs = diff(base, workbook, author, when, description)
        structural = classify(cs) == STRUCTURAL
        operation = "submit_structural" if structural else "submit_non_structural"
        new_state = next_state(entry.state, operation)
        self.store.put_snapshot(workbook)
        self.store.put_change(cs)
        old_state = entry.state
        payload = {
            "change": cs.id,
            "snapshot": cs.result.hash,
            "base": cs.base.hash,
            "classification": STRUCTURAL if structural else NON_STRUCTURAL,
            "description": description,
        }
        if new_state is old_state:
            # Unreviewed value edit: the snapshot advances in place.
            entry = replace(entry, current=cs.result.hash)
            payload["note"] = "value-only edit adopted without review"
            entry = self._save(entry, when)
            self._append(entry_id, "change-submitted", author, payload, when)
        else:
            entry = replace(
                entry, state=new_state, pending=cs.result.hash, pending_change=cs.id
            )
            entry = self._save(entry, when)
            self._append(entry_id, "change-submitted", author, payload, when)
            self._append(
                entry_id,
                "state-change",
                author,
                {"from": old_state.value, "to": new_state.value},
                when,
            )
        return cs

    def record_review(self, entry_id: str, review: ReviewRecord) -> SpreadsheetState:
        entry = self.get_entry(entry_id)
        operation = (
            "review_approve" if review.decision is Decision.APPROVE else "review_decline"
        )
        new_state = next_state(entry.state, operation)
        in_depth = entry.state is SpreadsheetState.IN_DEPTH_REVIEW_PENDING
        expected_kind = ChecklistKind.IN_DEPTH if in_depth else ChecklistKind.CHANGE
        if review.checklist.kind is not expected_kind:
            raise WorkflowValidationError(
                f"state {entry.state.value!r} requires a {expected_kind.value} checklist"
            )
        validate_checklist(review.checklist, self.checklist_template(expected_kind))
        if in_depth:
            change_author = entry.owner
            changes = [
                f"In-depth review of '{entry.name}' at snapshot {entry.current[:12]}"
            ]
        else:
            if entry.pending_change is None:
                raise StateError("no change is pending review")
            if review.change is not None and review.change != entry.pending_change:
                raise StalenessError(
                    f"review refers to change {review.change[:12]}, but "
                    f"{entry.pending_change[:12]} is pending"
                )
            cs = self.store.get_change(entry.pending_change)
            change_author = cs.author
            changes = [cs.description]
        if review.reviewer == change_author:
            raise WorkflowValidationError(
                f"reviewer {review.reviewer!r} cannot review their own work"
            )
        failures = review.checklist.failures()
        if review.decision is Decision.APPROVE and failures:
            raise WorkflowValidationError(
                f"cannot approve with failed checklist items: {[f.id for f in failures]}"
            )
        has_note = bool(review.note) or any(i.note for i in review.checklist.items)
        if review.decision is Decision.DECLINE and not failures and not has_note:
            raise WorkflowValidationError(
                "a decline needs a failed checklist item or an explicit reviewer note"
            )
        when = self.clock()
        statement = None
        if review.decision is Decision.APPROVE:
            statement = render_statement(changes, review.reviewer, when[:10])
        review = replace(
            review,
            entry=entry_id,
            change=None if in_depth else entry.pending_change,
            statement=statement,
            timestamp=when,
        )
        old_state = entry.state
        updates: dict = {
            "state": new_state,
            "reviews": entry.reviews + (review.to_json(),),
        }
        if review.decision is Decision.APPROVE and entry.pending is not None:
            updates.update(current=entry.pending, pending=None, pending_change=None)
        entry = self._save(replace(entry, **updates), when)
        self._append(
            entry_id,
            "review",
            review.reviewer,
            {
                "decision": review.decision.value,
                "review": len(entry.reviews) - 1,
                "change": review.change,
                "snapshot": self.submitted_snapshot(entry)
                if review.decision is Decision.DECLINE
                else entry.current,
            },
            when,
        )
        self._append(
            entry_id,
            "state-change",
            review.reviewer,
            {"from": old_state.value, "to": new_state.value},
            when,
        )
        return new_state

    def record_evaluation(
        self, entry_id: str, report: EvaluationReport, actor: str
    ) -> SpreadsheetState:
        entry = self.get_entry(entry_id)
        operation = {
            Recommendation.APPROVE: "eval_approve",
            Recommendation.RESTRUCTURE: "eval_restructure",
            Recommendation.REDEVELOP: "eval_redevelop",
        }[report.recommendation]
        new_state = next_state(entry.state, operation)
        submitted = self.submitted_snapshot(entry)
        if report.snapshot != submitted:
            raise StalenessError(
                f"evaluation covers snapshot {report.snapshot[:12]}, but "
                f"{submitted[:12]} is under consideration"
            )
        when = self.clock()
        old_state = entry.state
        updates: dict = {
            "state": new_state,
            "evaluations": entry.evaluations + (report.to_json(),),
        }
        if report.recommendation is Recommendation.APPROVE and entry.pending is not None:
            updates.update(current=entry.pending, pending=None, pending_change=None)
        entry = self._save(replace(entry, **updates), when)
        self._append(
            entry_id,
            "evaluation",
            actor,
            {
                "recommendation": report.recommendation.value,
                "snapshot": report.snapshot,
                "evaluation": len(entry.evaluations) - 1,
            },
            when,
        )
        self._append(
            entry_id,
            "state-change",
            actor,
            {"from": old_state.value, "to": new_state.value},
            when,
        )
        return new_state

    def register_redevelopment(
        self,
        old_entry_id: str,
        workbook: Workbook,
        name: str,
        owner: str | None = None,
        classification: Classification | None = None,
        rules: tuple | None = None,
        actor: str | None = None,
    ) -> InventoryEntry:
        old = self.get_entry(old_entry_id)
        retired = next_state(old.state, "register_redevelopment")
        actor = actor or owner or old.owner
        new_entry = self.register(
            workbook,
            name,
            owner or old.owner,
            classification or old.classification,
            tuple(rules) if rules is not None else old.rules,
            actor=actor,
            links={"redevelops": old_entry_id},
        )
        when = self.clock()
        old_state = old.state
        old = replace(
            old, state=retired, links={**old.links, "redeveloped_by": new_entry.id}
        )
        self._save(old, when)
        self._append(
            old_entry_id,
            "state-change",
            actor,
            {
                "from": old_state.value,
                "to": retired.value,
                "redeveloped_by": new_entry.id,
            },
            when,
        )
        return new_entry

    def audit_log(self, entry_id: str, lo: int | None = None, hi: int | None = None) -> list:
        if not self.store.entry_exists(entry_id):
            raise NotFoundError(f"inventory entry {entry_id!r} not in store")
        return self.store.read_events(entry_id, lo, hi)

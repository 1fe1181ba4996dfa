"""Cell-level workbook diffing with replayable, invertible change sets.

A change set records, against a base snapshot: sheet operations (adds,
removals, caller-declared renames, the full sheet order on both sides, and
a workbook rename when the document name changed) plus cell deltas sorted
by (sheet, row, column). Delta addresses use the result side's sheet names,
except for cells of removed sheets, which keep the only name they ever had.

Each delta carries a ``referenced`` flag (was the address read by any
formula on either side), recorded at diff time so that structural
classification is a pure function of the change set.

Structural changes - the ones that trigger review - are: any delta that
touches a formula, any sheet operation (including a pure reorder), or an
added/removed cell that participates in formula references. This
operationalization is a declared convention; adjust reviewers' expectations
accordingly rather than assuming an industry-standard definition exists.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

from .addresses import CellAddress, parse_address
from .errors import IntegrityError, StalenessError, ChainError, WorkflowValidationError
from .evaluator import build_graph
from .grid import (
    EMPTY,
    CellContent,
    CellKind,
    SnapshotId,
    Workbook,
    classify_cell,
    make_workbook,
    snapshot_id,
)
from .jsonutil import canonical_json, digest_json
from .metrics import computation_endpoints


class DeltaKind(Enum):
    ADDED = "added"
    REMOVED = "removed"
    VALUE_CHANGED = "value_changed"
    FORMULA_CHANGED = "formula_changed"
    FORMULA_INTRODUCED = "formula_introduced"
    FORMULA_REMOVED = "formula_removed"


FORMULA_KINDS = frozenset(
    {DeltaKind.FORMULA_CHANGED, DeltaKind.FORMULA_INTRODUCED, DeltaKind.FORMULA_REMOVED}
)


def delta_kind(before: CellContent, after: CellContent) -> DeltaKind:
    """Pure function of the two sides' kinds (and, implicitly, equality)."""
    if before.kind is CellKind.EMPTY:
        return DeltaKind.FORMULA_INTRODUCED if after.is_formula else DeltaKind.ADDED
    if after.kind is CellKind.EMPTY:
        return DeltaKind.FORMULA_REMOVED if before.is_formula else DeltaKind.REMOVED
    if before.is_formula or after.is_formula:
        return DeltaKind.FORMULA_CHANGED
    return DeltaKind.VALUE_CHANGED


@dataclass(frozen=True)
class CellDelta:
    address: CellAddress
    before: CellContent
    after: CellContent
    kind: DeltaKind
    referenced: bool = False

    def to_json(self) -> dict:
        return {
            "address": self.address.qualified(),
            "kind": self.kind.value,
            "before": self.before.canonical if self.before.kind is not CellKind.EMPTY else None,
            "after": self.after.canonical if self.after.kind is not CellKind.EMPTY else None,
            "referenced": self.referenced,
        }


@dataclass(frozen=True)
class SheetOps:
    added: tuple = ()
    removed: tuple = ()
    renamed: tuple = ()  # (old, new) pairs
    order_before: tuple = ()
    order_after: tuple = ()
    workbook_renamed: tuple | None = None  # (old, new)

    def is_empty(self) -> bool:
        return (
            not self.added
            and not self.removed
            and not self.renamed
            and self.order_before == self.order_after
            and self.workbook_renamed is None
        )

    def to_json(self) -> dict:
        return {
            "added": list(self.added),
            "removed": list(self.removed),
            "renamed": [list(pair) for pair in self.renamed],
            "order_before": list(self.order_before),
            "order_after": list(self.order_after),
            "workbook_renamed": list(self.workbook_renamed) if self.workbook_renamed else None,
        }


@dataclass(frozen=True)
class ChangeSet:
    id: str
    author: str
    timestamp: str  # UTC, second precision, ISO 8601
    description: str
    base: SnapshotId
    result: SnapshotId
    sheet_ops: SheetOps
    deltas: tuple

    def is_empty(self) -> bool:
        return not self.deltas and self.sheet_ops.is_empty()

    def body_json(self) -> dict:
        return {
            "author": self.author,
            "timestamp": self.timestamp,
            "description": self.description,
            "base": self.base.hash,
            "result": self.result.hash,
            "sheet_ops": self.sheet_ops.to_json(),
            "deltas": [d.to_json() for d in self.deltas],
        }

    def to_json(self) -> dict:
        return {"id": self.id, **self.body_json()}


def _changeset_id(body: dict) -> str:
    return digest_json(body)


def _sealed(author, timestamp, description, base, result, sheet_ops, deltas) -> ChangeSet:
    cs = ChangeSet(
        id="",
        author=author,
        timestamp=timestamp,
        description=description,
        base=base,
        result=result,
        sheet_ops=sheet_ops,
        deltas=tuple(sorted(deltas, key=lambda d: d.address.sort_key())),
    )
    return replace(cs, id=_changeset_id(cs.body_json()))


def changeset_to_text(cs: ChangeSet) -> str:
    return canonical_json(cs.to_json())


def changeset_from_json(obj: dict) -> ChangeSet:
    ops_obj = obj["sheet_ops"]
    sheet_ops = SheetOps(
        added=tuple(ops_obj.get("added", ())),
        removed=tuple(ops_obj.get("removed", ())),
        renamed=tuple(tuple(p) for p in ops_obj.get("renamed", ())),
        order_before=tuple(ops_obj.get("order_before", ())),
        order_after=tuple(ops_obj.get("order_after", ())),
        workbook_renamed=tuple(ops_obj["workbook_renamed"])
        if ops_obj.get("workbook_renamed")
        else None,
    )
    deltas = []
    for d in obj.get("deltas", ()):
        address = parse_address(d["address"].split("!", 1)[1], d["address"].split("!", 1)[0])
        before = classify_cell(d["before"], address) if d["before"] is not None else EMPTY
        after = classify_cell(d["after"], address) if d["after"] is not None else EMPTY
        kind = DeltaKind(d["kind"])
        if kind is not delta_kind(before, after):
            raise IntegrityError(
                f"delta kind {kind.value!r} at {address.qualified()} does not match its contents"
            )
        deltas.append(
            CellDelta(
                address=address,
                before=before,
                after=after,
                kind=kind,
                referenced=bool(d.get("referenced", False)),
            )
        )
    cs = ChangeSet(
        id=obj["id"],
        author=obj["author"],
        timestamp=obj["timestamp"],
        description=obj["description"],
        base=SnapshotId(obj["base"]),
        result=SnapshotId(obj["result"]),
        sheet_ops=sheet_ops,
        deltas=tuple(deltas),
    )
    if _changeset_id(cs.body_json()) != cs.id:
        raise IntegrityError(f"change set id {cs.id[:12]} does not match its contents")
    return cs


# ---------------------------------------------------------------------------
# diff / classify / rank
# ---------------------------------------------------------------------------


def _referenced_addresses(workbook: Workbook) -> set:
    graph = build_graph(workbook)
    refs: set[CellAddress] = set()
    for addresses in graph.inputs.values():
        refs.update(addresses)
    return refs


def diff(
    before: Workbook,
    after: Workbook,
    author: str,
    timestamp: str,
    description: str,
    renames: tuple = (),
) -> ChangeSet:
    """Exact sparse cell comparison. ``renames`` declares sheet renames as
    (old, new) pairs; undeclared sheets match by name."""
    rename_map = {}
    for old, new in renames:
        if not before.has_sheet(old):
            raise WorkflowValidationError(f"rename source sheet {old!r} not in base workbook")
        if not after.has_sheet(new):
            raise WorkflowValidationError(f"rename target sheet {new!r} not in result workbook")
        rename_map[old] = new
    inverse_rename = {new: old for old, new in rename_map.items()}

    before_names = {s.name for s in before.sheets}
    mapped_before = {rename_map.get(s.name, s.name): s for s in before.sheets}
    after_names = {s.name for s in after.sheets}
    added_sheets = [s.name for s in after.sheets if s.name not in mapped_before]
    removed_sheets = [
        s.name for s in before.sheets if rename_map.get(s.name, s.name) not in after_names
    ]

    refs_before = _referenced_addresses(before)
    refs_after = _referenced_addresses(after)

    def was_or_becomes_referenced(address: CellAddress) -> bool:
        if address in refs_after:
            return True
        old_sheet = inverse_rename.get(address.sheet, address.sheet)
        return CellAddress(old_sheet, address.column, address.row) in refs_before

    deltas: list[CellDelta] = []
    for after_sheet in after.sheets:
        before_sheet = mapped_before.get(after_sheet.name)
        if before_sheet is None:
            for (col, row), content in after_sheet.cells.items():
                address = CellAddress(after_sheet.name, col, row)
                deltas.append(
                    CellDelta(
                        address=address,
                        before=EMPTY,
                        after=content,
                        kind=delta_kind(EMPTY, content),
                        referenced=was_or_becomes_referenced(address),
                    )
                )
            continue
        keys = set(before_sheet.cells) | set(after_sheet.cells)
        for (col, row) in keys:
            b = before_sheet.cells.get((col, row), EMPTY)
            a = after_sheet.cells.get((col, row), EMPTY)
            if b == a:
                continue
            address = CellAddress(after_sheet.name, col, row)
            deltas.append(
                CellDelta(
                    address=address,
                    before=b,
                    after=a,
                    kind=delta_kind(b, a),
                    referenced=was_or_becomes_referenced(address),
                )
            )
    for name in removed_sheets:
        sheet = before.sheet(name)
        for (col, row), content in sheet.cells.items():
            address = CellAddress(name, col, row)
            deltas.append(
                CellDelta(
                    address=address,
                    before=content,
                    after=EMPTY,
                    kind=delta_kind(content, EMPTY),
                    referenced=address in refs_before or address in refs_after,
                )
            )

    sheet_ops = SheetOps(
        added=tuple(added_sheets),
        removed=tuple(removed_sheets),
        renamed=tuple((old, new) for old, new in rename_map.items() if old in before_names),
        order_before=tuple(before.sheet_names()),
        order_after=tuple(after.sheet_names()),
        workbook_renamed=(before.name, after.name) if before.name != after.name else None,
    )
    return _sealed(
        author, timestamp, description, snapshot_id(before), snapshot_id(after), sheet_ops, deltas
    )


STRUCTURAL = "structural"
NON_STRUCTURAL = "non_structural"


def classify(cs: ChangeSet) -> str:
    """Structural changes require review; pure input-value edits do not."""
    if not cs.sheet_ops.is_empty():
        return STRUCTURAL
    for delta in cs.deltas:
        if delta.kind in FORMULA_KINDS:
            return STRUCTURAL
        if delta.kind in (DeltaKind.ADDED, DeltaKind.REMOVED) and delta.referenced:
            return STRUCTURAL
    return NON_STRUCTURAL


@dataclass(frozen=True)
class RiskWeights:
    formula: float = 5.0
    fan_out: float = 1.0
    cross_sheet: float = 2.0
    endpoint: float = 3.0


@dataclass(frozen=True)
class RankedChange:
    delta: CellDelta
    score: float
    rationale: dict = field(compare=False)

    def to_json(self) -> dict:
        return {
            "delta": self.delta.to_json(),
            "score": self.score,
            "rationale": dict(self.rationale),
        }


def rank_by_risk(
    cs: ChangeSet,
    before: Workbook,
    after: Workbook,
    weights: RiskWeights | None = None,
) -> list:
    """Deltas ordered by descending risk score, address order on ties."""
    weights = weights or RiskWeights()
    graph_after = build_graph(after)
    endpoints_after = computation_endpoints(after, graph_after)

    def crosses_sheets(delta: CellDelta) -> bool:
        for content in (delta.before, delta.after):
            if content.kind is CellKind.FORMULA:
                refs = graph_after.inputs.get(delta.address)
                if refs is None:
                    refs = _content_references(content, delta.address)
                if any(r.sheet != delta.address.sheet for r in refs):
                    return True
        return any(
            v.sheet != delta.address.sheet
            for v in graph_after.dependents.get(delta.address, ())
        )

    ranked = []
    for delta in cs.deltas:
        fan_out = graph_after.fan_out(delta.address)
        touches_formula = delta.kind in FORMULA_KINDS
        cross = crosses_sheets(delta)
        endpoint = delta.address in endpoints_after
        score = (
            weights.formula * touches_formula
            + weights.fan_out * fan_out
            + weights.cross_sheet * cross
            + weights.endpoint * endpoint
        )
        ranked.append(
            RankedChange(
                delta=delta,
                score=score,
                rationale={
                    "formula": weights.formula * touches_formula,
                    "fan_out": weights.fan_out * fan_out,
                    "cross_sheet": weights.cross_sheet * cross,
                    "endpoint": weights.endpoint * endpoint,
                },
            )
        )
    ranked.sort(key=lambda r: (-r.score,) + r.delta.address.sort_key())
    return ranked


def _content_references(content: CellContent, address: CellAddress):
    from .formulas import extract_references

    return extract_references(content.ast, address)


# ---------------------------------------------------------------------------
# apply / invert / replay
# ---------------------------------------------------------------------------


def apply(workbook: Workbook, cs: ChangeSet) -> Workbook:
    """Replay a change set onto its base workbook; verifies both snapshots."""
    actual = snapshot_id(workbook)
    if actual != cs.base:
        raise StalenessError(
            f"change set base {cs.base.short()} does not match workbook snapshot {actual.short()}"
        )
    name = cs.sheet_ops.workbook_renamed[1] if cs.sheet_ops.workbook_renamed else workbook.name
    rename_map = dict(cs.sheet_ops.renamed)
    sheets: list[tuple[str, dict]] = [
        (rename_map.get(s.name, s.name), dict(s.cells)) for s in workbook.sheets
    ]
    removed = set(cs.sheet_ops.removed)
    sheets = [(n, cells) for n, cells in sheets if n not in removed]
    existing = {n for n, _ in sheets}
    for name_added in cs.sheet_ops.added:
        if name_added in existing:
            raise IntegrityError(f"cannot add sheet {name_added!r}: already present")
        sheets.append((name_added, {}))
        existing.add(name_added)
    by_name = {n: cells for n, cells in sheets}
    for delta in cs.deltas:
        cells = by_name.get(delta.address.sheet)
        if cells is None:
            if delta.kind in (DeltaKind.REMOVED, DeltaKind.FORMULA_REMOVED):
                continue  # cell of a removed sheet; the removal already covered it
            raise IntegrityError(f"delta targets unknown sheet {delta.address.sheet!r}")
        key = (delta.address.column, delta.address.row)
        if delta.after.kind is CellKind.EMPTY:
            cells.pop(key, None)
        else:
            cells[key] = delta.after
    order = cs.sheet_ops.order_after or tuple(n for n, _ in sheets)
    if set(order) != set(by_name):
        raise IntegrityError("sheet order in change set does not cover the resulting sheets")
    result = make_workbook(name, [(n, by_name[n]) for n in order])
    actual_result = snapshot_id(result)
    if actual_result != cs.result:
        raise IntegrityError(
            f"apply produced snapshot {actual_result.short()}, "
            f"change set records {cs.result.short()}"
        )
    return result


def invert(cs: ChangeSet) -> ChangeSet:
    """Swap the two sides; applying the inverse to the result yields the base."""
    rename_back = {new: old for old, new in cs.sheet_ops.renamed}
    deltas = []
    for delta in cs.deltas:
        sheet = rename_back.get(delta.address.sheet, delta.address.sheet)
        address = CellAddress(sheet, delta.address.column, delta.address.row)
        deltas.append(
            CellDelta(
                address=address,
                before=delta.after,
                after=delta.before,
                kind=delta_kind(delta.after, delta.before),
                referenced=delta.referenced,
            )
        )
    ops = cs.sheet_ops
    sheet_ops = SheetOps(
        added=ops.removed,
        removed=ops.added,
        renamed=tuple((new, old) for old, new in ops.renamed),
        order_before=ops.order_after,
        order_after=ops.order_before,
        workbook_renamed=(ops.workbook_renamed[1], ops.workbook_renamed[0])
        if ops.workbook_renamed
        else None,
    )
    return _sealed(
        cs.author, cs.timestamp, cs.description, cs.result, cs.base, sheet_ops, deltas
    )


def replay(base: Workbook, log: list, upto: int | str | None = None) -> Workbook:
    """Fold apply over a chain-consistent change log.

    ``upto`` selects a prefix: an int applies that many change sets, a
    timestamp string applies every change set stamped at or before it
    (ISO 8601 UTC compares lexicographically), None applies all.
    """
    expected = snapshot_id(base)
    for i, cs in enumerate(log):
        if cs.base != expected:
            raise ChainError(
                f"change log breaks at position {i}: expected base {expected.short()}, "
                f"found {cs.base.short()}"
            )
        expected = cs.result
    if upto is None:
        selected = list(log)
    elif isinstance(upto, int):
        if not 0 <= upto <= len(log):
            raise ChainError(f"replay index {upto} outside 0..{len(log)}")
        selected = list(log[:upto])
    else:
        selected = [cs for cs in log if cs.timestamp <= upto]
    current = base
    for cs in selected:
        current = apply(current, cs)
    return current

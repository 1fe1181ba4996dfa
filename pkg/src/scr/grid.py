"""Workbook data model and the ``.wbk.json`` interchange format.

A document is ``{"name": ..., "sheets": [{"name": ..., "cells": {"A1": "raw
text", ...}}]}``. Raw cell text rules: leading ``=`` marks a formula, a
leading apostrophe forces Text of the remainder, ``TRUE``/``FALSE`` (any
case) are booleans, text that parses as a finite decimal is a Number, and
anything else is Text. Address keys never carry sheet prefixes.

Canonical serialization keeps sheets in stored order, sorts cells by
(row, column), renders numbers as their shortest round-trip decimal, and
re-renders formulas in canonical form. The snapshot id is the sha256 of
that text, so equal workbooks always share an id. An empty workbook named
``N`` serializes to exactly ``{"name": "N", "sheets": []}`` (pretty-printed,
trailing newline).

Workbook values are immutable; all operations here are pure.
"""

import re
from dataclasses import dataclass, field
from enum import Enum

from .addresses import CellAddress, parse_address
from .errors import FormulaParseError, IngestionError
from .formulas import FormulaAst, parse_formula, render_formula
from .jsonutil import canonical_json, digest, load_json, render_number


class CellKind(Enum):
    EMPTY = "empty"
    NUMBER = "number"
    TEXT = "text"
    BOOLEAN = "boolean"
    FORMULA = "formula"


_NUMBER_TEXT_RE = re.compile(r"^[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?$")


@dataclass(frozen=True)
class CellContent:
    """One cell's classified content.

    Equality and hashing use only the canonical text, which fully determines
    kind and value; ``source`` keeps the raw input for diagnostics.
    """

    kind: CellKind = field(compare=False)
    canonical: str
    literal: float | str | bool | None = field(default=None, compare=False)
    ast: FormulaAst | None = field(default=None, compare=False)
    source: str = field(default="", compare=False)

    @property
    def is_formula(self) -> bool:
        return self.kind is CellKind.FORMULA

    def __repr__(self) -> str:
        return f"CellContent({self.kind.value}, {self.canonical!r})"


EMPTY = CellContent(kind=CellKind.EMPTY, canonical="")


def _needs_apostrophe(text: str) -> bool:
    """True when raw text would not classify back to Text(text)."""
    if text == "" or text.startswith(("'", "=")):
        return True
    if _NUMBER_TEXT_RE.match(text):
        return True
    return text.upper() in ("TRUE", "FALSE")


def classify_cell(source: str, origin: CellAddress | None = None) -> CellContent:
    """Classify raw cell text; formulas are parsed relative to ``origin``.

    ``origin`` defaults to A1 of a placeholder sheet, which only matters for
    formulas (sheet resolution); grid ingestion always passes the real one.
    """
    if origin is None:
        origin = CellAddress("Sheet1", 1, 1)
    if source == "":
        return EMPTY
    if source.startswith("="):
        try:
            ast = parse_formula(source, origin)
        except FormulaParseError as exc:
            raise IngestionError(f"cannot classify formula cell: {exc}") from exc
        return CellContent(
            kind=CellKind.FORMULA,
            canonical="=" + render_formula(ast, origin),
            ast=ast,
            source=source,
        )
    if source.startswith("'"):
        text = source[1:]
        return CellContent(kind=CellKind.TEXT, canonical="'" + text if _needs_apostrophe(text) else text, literal=text, source=source)
    if _NUMBER_TEXT_RE.match(source):
        value = float(source)
        if value != value or value in (float("inf"), float("-inf")):
            raise IngestionError(f"number literal {source!r} is not finite")
        return CellContent(kind=CellKind.NUMBER, canonical=render_number(value), literal=value, source=source)
    if source.upper() == "TRUE":
        return CellContent(kind=CellKind.BOOLEAN, canonical="TRUE", literal=True, source=source)
    if source.upper() == "FALSE":
        return CellContent(kind=CellKind.BOOLEAN, canonical="FALSE", literal=False, source=source)
    return CellContent(kind=CellKind.TEXT, canonical=source, literal=source, source=source)


@dataclass(frozen=True)
class Sheet:
    """Sparse grid: only non-empty cells are stored."""

    name: str
    cells: dict  # (column, row) -> CellContent

    def get(self, column: int, row: int) -> CellContent:
        return self.cells.get((column, row), EMPTY)

    def addresses(self) -> list[CellAddress]:
        return [
            CellAddress(self.name, col, row)
            for (col, row) in sorted(self.cells, key=lambda cr: (cr[1], cr[0]))
        ]


@dataclass(frozen=True)
class Workbook:
    name: str
    sheets: tuple

    def sheet_names(self) -> list[str]:
        return [s.name for s in self.sheets]

    def sheet(self, name: str) -> Sheet:
        for s in self.sheets:
            if s.name == name:
                return s
        raise KeyError(name)

    def has_sheet(self, name: str) -> bool:
        return any(s.name == name for s in self.sheets)

    def get_cell(self, address: CellAddress) -> CellContent:
        for s in self.sheets:
            if s.name == address.sheet:
                return s.get(address.column, address.row)
        return EMPTY

    def iter_cells(self):
        """Yield (address, content) for every non-empty cell, in canonical order."""
        for s in self.sheets:
            for (col, row) in sorted(s.cells, key=lambda cr: (cr[1], cr[0])):
                yield CellAddress(s.name, col, row), s.cells[(col, row)]


@dataclass(frozen=True)
class SnapshotId:
    hash: str

    def __str__(self) -> str:
        return self.hash

    def short(self) -> str:
        return self.hash[:12]


def make_workbook(name: str, sheet_cells: list[tuple[str, dict]]) -> Workbook:
    """Assemble a workbook from (sheet name, {(col,row): content}) pairs."""
    names = [n for n, _ in sheet_cells]
    if len(set(names)) != len(names):
        raise IngestionError("duplicate sheet names")
    sheets = tuple(
        Sheet(name=n, cells={k: v for k, v in cells.items() if v.kind is not CellKind.EMPTY})
        for n, cells in sheet_cells
    )
    return Workbook(name=name, sheets=sheets)


def parse_workbook(document: str) -> Workbook:
    """Parse an interchange document, classifying every cell."""
    try:
        data = load_json(document, source="workbook document")
    except ValueError as exc:
        raise IngestionError(f"invalid workbook document: {exc}") from exc
    if not isinstance(data, dict):
        raise IngestionError("workbook document must be a JSON object")
    extra = set(data) - {"name", "sheets"}
    if extra:
        raise IngestionError(f"unknown workbook keys: {sorted(extra)}")
    name = data.get("name")
    sheets_data = data.get("sheets")
    if not isinstance(name, str):
        raise IngestionError("workbook 'name' must be a string")
    if not isinstance(sheets_data, list):
        raise IngestionError("workbook 'sheets' must be a list")
    sheet_cells: list[tuple[str, dict]] = []
    seen_names: set[str] = set()
    for idx, sheet_obj in enumerate(sheets_data):
        if not isinstance(sheet_obj, dict):
            raise IngestionError(f"sheet #{idx} must be an object")
        extra = set(sheet_obj) - {"name", "cells"}
        if extra:
            raise IngestionError(f"sheet #{idx}: unknown keys {sorted(extra)}")
        sheet_name = sheet_obj.get("name")
        if not isinstance(sheet_name, str) or not sheet_name:
            raise IngestionError(f"sheet #{idx}: 'name' must be a non-empty string")
        if sheet_name in seen_names:
            raise IngestionError(f"duplicate sheet name {sheet_name!r}")
        seen_names.add(sheet_name)
        cells_obj = sheet_obj.get("cells", {})
        if not isinstance(cells_obj, dict):
            raise IngestionError(f"sheet {sheet_name!r}: 'cells' must be an object")
        cells: dict = {}
        for key, raw in cells_obj.items():
            if "!" in key:
                raise IngestionError(
                    f"sheet {sheet_name!r}: address key {key!r} must not carry a sheet prefix"
                )
            try:
                addr = parse_address(key, sheet_name)
            except FormulaParseError as exc:
                raise IngestionError(f"sheet {sheet_name!r}: bad address key {key!r}: {exc}") from exc
            if not isinstance(raw, str):
                raise IngestionError(f"cell {sheet_name}!{key}: value must be a string")
            if (addr.column, addr.row) in cells:
                raise IngestionError(f"duplicate cell address {sheet_name}!{addr.a1()}")
            try:
                content = classify_cell(raw, addr)
            except IngestionError as exc:
                raise IngestionError(f"cell {sheet_name}!{addr.a1()}: {exc}") from exc
            if content.kind is not CellKind.EMPTY:
                cells[(addr.column, addr.row)] = content
        sheet_cells.append((sheet_name, cells))
    return make_workbook(name, sheet_cells)


def serialize_workbook(workbook: Workbook) -> str:
    """Render the canonical interchange text (see module docstring)."""
    doc = {
        "name": workbook.name,
        "sheets": [
            {
                "name": sheet.name,
                "cells": {
                    CellAddress(sheet.name, col, row).a1(): sheet.cells[(col, row)].canonical
                    for (col, row) in sorted(sheet.cells, key=lambda cr: (cr[1], cr[0]))
                },
            }
            for sheet in workbook.sheets
        ],
    }
    return canonical_json(doc)


def snapshot_id(workbook: Workbook) -> SnapshotId:
    """Content digest of the canonical serialization."""
    return SnapshotId(digest(serialize_workbook(workbook)))

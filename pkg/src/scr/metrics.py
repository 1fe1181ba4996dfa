"""Workbook metric catalog: size, coupling, blocks, inconsistency, endpoints, smells.

Conventions, fixed here and relied on by the risk model:

* ``cells`` counts non-empty cells; ``columns``/``rows`` count distinct used
  indices, summed over sheets (not bounding-box extents).
* Text cells are labels: they count toward ``cells`` but not
  ``data_elements``, and the "data mixed with formulas" rule ignores them.
* Unique formulas are distinct normal forms, counted per workbook.
* Blocks are 4-connected components of non-empty cells; orientation
  compares bounding-box rows to columns.
* Inconsistency is judged within a block's row and column segments: in any
  segment holding two or more formulas, formulas deviating from the modal
  normal form are inconsistent, as are Number/Boolean cells strictly
  between two of the segment's formulas.
"""

from collections import Counter
from dataclasses import dataclass, field

from .addresses import CellAddress, column_to_letters
from .evaluator import DependencyGraph, build_graph
from .formulas import DEFAULT_MAGIC_WHITELIST, count_magic_constants, formula_length, normalize
from .grid import CellKind, Workbook, snapshot_id
from .jsonutil import render_number


@dataclass(frozen=True)
class AnalysisConfig:
    long_formula_threshold: int = 15
    magic_whitelist: frozenset = DEFAULT_MAGIC_WHITELIST


@dataclass(frozen=True)
class SizeMetrics:
    cells: int
    columns: int
    rows: int
    sheets: int
    formulas: int
    unique_formulas: int
    data_elements: int

    def to_json(self) -> dict:
        return {
            "cells": self.cells,
            "columns": self.columns,
            "rows": self.rows,
            "sheets": self.sheets,
            "formulas": self.formulas,
            "unique_formulas": self.unique_formulas,
            "data_elements": self.data_elements,
        }


@dataclass(frozen=True)
class Block:
    sheet: str
    members: frozenset  # of (column, row)
    min_row: int
    max_row: int
    min_col: int
    max_col: int
    orientation: str  # "vertical" | "horizontal" | "square"

    def box_ref(self) -> str:
        start = f"{column_to_letters(self.min_col)}{self.min_row}"
        end = f"{column_to_letters(self.max_col)}{self.max_row}"
        return f"{self.sheet}!{start}:{end}" if start != end else f"{self.sheet}!{start}"

    def addresses(self) -> list[CellAddress]:
        return [
            CellAddress(self.sheet, col, row)
            for (col, row) in sorted(self.members, key=lambda cr: (cr[1], cr[0]))
        ]

    def to_json(self) -> dict:
        return {
            "sheet": self.sheet,
            "cells": [a.a1() for a in self.addresses()],
            "box": {
                "min_row": self.min_row,
                "max_row": self.max_row,
                "min_col": self.min_col,
                "max_col": self.max_col,
            },
            "orientation": self.orientation,
        }


@dataclass(frozen=True)
class CouplingMetrics:
    fan_in: dict  # formula CellAddress -> count of distinct referenced cells
    fan_out: dict  # CellAddress -> count of formulas referencing it
    cross_sheet_refs: int
    cross_sheet_formulas: tuple  # formula addresses with at least one off-sheet reference

    @property
    def max_fan_in(self) -> int:
        return max(self.fan_in.values(), default=0)

    @property
    def mean_fan_in(self) -> float:
        return sum(self.fan_in.values()) / len(self.fan_in) if self.fan_in else 0.0

    @property
    def max_fan_out(self) -> int:
        return max(self.fan_out.values(), default=0)

    def top_fan_in(self) -> list[CellAddress]:
        best = self.max_fan_in
        if best == 0:
            return []
        return sorted(
            (a for a, n in self.fan_in.items() if n == best), key=CellAddress.sort_key
        )

    def to_json(self) -> dict:
        return {
            "max_fan_in": self.max_fan_in,
            "mean_fan_in": self.mean_fan_in,
            "max_fan_out": self.max_fan_out,
            "cross_sheet_refs": self.cross_sheet_refs,
            "top_fan_in": [a.qualified() for a in self.top_fan_in()],
            "cross_sheet_formulas": [a.qualified() for a in self.cross_sheet_formulas],
        }


@dataclass(frozen=True)
class MetricsReport:
    snapshot: str
    size: SizeMetrics
    coupling: CouplingMetrics
    blocks: tuple
    inconsistent_cells: frozenset
    endpoints: frozenset
    max_formula_length: int
    long_formulas: tuple  # (CellAddress, length), length > threshold
    magic_constants: tuple  # (CellAddress, count), count > 0
    config: AnalysisConfig = field(default_factory=AnalysisConfig, compare=False)

    def to_json(self) -> dict:
        return {
            "snapshot": self.snapshot,
            "size": self.size.to_json(),
            "coupling": self.coupling.to_json(),
            "blocks": [b.to_json() for b in self.blocks],
            "inconsistent_cells": sorted(
                (a.qualified() for a in self.inconsistent_cells)
            ),
            "endpoints": sorted(a.qualified() for a in self.endpoints),
            "max_formula_length": self.max_formula_length,
            "smells": {
                "long_formulas": [
                    {"address": a.qualified(), "length": n} for a, n in self.long_formulas
                ],
                "magic_constants": [
                    {"address": a.qualified(), "count": n} for a, n in self.magic_constants
                ],
            },
        }


def size_metrics(workbook: Workbook) -> SizeMetrics:
    cells = formulas = data_elements = columns = rows = 0
    normal_forms: set[str] = set()
    for sheet in workbook.sheets:
        used_cols: set[int] = set()
        used_rows: set[int] = set()
        for (col, row), content in sheet.cells.items():
            cells += 1
            used_cols.add(col)
            used_rows.add(row)
            if content.kind is CellKind.FORMULA:
                formulas += 1
                normal_forms.add(
                    normalize(content.ast, CellAddress(sheet.name, col, row)).text
                )
            elif content.kind in (CellKind.NUMBER, CellKind.BOOLEAN):
                data_elements += 1
        columns += len(used_cols)
        rows += len(used_rows)
    return SizeMetrics(
        cells=cells,
        columns=columns,
        rows=rows,
        sheets=len(workbook.sheets),
        formulas=formulas,
        unique_formulas=len(normal_forms),
        data_elements=data_elements,
    )


def detect_blocks(workbook: Workbook) -> list:
    """4-connected components per sheet, ordered by first (row, column)."""
    blocks: list[Block] = []
    for sheet in workbook.sheets:
        unvisited = set(sheet.cells)
        for start in sorted(unvisited, key=lambda cr: (cr[1], cr[0])):
            if start not in unvisited:
                continue
            component = {start}
            unvisited.discard(start)
            frontier = [start]
            while frontier:
                col, row = frontier.pop()
                for nxt in ((col - 1, row), (col + 1, row), (col, row - 1), (col, row + 1)):
                    if nxt in unvisited:
                        unvisited.discard(nxt)
                        component.add(nxt)
                        frontier.append(nxt)
            cols = [c for c, _ in component]
            rows_ = [r for _, r in component]
            box_rows = max(rows_) - min(rows_) + 1
            box_cols = max(cols) - min(cols) + 1
            orientation = (
                "vertical" if box_rows > box_cols else "horizontal" if box_cols > box_rows else "square"
            )
            blocks.append(
                Block(
                    sheet=sheet.name,
                    members=frozenset(component),
                    min_row=min(rows_),
                    max_row=max(rows_),
                    min_col=min(cols),
                    max_col=max(cols),
                    orientation=orientation,
                )
            )
    return blocks


def coupling_metrics(workbook: Workbook, graph: DependencyGraph) -> CouplingMetrics:
    fan_in = {v: len(refs) for v, refs in graph.inputs.items()}
    fan_out = {u: len(vs) for u, vs in graph.dependents.items()}
    cross = 0
    cross_formulas: list[CellAddress] = []
    for formula, refs in graph.inputs.items():
        off_sheet = sum(1 for ref in refs if ref.sheet != formula.sheet)
        cross += off_sheet
        if off_sheet:
            cross_formulas.append(formula)
    return CouplingMetrics(
        fan_in=fan_in,
        fan_out=fan_out,
        cross_sheet_refs=cross,
        cross_sheet_formulas=tuple(sorted(cross_formulas, key=CellAddress.sort_key)),
    )


def _segment_inconsistencies(cells: list, contents: dict) -> set:
    """One row or column segment: cells as (position, (col, row)) sorted by position."""
    flagged: set = set()
    formulas = [(pos, key) for pos, key in cells if contents[key][0] is CellKind.FORMULA]
    if len(formulas) < 2:
        return flagged
    counts = Counter(contents[key][1] for _, key in formulas)
    top = max(counts.values())
    # Tie on frequency: the candidate appearing first (leftmost/topmost) wins.
    modal = None
    for _, key in formulas:
        candidate = contents[key][1]
        if counts[candidate] == top:
            modal = candidate
            break
    first_pos, last_pos = formulas[0][0], formulas[-1][0]
    for pos, key in cells:
        kind, normal_form = contents[key]
        if kind is CellKind.FORMULA:
            if normal_form != modal:
                flagged.add(key)
        elif kind in (CellKind.NUMBER, CellKind.BOOLEAN) and first_pos < pos < last_pos:
            flagged.add(key)
    return flagged


def inconsistent_cells(workbook: Workbook, blocks: list) -> set:
    """Union of the row-pass and column-pass deviations over every block."""
    result: set[CellAddress] = set()
    for block in blocks:
        sheet = workbook.sheet(block.sheet)
        contents: dict = {}
        for key in block.members:
            content = sheet.cells[key]
            normal_form = None
            if content.kind is CellKind.FORMULA:
                normal_form = normalize(
                    content.ast, CellAddress(block.sheet, key[0], key[1])
                ).text
            contents[key] = (content.kind, normal_form)
        by_row: dict[int, list] = {}
        by_col: dict[int, list] = {}
        for (col, row) in block.members:
            by_row.setdefault(row, []).append((col, (col, row)))
            by_col.setdefault(col, []).append((row, (col, row)))
        flagged: set = set()
        for segment in list(by_row.values()) + list(by_col.values()):
            flagged |= _segment_inconsistencies(sorted(segment), contents)
        result |= {CellAddress(block.sheet, col, row) for (col, row) in flagged}
    return result


def computation_endpoints(workbook: Workbook, graph: DependencyGraph) -> set:
    """Formula cells no other formula references: the workbook's outputs."""
    return {
        address
        for address, content in workbook.iter_cells()
        if content.kind is CellKind.FORMULA and graph.fan_out(address) == 0
    }


def metrics_report(workbook: Workbook, config: AnalysisConfig | None = None) -> MetricsReport:
    config = config or AnalysisConfig()
    graph = build_graph(workbook)
    blocks = detect_blocks(workbook)
    long_formulas: list = []
    magic: list = []
    max_length = 0
    for address, content in workbook.iter_cells():
        if content.kind is not CellKind.FORMULA:
            continue
        length = formula_length(content.ast)
        max_length = max(max_length, length)
        if length > config.long_formula_threshold:
            long_formulas.append((address, length))
        magic_count = count_magic_constants(content.ast, config.magic_whitelist)
        if magic_count > 0:
            magic.append((address, magic_count))
    return MetricsReport(
        snapshot=snapshot_id(workbook).hash,
        size=size_metrics(workbook),
        coupling=coupling_metrics(workbook, graph),
        blocks=tuple(blocks),
        inconsistent_cells=frozenset(inconsistent_cells(workbook, blocks)),
        endpoints=frozenset(computation_endpoints(workbook, graph)),
        max_formula_length=max_length,
        long_formulas=tuple(long_formulas),
        magic_constants=tuple(magic),
        config=config,
    )


def render_human(report: MetricsReport) -> str:
    """Terse terminal summary used by the CLI's human output mode."""
    size = report.size
    lines = [
        f"snapshot      {report.snapshot[:12]}",
        f"size          {size.cells} cells / {size.columns} cols / {size.rows} rows / {size.sheets} sheets",
        f"formulas      {size.formulas} total, {size.unique_formulas} unique, "
        f"{size.data_elements} data elements",
        f"coupling      max fan-in {report.coupling.max_fan_in}, "
        f"mean fan-in {render_number(round(report.coupling.mean_fan_in, 3))}, "
        f"max fan-out {report.coupling.max_fan_out}, "
        f"cross-sheet refs {report.coupling.cross_sheet_refs}",
        f"blocks        {len(report.blocks)}",
        f"inconsistent  {len(report.inconsistent_cells)}",
        f"endpoints     {len(report.endpoints)}",
        f"smells        {len(report.long_formulas)} long formulas, "
        f"{len(report.magic_constants)} with magic constants",
    ]
    return "\n".join(lines)

import random

from hypothesis import given, settings, strategies as st

from conftest import one_sheet, wb
from genwb import (
    oracle_blocks,
    oracle_coupling,
    oracle_endpoints,
    oracle_inconsistent,
    oracle_size,
    random_workbook,
)
from scr.addresses import parse_address
from scr.evaluator import build_graph
from scr.grid import parse_workbook, serialize_workbook
from scr.metrics import (
    AnalysisConfig,
    computation_endpoints,
    coupling_metrics,
    detect_blocks,
    inconsistent_cells,
    metrics_report,
    size_metrics,
)


def addr(a1, sheet="S1"):
    return parse_address(a1, sheet)


def test_size_metrics_examples():
    book = wb({"name": "b", "sheets": [{"name": "S1", "cells": {}}, {"name": "S2", "cells": {}}]})
    size = size_metrics(book)
    assert (size.cells, size.sheets) == (0, 2)
    assert size.formulas == size.unique_formulas == size.data_elements == 0

    book = one_sheet({"A1": "1", "A2": "2", "A3": "=SUM(A1:A2)", "B3": "=A3*2"})
    size = size_metrics(book)
    assert size.cells == 4
    assert size.columns == 2
    assert size.rows == 3
    assert size.sheets == 1
    assert size.formulas == 2
    assert size.unique_formulas == 2
    assert size.data_elements == 2


def test_unique_formulas_collapse_filled_column():
    cells = {"A1": "1"}
    cells.update({f"B{row}": f"=A{row}+1" for row in range(1, 11)})
    size = size_metrics(one_sheet(cells))
    assert size.formulas == 10
    assert size.unique_formulas == 1


def test_detect_blocks_examples():
    blocks = detect_blocks(one_sheet({"A1": "1"}))
    assert len(blocks) == 1 and blocks[0].orientation == "square"

    cells = {f"A{row}": "1" for row in range(1, 6)}
    cells.update({f"B{row}": "2" for row in range(1, 6)})
    blocks = detect_blocks(one_sheet(cells))
    assert len(blocks) == 1
    assert blocks[0].orientation == "vertical"  # 5 rows x 2 cols

    blocks = detect_blocks(one_sheet({"A1": "1", "C1": "2"}))
    assert len(blocks) == 2  # B1 empty, no 4-adjacency


def test_block_partition_covers_cells():
    rng = random.Random(3)
    for _ in range(20):
        book = random_workbook(rng, max_cells=60)
        blocks = detect_blocks(book)
        per_sheet = {s.name: len(s.cells) for s in book.sheets}
        got: dict = {}
        for block in blocks:
            got[block.sheet] = got.get(block.sheet, 0) + len(block.members)
        assert {k: v for k, v in per_sheet.items() if v} == got


def test_coupling_examples():
    book = one_sheet({"A1": "1", "A2": "2", "A3": "=SUM(A1:A2)"})
    coupling = coupling_metrics(book, build_graph(book))
    assert coupling.fan_in[addr("A3")] == 2
    assert coupling.fan_out[addr("A1")] == 1
    assert coupling.cross_sheet_refs == 0

    book = one_sheet({"A1": "1"})
    coupling = coupling_metrics(book, build_graph(book))
    assert coupling.max_fan_in == 0 and coupling.max_fan_out == 0

    book = wb(
        {
            "name": "b",
            "sheets": [
                {"name": "S1", "cells": {"A1": "=S2!B1+S2!B2"}},
                {"name": "S2", "cells": {"B1": "1", "B2": "2"}},
            ],
        }
    )
    coupling = coupling_metrics(book, build_graph(book))
    assert coupling.cross_sheet_refs == 2
    assert coupling.cross_sheet_formulas == (addr("A1"),)


def test_fan_conservation():
    rng = random.Random(11)
    for _ in range(20):
        book = random_workbook(rng, max_cells=80)
        coupling = coupling_metrics(book, build_graph(book))
        assert sum(coupling.fan_in.values()) == sum(coupling.fan_out.values())


def test_inconsistent_cells_examples():
    # three copies of one formula: consistent
    book = one_sheet({"A1": "=A9+1", "B1": "=B9+1", "C1": "=C9+1"})
    assert inconsistent_cells(book, detect_blocks(book)) == set()

    # F, F, G with F modal: G flagged
    book = one_sheet({"A1": "=A9+1", "B1": "=B9+1", "C1": "=C9*2"})
    assert inconsistent_cells(book, detect_blocks(book)) == {addr("C1")}

    # F, 7, F: the interleaved number flagged
    book = one_sheet({"A1": "=A9+1", "B1": "7", "C1": "=C9+1"})
    assert inconsistent_cells(book, detect_blocks(book)) == {addr("B1")}


def test_inconsistent_cells_text_is_ignored():
    book = one_sheet({"A1": "=A9+1", "B1": "label", "C1": "=C9+1"})
    assert inconsistent_cells(book, detect_blocks(book)) == set()


def test_inconsistent_needs_two_formulas():
    book = one_sheet({"A1": "=A9+1", "B1": "7", "C1": "8"})
    assert inconsistent_cells(book, detect_blocks(book)) == set()


def test_endpoints_examples():
    book = one_sheet({"A1": "1", "A2": "2", "A3": "=SUM(A1:A2)", "B3": "=A3*2"})
    g = build_graph(book)
    assert computation_endpoints(book, g) == {addr("B3")}

    book = one_sheet({"A1": "1"})
    assert computation_endpoints(book, build_graph(book)) == set()

    book = one_sheet({"A1": "=C1+1", "B1": "=C2+2"})
    g = build_graph(book)
    assert computation_endpoints(book, g) == {addr("A1"), addr("B1")}


def test_metrics_report_composition():
    book = one_sheet({"A1": "1", "A2": "2", "A3": "=SUM(A1:A2)", "B3": "=A3*2"})
    report = metrics_report(book)
    assert report.size == size_metrics(book)
    assert set(report.endpoints) == computation_endpoints(book, build_graph(book))
    assert report.max_formula_length == 3  # =A3*2 has ref, op, literal

    empty = wb({"name": "b", "sheets": []})
    report = metrics_report(empty)
    assert report.blocks == () and report.size.cells == 0

    report = metrics_report(
        one_sheet({"A1": "=1+2*3"}), AnalysisConfig(long_formula_threshold=3)
    )
    assert [(a.a1(), n) for a, n in report.long_formulas] == [("A1", 5)]


def test_endpoint_coupling_consistency():
    rng = random.Random(21)
    for _ in range(20):
        book = random_workbook(rng, max_cells=80)
        g = build_graph(book)
        coupling = coupling_metrics(book, g)
        endpoints = computation_endpoints(book, g)
        formulas = set(coupling.fan_in)
        assert endpoints == {f for f in formulas if coupling.fan_out.get(f, 0) == 0}


def test_monotonicity_adding_cell():
    book = one_sheet({"A1": "1"})
    bigger = one_sheet({"A1": "1", "B1": "2"})
    assert size_metrics(bigger).cells >= size_metrics(book).cells


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metrics_match_bruteforce_oracles(seed):
    rng = random.Random(seed)
    book = random_workbook(rng, max_cells=100)
    report = metrics_report(book)

    assert report.size.to_json() == oracle_size(book)
    assert {frozenset(b.addresses()) for b in report.blocks} == {
        frozenset(g) for g in oracle_blocks(book)
    }
    assert set(report.inconsistent_cells) == oracle_inconsistent(book)
    assert set(report.endpoints) == oracle_endpoints(book)
    coupling = oracle_coupling(book)
    assert report.coupling.fan_in == coupling["fan_in"]
    assert report.coupling.fan_out == coupling["fan_out"]
    assert report.coupling.cross_sheet_refs == coupling["cross_sheet_refs"]


def test_report_json_is_stable():
    rng = random.Random(5)
    book = random_workbook(rng, max_cells=50)
    again = parse_workbook(serialize_workbook(book))
    assert metrics_report(book).to_json() == metrics_report(again).to_json()

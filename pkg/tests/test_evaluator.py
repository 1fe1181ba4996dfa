import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import one_sheet, wb
from genwb import oracle_cycle_nodes, random_workbook
from scr.addresses import CellAddress
from scr.errors import ConfigError
from scr.evaluator import (
    BLANK,
    ErrorKind,
    ExpectedValueRule,
    boolean,
    build_graph,
    check_rules,
    error,
    evaluate,
    number,
    rule_from_json,
    text,
    topological_order,
)


def addr(a1: str, sheet: str = "S1") -> CellAddress:
    from scr.addresses import parse_address

    return parse_address(a1, sheet)


def test_build_graph_examples():
    g = build_graph(one_sheet({"A1": "1", "A2": "=A1"}))
    assert g.inputs[addr("A2")] == (addr("A1"),)
    assert g.dependents[addr("A1")] == (addr("A2"),)

    g = build_graph(one_sheet({"A1": "1", "A2": "2"}))
    assert not g.inputs and not g.dependents

    g = build_graph(one_sheet({"A3": "=SUM(A1:A2)"}))
    assert g.inputs[addr("A3")] == (addr("A1"), addr("A2"))
    assert addr("A1") in g.nodes  # referenced empty cells are nodes


def test_topological_order_chain_and_ties():
    g = build_graph(one_sheet({"A1": "1", "A2": "=A1", "A3": "=A2"}))
    topo = topological_order(g)
    assert topo.order == (addr("A1"), addr("A2"), addr("A3"))
    assert not topo.has_cycle

    # two independent chains interleave by (sheet, row, column)
    g = build_graph(one_sheet({"A1": "1", "B1": "2", "A2": "=A1", "B2": "=B1"}))
    topo = topological_order(g)
    assert topo.order == (addr("A1"), addr("B1"), addr("A2"), addr("B2"))


def test_cycle_report():
    g = build_graph(one_sheet({"A1": "=B1", "B1": "=A1"}))
    topo = topological_order(g)
    assert topo.cycle_nodes == {addr("A1"), addr("B1")}

    # self-reference is a one-node cycle
    g = build_graph(one_sheet({"A1": "=A1+1"}))
    assert topological_order(g).cycle_nodes == {addr("A1")}


def test_cycle_errors_propagate_to_descendants():
    values = evaluate(
        one_sheet({"A1": "=B1", "B1": "=A1", "C1": "=B1+1", "D1": "=C1*2", "E1": "7"})
    )
    for cell in ("A1", "B1", "C1", "D1"):
        assert values[addr(cell)] == error(ErrorKind.CYCLE)
    assert values[addr("E1")] == number(7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cycle_set_matches_bruteforce_oracle(seed):
    rng = random.Random(seed)
    book = random_workbook(rng, max_cells=50)
    topo = topological_order(build_graph(book))
    assert topo.cycle_nodes == oracle_cycle_nodes(book)


def test_evaluate_examples():
    values = evaluate(one_sheet({"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)"}))
    assert values[addr("A3")] == number(5)
    assert evaluate(one_sheet({"A1": "=1/0"}))[addr("A1")] == error(ErrorKind.DIV0)
    assert evaluate(one_sheet({"A1": "=IF(TRUE,1,1/0)"}))[addr("A1")] == number(1)


def test_blank_semantics():
    values = evaluate(one_sheet({"A1": "=B7+1", "A2": "=SUM(B7:B9)", "A3": "=COUNT(B7:B9)"}))
    assert values[addr("A1")] == number(1)  # Blank coerces to 0 in arithmetic
    assert values[addr("A2")] == number(0)  # skipped by SUM
    assert values[addr("A3")] == number(0)  # skipped by COUNT
    assert values[addr("B7")] == BLANK


def test_error_propagation_through_aggregates():
    values = evaluate(one_sheet({"A1": "=1/0", "A2": "=SUM(A1:A1)", "A3": "=A2+1"}))
    assert values[addr("A2")] == error(ErrorKind.DIV0)
    assert values[addr("A3")] == error(ErrorKind.DIV0)


def test_strictness_rules():
    book = one_sheet(
        {
            "A1": "label",
            "B1": "TRUE",
            "C1": "=A1*2",  # text arithmetic
            "D1": "=B1+1",  # boolean arithmetic is refused too
            "E1": '=1="x"',  # mixed comparison
            "F1": "=AVERAGE(A1:A1)",  # no numbers at all
        }
    )
    values = evaluate(book)
    assert values[addr("C1")] == error(ErrorKind.VALUE)
    assert values[addr("D1")] == error(ErrorKind.VALUE)
    assert values[addr("E1")] == error(ErrorKind.VALUE)
    assert values[addr("F1")] == error(ErrorKind.DIV0)


def test_concat_and_text_rendering():
    values = evaluate(one_sheet({"A1": "1.5", "B1": "=A1&\" items\"", "C1": "=TRUE&\"!\""}))
    assert values[addr("B1")] == text("1.5 items")
    assert values[addr("C1")] == text("TRUE!")


def test_unknown_function_evaluates_to_name_error():
    assert evaluate(one_sheet({"A1": "=NOPE(1)"}))[addr("A1")] == error(ErrorKind.NAME)


def test_reference_locality():
    base = one_sheet({"A1": "1", "A2": "=A1*10", "Z9": "5"})
    changed = one_sheet({"A1": "1", "A2": "=A1*10", "Z9": "900"})
    assert evaluate(base)[addr("A2")] == evaluate(changed)[addr("A2")]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sum_equals_fold_of_plus(seed):
    rng = random.Random(seed)
    book = random_workbook(rng, max_cells=40)
    sheet = book.sheets[0].name
    cells = {
        CellAddress(sheet, col, row).a1(): content.canonical
        for (col, row), content in book.sheet(sheet).cells.items()
    }
    cells["Z99"] = "=SUM(A1:F8)"
    probe = one_sheet(cells, sheet=sheet)
    values = evaluate(probe)
    area = [
        values.get(CellAddress(sheet, col, row), BLANK)
        for col in range(1, 7)
        for row in range(1, 9)
    ]
    got = values[CellAddress(sheet, 26, 99)]
    if any(v.is_error() for v in area):
        assert got.is_error()
    else:
        total = sum(v.value for v in area if v.type == "number")
        assert got.type == "number" and abs(got.value - total) < 1e-9


# ---------------------------------------------------------------------------
# Expected-value rules
# ---------------------------------------------------------------------------


def test_rules_examples():
    book = one_sheet({"A1": "2", "A2": "3", "A3": "=SUM(A1:A2)", "B1": "150"})
    rules = [
        ExpectedValueRule("pct", "B1", "between", (0, 100)),
        ExpectedValueRule("total", "A3", "equals_sum_of", ("A1:A2",)),
    ]
    violations = check_rules(book, rules)
    assert len(violations) == 1
    assert violations[0].rule_id == "pct"
    assert violations[0].address == addr("B1")
    assert violations[0].observed == number(150)

    assert check_rules(book, []) == []


def test_rules_nonnegative_and_not_error():
    book = one_sheet({"A1": "-5", "B1": "=1/0"})
    violations = check_rules(
        book,
        [
            ExpectedValueRule("pos", "A1", "nonnegative"),
            ExpectedValueRule("sane", "B1", "not_error"),
        ],
    )
    assert {v.rule_id for v in violations} == {"pos", "sane"}


def test_rule_range_target():
    book = one_sheet({"A1": "1", "A2": "2", "A3": "-1"})
    violations = check_rules(book, [ExpectedValueRule("pos", "A1:A3", "nonnegative")])
    assert [v.address for v in violations] == [addr("A3")]


def test_rule_validation():
    with pytest.raises(ConfigError):
        rule_from_json({"id": "x", "target": "A1", "predicate": "sorcery", "args": []})
    with pytest.raises(ConfigError):
        rule_from_json({"id": "x", "target": "A1", "predicate": "between", "args": [1]})
    with pytest.raises(ConfigError):
        rule_from_json({"id": "x", "target": "not an addr", "predicate": "nonnegative"})
    with pytest.raises(ConfigError):
        rule_from_json({"id": "x", "target": "ZZZZ1", "predicate": "nonnegative"})
    rule = rule_from_json({"id": "ok", "target": "S1!A1", "predicate": "between", "args": [0, 1]})
    assert rule.args == (0, 1)


def test_rule_sum_tolerance():
    book = one_sheet({"A1": "0.1", "A2": "0.2", "A3": "=A1+A2"})
    rules = [ExpectedValueRule("sum", "A3", "equals_sum_of", ("A1:A2",))]
    assert check_rules(book, rules) == []  # within 1e-9 despite float noise


def test_determinism():
    rng = random.Random(99)
    book = random_workbook(rng, max_cells=60)
    assert evaluate(book) == evaluate(book)

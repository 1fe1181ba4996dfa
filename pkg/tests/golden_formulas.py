"""Hand-derived parser/evaluator golden table.

Each row is (source, expected AST, expected value) with the AST written out
by hand from the precedence rules and the value computed by hand against
the fixture grid below. Formulas are parsed and evaluated at S1!E1.

Fixture grid: S1!A1=10, A2=20, A3=30, B1=2, B2=5, C1="x", D1=TRUE;
sheet S2 exists and is empty.
"""

from scr.evaluator import ErrorKind, EvalValue, boolean, error, number, text
from scr.formulas import Binary, BoolLit, Call, NumberLit, RangeRef, Ref, Reference, TextLit, Unary

N = NumberLit
T = TextLit
B = BoolLit


def r(col, row, sheet="S1", cabs=False, rabs=False):
    return Ref(Reference(sheet, col, row, cabs, rabs))


def rr(c1, r1, c2, r2, sheet="S1"):
    return RangeRef(Reference(sheet, c1, r1), Reference(sheet, c2, r2))


FIXTURE_DOC = {
    "name": "golden",
    "sheets": [
        {
            "name": "S1",
            "cells": {
                "A1": "10",
                "A2": "20",
                "A3": "30",
                "B1": "2",
                "B2": "5",
                "C1": "x",
                "D1": "TRUE",
            },
        },
        {"name": "S2", "cells": {}},
    ],
}

ORIGIN = ("S1", 5, 1)  # E1

GOLDEN = [
    ("=1+2*3", Binary("+", N(1), Binary("*", N(2), N(3))), number(7)),
    ("=(1+2)*3", Binary("*", Binary("+", N(1), N(2)), N(3)), number(9)),
    ("=-2^2", Unary("-", Binary("^", N(2), N(2))), number(-4)),
    ("=(-2)^2", Binary("^", Unary("-", N(2)), N(2)), number(4)),
    ("=2^3^2", Binary("^", N(2), Binary("^", N(3), N(2))), number(512)),
    ("=2^-1", Binary("^", N(2), Unary("-", N(1))), number(0.5)),
    ("=10-2-3", Binary("-", Binary("-", N(10), N(2)), N(3)), number(5)),
    ("=20/2/5", Binary("/", Binary("/", N(20), N(2)), N(5)), number(2)),
    (
        "=1+2<2*2",
        Binary("<", Binary("+", N(1), N(2)), Binary("*", N(2), N(2))),
        boolean(True),
    ),
    ("=1<2=TRUE", Binary("=", Binary("<", N(1), N(2)), B(True)), boolean(True)),
    ('="a"&"b"&"c"', Binary("&", Binary("&", T("a"), T("b")), T("c")), text("abc")),
    ("=1&2", Binary("&", N(1), N(2)), text("12")),
    ('="he said ""hi"""', T('he said "hi"'), text('he said "hi"')),
    ("=A1+A2", Binary("+", r(1, 1), r(1, 2)), number(30)),
    ("=SUM(A1:A3)", Call("SUM", (rr(1, 1, 1, 3),)), number(60)),
    ("=SUM(A1:A3,B1)", Call("SUM", (rr(1, 1, 1, 3), r(2, 1))), number(62)),
    ("=AVERAGE(A1:A3)", Call("AVERAGE", (rr(1, 1, 1, 3),)), number(20)),
    ("=MIN(A1:A3)", Call("MIN", (rr(1, 1, 1, 3),)), number(10)),
    ("=MAX(A1:A3,B2)", Call("MAX", (rr(1, 1, 1, 3), r(2, 2))), number(30)),
    ("=COUNT(A1:B3)", Call("COUNT", (rr(1, 1, 2, 3),)), number(5)),
    ("=COUNTA(A1:D1)", Call("COUNTA", (rr(1, 1, 4, 1),)), number(4)),
    (
        '=IF(A1>5,"big","small")',
        Call("IF", (Binary(">", r(1, 1), N(5)), T("big"), T("small"))),
        text("big"),
    ),
    (
        "=IF(FALSE,1/0,42)",
        Call("IF", (B(False), Binary("/", N(1), N(0)), N(42))),
        number(42),
    ),
    ("=IF(TRUE,1,1/0)", Call("IF", (B(True), N(1), Binary("/", N(1), N(0)))), number(1)),
    ("=1/0", Binary("/", N(1), N(0)), error(ErrorKind.DIV0)),
    ("=C1+1", Binary("+", r(3, 1), N(1)), error(ErrorKind.VALUE)),
    ("=NOT(D1)", Call("NOT", (r(4, 1),)), boolean(False)),
    (
        "=AND(TRUE,A1>5)",
        Call("AND", (B(True), Binary(">", r(1, 1), N(5)))),
        boolean(True),
    ),
    ("=OR(FALSE,FALSE)", Call("OR", (B(False), B(False))), boolean(False)),
    ("=ABS(-5)", Call("ABS", (Unary("-", N(5)),)), number(5)),
    ("=ROUND(2.5)", Call("ROUND", (N(2.5),)), number(3)),
    ("=ROUND(-2.5)", Call("ROUND", (Unary("-", N(2.5)),)), number(-3)),
    ("=ROUND(1.2345,2)", Call("ROUND", (N(1.2345), N(2))), number(1.23)),
    ("=FOO(1)", Call("FOO", (N(1),)), error(ErrorKind.NAME)),
    ("=SUM(C1:D1)", Call("SUM", (rr(3, 1, 4, 1),)), number(0)),
    ("=--3", Unary("-", Unary("-", N(3))), number(3)),
    ("=2*-3", Binary("*", N(2), Unary("-", N(3))), number(-6)),
    (
        "=$A$1+A2",
        Binary("+", r(1, 1, cabs=True, rabs=True), r(1, 2)),
        number(30),
    ),
    ("=S2!Z9+1", Binary("+", r(26, 9, sheet="S2"), N(1)), number(1)),
    ("=1<>2", Binary("<>", N(1), N(2)), boolean(True)),
    ('="a"<1', Binary("<", T("a"), N(1)), error(ErrorKind.VALUE)),
    ("=B1^B2", Binary("^", r(2, 1), r(2, 2)), number(32)),
]

assert len(GOLDEN) >= 25


def eval_in_fixture(source: str) -> EvalValue:
    """Drop the formula into E1 of the fixture grid and evaluate it there."""
    import copy

    from scr.evaluator import evaluate
    from scr.grid import parse_workbook
    from scr.jsonutil import canonical_json
    from scr.addresses import CellAddress

    doc = copy.deepcopy(FIXTURE_DOC)
    doc["sheets"][0]["cells"]["E1"] = source
    workbook = parse_workbook(canonical_json(doc))
    return evaluate(workbook)[CellAddress("S1", 5, 1)]

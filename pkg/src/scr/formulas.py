"""Formula language: scanner, parser, canonical printers, reference analysis.

Grammar (operators loosest to tightest): comparisons, ``&``, ``+ -``,
``* /``, unary ``-``, ``^``. ``^`` is right-associative and binds tighter
than unary minus, so ``=-2^2`` is ``-(2^2)``; all other binary levels are
left-associative. Atoms are numbers, double-quoted strings (``""`` escapes
a quote), booleans, cell/range references, function calls, and
parenthesized expressions.

Two canonical renderings exist:

* :func:`render_formula` - A1-style text (uppercase functions, no spaces,
  same-sheet prefixes suppressed). Parsing it reproduces the AST.
* :func:`normalize` - the position-independent normal form in which
  relative references become ``R[dr]C[dc]`` offsets from the host cell and
  absolute components become fixed ordinals. Copies of one formula share
  one normal form.
"""

import re
from dataclasses import dataclass

from .addresses import (
    MAX_COLUMNS,
    MAX_ROWS,
    CellAddress,
    column_to_letters,
    letters_to_column,
)
from .errors import AnalysisError, FormulaParseError
from .jsonutil import render_number

KNOWN_FUNCTIONS = frozenset(
    {"SUM", "AVERAGE", "MIN", "MAX", "COUNT", "COUNTA", "IF", "ABS", "ROUND", "AND", "OR", "NOT"}
)

#: Number literals that do not count as magic constants by default.
DEFAULT_MAGIC_WHITELIST = frozenset({0.0, 1.0, -1.0, 100.0})

#: Largest rectangle a single range reference may expand to.
MAX_RANGE_CELLS = 1_048_576


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Reference:
    """A single cell reference with its sheet context resolved."""

    sheet: str
    column: int
    row: int
    column_absolute: bool = False
    row_absolute: bool = False

    def address(self) -> CellAddress:
        return CellAddress(self.sheet, self.column, self.row)


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Ref:
    ref: Reference


@dataclass(frozen=True)
class RangeRef:
    start: Reference
    end: Reference


@dataclass(frozen=True)
class Unary:
    op: str
    child: "FormulaAst"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


FormulaAst = NumberLit | TextLit | BoolLit | Ref | RangeRef | Unary | Binary | Call


def is_known_function(name: str) -> bool:
    return name.upper() in KNOWN_FUNCTIONS


# ---------------------------------------------------------------------------
# Scanner
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_REF_RE = re.compile(
    r"(?:(?P<sheet>[A-Za-z_][A-Za-z0-9_]*)!)?"
    r"(?P<cabs>\$?)(?P<col>[A-Za-z]+)(?P<rabs>\$?)(?P<row>[0-9]+)"
    r"(?![A-Za-z0-9_$])"
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TWO_CHAR_OPS = ("<>", "<=", ">=")
_ONE_CHAR_OPS = "=<>&+-*/^(),:"


@dataclass(frozen=True)
class _Token:
    kind: str  # number | string | ref | ident | op | end
    value: object
    pos: int


def _scan(source: str, offset: int) -> list[_Token]:
    """Tokenize formula body text; `offset` shifts reported positions."""
    tokens: list[_Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == '"':
            j = i + 1
            parts: list[str] = []
            while True:
                if j >= n:
                    raise FormulaParseError("unterminated string literal", offset + i)
                if source[j] == '"':
                    if j + 1 < n and source[j + 1] == '"':
                        parts.append('"')
                        j += 2
                        continue
                    break
                parts.append(source[j])
                j += 1
            tokens.append(_Token("string", "".join(parts), offset + i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER_RE.match(source, i)
            tokens.append(_Token("number", float(m.group()), offset + i))
            i = m.end()
            continue
        if ch.isalpha() or ch in "_$":
            m = _REF_RE.match(source, i)
            if m is not None:
                column = letters_to_column(m.group("col"))
                row = int(m.group("row"))
                if column > MAX_COLUMNS or row > MAX_ROWS or row < 1:
                    raise FormulaParseError(
                        f"reference {m.group(0)!r} beyond grid bounds", offset + i
                    )
                tokens.append(
                    _Token(
                        "ref",
                        (m.group("sheet"), bool(m.group("cabs")), column, bool(m.group("rabs")), row),
                        offset + i,
                    )
                )
                i = m.end()
                continue
            if ch == "$":
                raise FormulaParseError("unexpected '$'", offset + i)
            m = _IDENT_RE.match(source, i)
            tokens.append(_Token("ident", m.group(), offset + i))
            i = m.end()
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("op", two, offset + i))
            i += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(_Token("op", ch, offset + i))
            i += 1
            continue
        raise FormulaParseError(f"unexpected character {ch!r}", offset + i)
    tokens.append(_Token("end", None, offset + n))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens: list[_Token], origin: CellAddress):
        self.tokens = tokens
        self.origin = origin
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.value != op:
            raise FormulaParseError(f"expected {op!r}", tok.pos)
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def parse(self) -> FormulaAst:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            if tok.kind == "op" and tok.value == ")":
                raise FormulaParseError("unbalanced ')'", tok.pos)
            raise FormulaParseError("unexpected trailing input", tok.pos)
        return node

    def expr(self) -> FormulaAst:
        node = self.concat()
        while self.at_op(*_CMP_OPS):
            op = self.advance().value
            node = Binary(op, node, self.concat())
        return node

    def concat(self) -> FormulaAst:
        node = self.add()
        while self.at_op("&"):
            self.advance()
            node = Binary("&", node, self.add())
        return node

    def add(self) -> FormulaAst:
        node = self.mul()
        while self.at_op("+", "-"):
            op = self.advance().value
            node = Binary(op, node, self.mul())
        return node

    def mul(self) -> FormulaAst:
        node = self.unary()
        while self.at_op("*", "/"):
            op = self.advance().value
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> FormulaAst:
        if self.at_op("-"):
            self.advance()
            return Unary("-", self.unary())
        return self.pow()

    def pow(self) -> FormulaAst:
        node = self.atom()
        if self.at_op("^"):
            self.advance()
            node = Binary("^", node, self.unary())
        return node

    def atom(self) -> FormulaAst:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return NumberLit(tok.value)
        if tok.kind == "string":
            self.advance()
            return TextLit(tok.value)
        if tok.kind == "ref":
            return self.reference()
        if tok.kind == "ident":
            return self.ident_atom()
        if tok.kind == "op" and tok.value == "(":
            self.advance()
            node = self.expr()
            tok = self.peek()
            if not self.at_op(")"):
                raise FormulaParseError("unbalanced '('", tok.pos)
            self.advance()
            return node
        raise FormulaParseError("expected a value, reference, or '('", tok.pos)

    def reference(self) -> FormulaAst:
        tok = self.advance()
        sheet, cabs, col, rabs, row = tok.value
        start = Reference(sheet or self.origin.sheet, col, row, cabs, rabs)
        if not self.at_op(":"):
            return Ref(start)
        self.advance()
        end_tok = self.peek()
        if end_tok.kind != "ref":
            raise FormulaParseError("expected range end reference after ':'", end_tok.pos)
        self.advance()
        esheet, ecabs, ecol, erabs, erow = end_tok.value
        if esheet is not None and esheet != start.sheet:
            raise FormulaParseError("range endpoints must lie on the same sheet", end_tok.pos)
        end = Reference(start.sheet, ecol, erow, ecabs, erabs)
        return RangeRef(start, end)

    def ident_atom(self) -> FormulaAst:
        tok = self.advance()
        name = tok.value
        if self.at_op("("):
            return self.call(name, tok.pos)
        if name.upper() == "TRUE":
            return BoolLit(True)
        if name.upper() == "FALSE":
            return BoolLit(False)
        raise FormulaParseError(f"unknown name {name!r}", tok.pos)

    def call(self, name: str, pos: int) -> FormulaAst:
        self.expect_op("(")
        args: list[FormulaAst] = []
        if self.at_op(")"):
            self.advance()
        else:
            while True:
                args.append(self.expr())
                if self.at_op(","):
                    self.advance()
                    continue
                if self.at_op(")"):
                    self.advance()
                    break
                raise FormulaParseError("expected ',' or ')' in argument list", self.peek().pos)
        upper = name.upper()
        if upper in KNOWN_FUNCTIONS and not args:
            raise FormulaParseError(f"{upper} requires at least one argument", pos)
        return Call(upper, tuple(args))


def parse_formula(source: str, origin: CellAddress) -> FormulaAst:
    """Parse a formula source string (must begin with ``=``)."""
    if not source.startswith("="):
        raise FormulaParseError("formula source must begin with '='", 0)
    tokens = _scan(source[1:], 1)
    if tokens[0].kind == "end":
        raise FormulaParseError("empty formula", 1)
    return _Parser(tokens, origin).parse()


# ---------------------------------------------------------------------------
# Canonical printers
# ---------------------------------------------------------------------------

_PREC_CMP = 1
_PREC_CONCAT = 2
_PREC_ADD = 3
_PREC_MUL = 4
_PREC_UNARY = 5
_PREC_POW = 6
_PREC_ATOM = 7

_BINARY_PREC = {
    "=": _PREC_CMP,
    "<>": _PREC_CMP,
    "<": _PREC_CMP,
    "<=": _PREC_CMP,
    ">": _PREC_CMP,
    ">=": _PREC_CMP,
    "&": _PREC_CONCAT,
    "+": _PREC_ADD,
    "-": _PREC_ADD,
    "*": _PREC_MUL,
    "/": _PREC_MUL,
    "^": _PREC_POW,
}


def _prec(node: FormulaAst) -> int:
    if isinstance(node, Binary):
        return _BINARY_PREC[node.op]
    if isinstance(node, Unary):
        return _PREC_UNARY
    return _PREC_ATOM


def _render(node: FormulaAst, ref_fn) -> str:
    if isinstance(node, NumberLit):
        return render_number(node.value)
    if isinstance(node, TextLit):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, BoolLit):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, Ref):
        return ref_fn(node.ref, True)
    if isinstance(node, RangeRef):
        return ref_fn(node.start, True) + ":" + ref_fn(node.end, False)
    if isinstance(node, Unary):
        child = _render(node.child, ref_fn)
        if _prec(node.child) < _PREC_UNARY:
            child = f"({child})"
        return node.op + child
    if isinstance(node, Binary):
        level = _BINARY_PREC[node.op]
        left = _render(node.left, ref_fn)
        right = _render(node.right, ref_fn)
        if node.op == "^":  # right-associative
            if _prec(node.left) <= level:
                left = f"({left})"
            if _prec(node.right) < level:
                right = f"({right})"
        else:
            if _prec(node.left) < level:
                left = f"({left})"
            if _prec(node.right) <= level:
                right = f"({right})"
        return left + node.op + right
    if isinstance(node, Call):
        return node.name + "(" + ",".join(_render(a, ref_fn) for a in node.args) + ")"
    raise TypeError(f"not a formula node: {node!r}")


def render_formula(ast: FormulaAst, origin: CellAddress) -> str:
    """Canonical A1-style body text (no leading ``=``)."""

    def ref_a1(ref: Reference, with_sheet: bool) -> str:
        prefix = f"{ref.sheet}!" if with_sheet and ref.sheet != origin.sheet else ""
        cabs = "$" if ref.column_absolute else ""
        rabs = "$" if ref.row_absolute else ""
        return f"{prefix}{cabs}{column_to_letters(ref.column)}{rabs}{ref.row}"

    return _render(ast, ref_a1)


@dataclass(frozen=True)
class NormalForm:
    """Position-independent canonical text of a formula."""

    text: str


def normalize(ast: FormulaAst, origin: CellAddress) -> NormalForm:
    """Offset-encode relative references so formula copies compare equal."""

    def ref_r1c1(ref: Reference, with_sheet: bool) -> str:
        prefix = f"{ref.sheet}!" if with_sheet and ref.sheet != origin.sheet else ""
        row = f"R{ref.row}" if ref.row_absolute else f"R[{ref.row - origin.row}]"
        col = f"C{ref.column}" if ref.column_absolute else f"C[{ref.column - origin.column}]"
        return prefix + row + col

    return NormalForm(_render(ast, ref_r1c1))


# ---------------------------------------------------------------------------
# Reference analysis and formula measures
# ---------------------------------------------------------------------------


def expand_range(node: RangeRef) -> list[CellAddress]:
    """All addresses in the range's rectangle, row-major, corners normalized."""
    row_lo, row_hi = sorted((node.start.row, node.end.row))
    col_lo, col_hi = sorted((node.start.column, node.end.column))
    area = (row_hi - row_lo + 1) * (col_hi - col_lo + 1)
    if area > MAX_RANGE_CELLS:
        raise AnalysisError(
            f"range expands to {area} cells, beyond the supported {MAX_RANGE_CELLS}"
        )
    sheet = node.start.sheet
    return [
        CellAddress(sheet, col, row)
        for row in range(row_lo, row_hi + 1)
        for col in range(col_lo, col_hi + 1)
    ]


def walk(ast: FormulaAst):
    """Yield every node of the tree, preorder."""
    yield ast
    if isinstance(ast, Unary):
        yield from walk(ast.child)
    elif isinstance(ast, Binary):
        yield from walk(ast.left)
        yield from walk(ast.right)
    elif isinstance(ast, Call):
        for arg in ast.args:
            yield from walk(arg)


def extract_references(ast: FormulaAst, origin: CellAddress) -> set[CellAddress]:
    """Every cell the formula reads: plain refs plus expanded range rectangles."""
    refs: set[CellAddress] = set()
    for node in walk(ast):
        if isinstance(node, Ref):
            refs.add(node.ref.address())
        elif isinstance(node, RangeRef):
            refs.update(expand_range(node))
    return refs


def formula_length(ast: FormulaAst) -> int:
    """Total AST node count, the size measure of one formula."""
    return sum(1 for _ in walk(ast))


def count_magic_constants(ast: FormulaAst, whitelist: frozenset | set = DEFAULT_MAGIC_WHITELIST) -> int:
    """Occurrences (not distinct values) of number literals outside the whitelist."""
    return sum(
        1 for node in walk(ast) if isinstance(node, NumberLit) and node.value not in whitelist
    )


def unknown_functions(ast: FormulaAst) -> set[str]:
    """Names of called functions outside the supported set."""
    return {
        node.name for node in walk(ast) if isinstance(node, Call) and node.name not in KNOWN_FUNCTIONS
    }

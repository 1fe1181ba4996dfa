"""Cell dependency graph, formula evaluation, and expected-value rules.

Evaluation is a pure function of the workbook: literals evaluate to
themselves, formulas evaluate bottom-up in dependency order, cells on
reference cycles (and everything downstream of them) evaluate to a CYCLE
error. Referenced empty cells read as Blank, which coerces to 0 in
arithmetic and is skipped by aggregates.

Coercion is strict: text never silently becomes a number, and arithmetic
on Text or Boolean operands yields a VALUE error, as do mixed-type
comparisons. ``IF`` is lazy (only the taken branch is evaluated).
"""

import heapq
from dataclasses import dataclass
from enum import Enum

from .addresses import CellAddress, parse_address
from .errors import ConfigError, FormulaParseError
from .formulas import (
    Binary,
    BoolLit,
    Call,
    NumberLit,
    RangeRef,
    Ref,
    TextLit,
    Unary,
    expand_range,
    extract_references,
)
from .grid import CellKind, Workbook
from .jsonutil import render_number


class ErrorKind(Enum):
    DIV0 = "DIV0"
    VALUE = "VALUE"
    CYCLE = "CYCLE"
    NAME = "NAME"


@dataclass(frozen=True)
class EvalValue:
    """Number, Text, Boolean, Blank, or Error. Errors carry their kind."""

    type: str  # "number" | "text" | "boolean" | "blank" | "error"
    value: float | str | bool | None = None

    def is_error(self) -> bool:
        return self.type == "error"

    def to_json(self) -> dict:
        return {"type": self.type, "value": self.value}

    def render(self) -> str:
        if self.type == "number":
            return render_number(self.value)
        if self.type == "text":
            return self.value
        if self.type == "boolean":
            return "TRUE" if self.value else "FALSE"
        if self.type == "blank":
            return ""
        return f"#{self.value}!"


BLANK = EvalValue("blank")


def number(value: float) -> EvalValue:
    return EvalValue("number", float(value))


def text(value: str) -> EvalValue:
    return EvalValue("text", value)


def boolean(value: bool) -> EvalValue:
    return EvalValue("boolean", bool(value))


def error(kind: ErrorKind) -> EvalValue:
    return EvalValue("error", kind.value)


_VALUE_ERR = error(ErrorKind.VALUE)
_DIV0_ERR = error(ErrorKind.DIV0)
_NAME_ERR = error(ErrorKind.NAME)
_CYCLE_ERR = error(ErrorKind.CYCLE)


# ---------------------------------------------------------------------------
# Dependency graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DependencyGraph:
    """Directed edges u -> v whenever the formula at v reads u."""

    nodes: tuple  # sorted CellAddress tuple
    inputs: dict  # v -> tuple of u (sorted)
    dependents: dict  # u -> tuple of v (sorted)

    def fan_in(self, address: CellAddress) -> int:
        return len(self.inputs.get(address, ()))

    def fan_out(self, address: CellAddress) -> int:
        return len(self.dependents.get(address, ()))


def build_graph(workbook: Workbook) -> DependencyGraph:
    """Nodes are all non-empty cells plus any referenced empty cells."""
    nodes: set[CellAddress] = set()
    inputs: dict[CellAddress, set] = {}
    dependents: dict[CellAddress, set] = {}
    for address, content in workbook.iter_cells():
        nodes.add(address)
        if content.kind is CellKind.FORMULA:
            refs = extract_references(content.ast, address)
            inputs[address] = refs
            for ref in refs:
                nodes.add(ref)
                dependents.setdefault(ref, set()).add(address)
    ordered = tuple(sorted(nodes, key=CellAddress.sort_key))
    return DependencyGraph(
        nodes=ordered,
        inputs={v: tuple(sorted(refs, key=CellAddress.sort_key)) for v, refs in inputs.items()},
        dependents={
            u: tuple(sorted(vs, key=CellAddress.sort_key)) for u, vs in dependents.items()
        },
    )


@dataclass(frozen=True)
class TopoResult:
    """Evaluation order plus the cycle report.

    ``order`` lists every node that does not sit on or downstream of a
    cycle, inputs before dependents, ties broken by (sheet, row, column).
    ``cycle_nodes`` lists every node on at least one cycle; ``blocked``
    additionally includes their transitive dependents.
    """

    order: tuple
    cycle_nodes: frozenset
    blocked: frozenset

    @property
    def has_cycle(self) -> bool:
        return bool(self.cycle_nodes)


def topological_order(graph: DependencyGraph) -> TopoResult:
    indegree = {node: len(graph.inputs.get(node, ())) for node in graph.nodes}
    heap = [node.sort_key() + (node,) for node in graph.nodes if indegree[node] == 0]
    heapq.heapify(heap)
    order: list[CellAddress] = []
    while heap:
        node = heapq.heappop(heap)[-1]
        order.append(node)
        for dependent in graph.dependents.get(node, ()):
            indegree[dependent] -= 1
            if indegree[dependent] == 0:
                heapq.heappush(heap, dependent.sort_key() + (dependent,))
    blocked = frozenset(node for node in graph.nodes if indegree[node] > 0)
    return TopoResult(
        order=tuple(order),
        cycle_nodes=frozenset(_nodes_on_cycles(graph, blocked)),
        blocked=blocked,
    )


def _nodes_on_cycles(graph: DependencyGraph, candidates: frozenset) -> set:
    """Strongly connected components of size > 1 (self-references cannot
    occur: a formula referencing its own cell is its own input, forming a
    2-node SCC is impossible, but a 1-node self-loop is, so check edges)."""
    index: dict[CellAddress, int] = {}
    lowlink: dict[CellAddress, int] = {}
    on_stack: set[CellAddress] = set()
    stack: list[CellAddress] = []
    counter = [0]
    result: set[CellAddress] = set()

    def out_edges(node):
        return graph.dependents.get(node, ())

    for root in sorted(candidates, key=CellAddress.sort_key):
        if root in index:
            continue
        work = [(root, iter(out_edges(root)))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, edges = work[-1]
            advanced = False
            for nxt in edges:
                if nxt not in candidates:
                    continue
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(out_edges(nxt))))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    result.update(component)
                elif component[0] in graph.inputs.get(component[0], ()):
                    result.add(component[0])
    return result


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class _Range:
    """Internal marker for a range argument; only aggregates accept these."""

    __slots__ = ("addresses",)

    def __init__(self, addresses):
        self.addresses = addresses


def _as_number(value: EvalValue) -> float | EvalValue:
    if value.is_error():
        return value
    if value.type == "number":
        return value.value
    if value.type == "blank":
        return 0.0
    return _VALUE_ERR


def _as_text(value: EvalValue) -> str | EvalValue:
    if value.is_error():
        return value
    if value.type == "blank":
        return ""
    return value.render() if value.type != "text" else value.value


def _finite(result: float) -> EvalValue:
    if result != result or result in (float("inf"), float("-inf")):
        return _VALUE_ERR
    return number(result)


def _arith(op: str, left: float, right: float) -> EvalValue:
    if op == "+":
        return _finite(left + right)
    if op == "-":
        return _finite(left - right)
    if op == "*":
        return _finite(left * right)
    if op == "/":
        if right == 0:
            return _DIV0_ERR
        return _finite(left / right)
    if op == "^":
        try:
            result = left**right
        except (OverflowError, ZeroDivisionError):
            return _VALUE_ERR if right > 0 or left != 0 else _DIV0_ERR
        if isinstance(result, complex):
            return _VALUE_ERR
        return _finite(result)
    raise ValueError(f"not an arithmetic operator: {op}")


def _compare(op: str, left: EvalValue, right: EvalValue) -> EvalValue:
    for side in (left, right):
        if side.is_error():
            return side
    # Blank joins numeric comparisons as 0; any other mixing is an error.
    if left.type == "blank" and right.type in ("number", "blank"):
        left = number(0.0)
    if right.type == "blank" and left.type == "number":
        right = number(0.0)
    if left.type != right.type:
        return _VALUE_ERR
    a, b = left.value, right.value
    if left.type == "boolean" and op not in ("=", "<>"):
        a, b = int(a), int(b)  # FALSE orders before TRUE
    if op == "=":
        return boolean(a == b)
    if op == "<>":
        return boolean(a != b)
    if op == "<":
        return boolean(a < b)
    if op == "<=":
        return boolean(a <= b)
    if op == ">":
        return boolean(a > b)
    if op == ">=":
        return boolean(a >= b)
    raise ValueError(f"not a comparison operator: {op}")


def _truthy(value: EvalValue) -> bool | EvalValue:
    if value.is_error():
        return value
    if value.type == "boolean":
        return value.value
    if value.type == "number":
        return value.value != 0
    if value.type == "blank":
        return False
    return _VALUE_ERR


class _Evaluator:
    def __init__(self, origin: CellAddress, env):
        self.origin = origin
        self.env = env

    def eval(self, node) -> EvalValue | _Range:
        if isinstance(node, NumberLit):
            return number(node.value)
        if isinstance(node, TextLit):
            return text(node.value)
        if isinstance(node, BoolLit):
            return boolean(node.value)
        if isinstance(node, Ref):
            return self.env(node.ref.address())
        if isinstance(node, RangeRef):
            return _Range(expand_range(node))
        if isinstance(node, Unary):
            operand = self.scalar(node.child)
            if operand.is_error():
                return operand
            value = _as_number(operand)
            if isinstance(value, EvalValue):
                return value
            return _finite(-value)
        if isinstance(node, Binary):
            return self.binary(node)
        if isinstance(node, Call):
            return self.call(node)
        raise TypeError(f"not a formula node: {node!r}")

    def scalar(self, node) -> EvalValue:
        value = self.eval(node)
        if isinstance(value, _Range):
            return _VALUE_ERR
        return value

    def binary(self, node: Binary) -> EvalValue:
        left = self.scalar(node.left)
        if node.op in ("+", "-", "*", "/", "^"):
            right = self.scalar(node.right)
            lnum = _as_number(left)
            if isinstance(lnum, EvalValue):
                return lnum
            rnum = _as_number(right)
            if isinstance(rnum, EvalValue):
                return rnum
            return _arith(node.op, lnum, rnum)
        if node.op == "&":
            right = self.scalar(node.right)
            ltext = _as_text(left)
            if isinstance(ltext, EvalValue):
                return ltext
            rtext = _as_text(right)
            if isinstance(rtext, EvalValue):
                return rtext
            return text(ltext + rtext)
        return _compare(node.op, left, self.scalar(node.right))

    def flatten(self, args, skip_scalar_nonnumeric=False):
        """Yield scalar EvalValues from scalar args and range elements.

        Range elements arrive row-major; the caller decides what to keep.
        Yields (value, from_range) pairs; errors must be checked by callers.
        """
        for arg in args:
            value = self.eval(arg)
            if isinstance(value, _Range):
                for address in value.addresses:
                    yield self.env(address), True
            else:
                yield value, False

    def numeric_fold(self, args) -> list[float] | EvalValue:
        """Numbers contributed by args: scalars must be numeric (Blank skipped),
        range elements are filtered to numbers. Errors propagate."""
        numbers: list[float] = []
        for value, from_range in self.flatten(args):
            if value.is_error():
                return value
            if value.type == "number":
                numbers.append(value.value)
            elif value.type == "blank":
                continue
            elif from_range:
                continue  # text/boolean inside a range are labels, skipped
            else:
                return _VALUE_ERR
        return numbers

    def call(self, node: Call) -> EvalValue:
        name = node.name
        if name == "IF":
            if len(node.args) not in (2, 3):
                return _VALUE_ERR
            cond = _truthy(self.scalar(node.args[0]))
            if isinstance(cond, EvalValue):
                return cond
            if cond:
                return self.scalar(node.args[1])
            if len(node.args) == 3:
                return self.scalar(node.args[2])
            return boolean(False)
        if name in ("SUM", "AVERAGE", "MIN", "MAX"):
            numbers = self.numeric_fold(node.args)
            if isinstance(numbers, EvalValue):
                return numbers
            if name == "SUM":
                return _finite(sum(numbers))
            if name == "AVERAGE":
                if not numbers:
                    return _DIV0_ERR
                return _finite(sum(numbers) / len(numbers))
            if not numbers:
                return number(0.0)
            return number(min(numbers) if name == "MIN" else max(numbers))
        if name == "COUNT":
            count = 0
            for value, _ in self.flatten(node.args):
                if value.is_error():
                    return value
                if value.type == "number":
                    count += 1
            return number(count)
        if name == "COUNTA":
            count = 0
            for value, _ in self.flatten(node.args):
                if value.is_error():
                    return value
                if value.type != "blank":
                    count += 1
            return number(count)
        if name == "ABS":
            if len(node.args) != 1:
                return _VALUE_ERR
            value = _as_number(self.scalar(node.args[0]))
            if isinstance(value, EvalValue):
                return value
            return _finite(abs(value))
        if name == "ROUND":
            if len(node.args) not in (1, 2):
                return _VALUE_ERR
            value = _as_number(self.scalar(node.args[0]))
            if isinstance(value, EvalValue):
                return value
            digits = 0.0
            if len(node.args) == 2:
                digits = _as_number(self.scalar(node.args[1]))
                if isinstance(digits, EvalValue):
                    return digits
            return _finite(_round_half_away(value, int(digits)))
        if name in ("AND", "OR"):
            flags: list[bool] = []
            for value, from_range in self.flatten(node.args):
                if value.is_error():
                    return value
                if value.type == "blank":
                    continue
                if value.type == "text":
                    if from_range:
                        continue
                    return _VALUE_ERR
                flags.append(value.value != 0 if value.type == "number" else value.value)
            if not flags:
                return _VALUE_ERR
            return boolean(all(flags) if name == "AND" else any(flags))
        if name == "NOT":
            if len(node.args) != 1:
                return _VALUE_ERR
            flag = _truthy(self.scalar(node.args[0]))
            if isinstance(flag, EvalValue):
                return flag
            return boolean(not flag)
        return _NAME_ERR


def _round_half_away(value: float, digits: int) -> float:
    scale = 10.0**digits
    scaled = value * scale
    import math

    if scaled >= 0:
        return math.floor(scaled + 0.5) / scale
    return -math.floor(-scaled + 0.5) / scale


def evaluate(workbook: Workbook) -> dict:
    """Map every graph node (non-empty and referenced cells) to its value."""
    graph = build_graph(workbook)
    topo = topological_order(graph)
    results: dict[CellAddress, EvalValue] = {}
    for address in topo.blocked:
        results[address] = _CYCLE_ERR

    def env(address: CellAddress) -> EvalValue:
        return results.get(address, BLANK)

    for address in topo.order:
        content = workbook.get_cell(address)
        if content.kind is CellKind.EMPTY:
            results[address] = BLANK
        elif content.kind is CellKind.NUMBER:
            results[address] = number(content.literal)
        elif content.kind is CellKind.TEXT:
            results[address] = text(content.literal)
        elif content.kind is CellKind.BOOLEAN:
            results[address] = boolean(content.literal)
        else:
            value = _Evaluator(address, env).eval(content.ast)
            results[address] = _VALUE_ERR if isinstance(value, _Range) else value
    return results


# ---------------------------------------------------------------------------
# Expected-value rules
# ---------------------------------------------------------------------------

PREDICATES = ("between", "nonnegative", "equals_sum_of", "not_error")

#: Absolute tolerance for sum-equality checks; a declared decision, not a
#: measured constant.
DEFAULT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ExpectedValueRule:
    id: str
    target: str  # address or range text, optionally sheet-qualified
    predicate: str
    args: tuple = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "target": self.target,
            "predicate": self.predicate,
            "args": list(self.args),
        }


@dataclass(frozen=True)
class RuleViolation:
    rule_id: str
    address: CellAddress
    observed: EvalValue
    message: str

    def to_json(self) -> dict:
        return {
            "rule": self.rule_id,
            "address": self.address.qualified(),
            "observed": self.observed.to_json(),
            "message": self.message,
        }


def rule_from_json(obj: dict) -> ExpectedValueRule:
    try:
        rule = ExpectedValueRule(
            id=str(obj["id"]),
            target=str(obj["target"]),
            predicate=str(obj["predicate"]),
            args=tuple(obj.get("args", ())),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed rule object: {obj!r}") from exc
    _validate_rule(rule)
    return rule


def _validate_rule(rule: ExpectedValueRule) -> None:
    if rule.predicate not in PREDICATES:
        raise ConfigError(f"rule {rule.id!r}: unknown predicate {rule.predicate!r}")
    if rule.predicate == "between":
        if len(rule.args) != 2 or not all(isinstance(a, (int, float)) for a in rule.args):
            raise ConfigError(f"rule {rule.id!r}: between requires two numeric bounds")
    elif rule.predicate == "equals_sum_of":
        if len(rule.args) != 1 or not isinstance(rule.args[0], str):
            raise ConfigError(f"rule {rule.id!r}: equals_sum_of requires one range argument")
    elif rule.args:
        raise ConfigError(f"rule {rule.id!r}: {rule.predicate} takes no arguments")
    _parse_target(rule.target, "Sheet1", rule.id)  # syntax check only


def _parse_target(target: str, default_sheet: str, rule_id: str) -> list[CellAddress]:
    try:
        if ":" in target:
            start_text, end_text = target.split(":", 1)
            start = parse_address(start_text, default_sheet)
            end = parse_address(end_text, start.sheet)
            if "!" in end_text and end.sheet != start.sheet:
                raise ConfigError(f"rule {rule_id!r}: range endpoints on different sheets")
            row_lo, row_hi = sorted((start.row, end.row))
            col_lo, col_hi = sorted((start.column, end.column))
            return [
                CellAddress(start.sheet, col, row)
                for row in range(row_lo, row_hi + 1)
                for col in range(col_lo, col_hi + 1)
            ]
        return [parse_address(target, default_sheet)]
    except FormulaParseError as exc:
        raise ConfigError(f"rule {rule_id!r}: bad target {target!r}: {exc}") from exc


def check_rules(
    workbook: Workbook,
    rules: list,
    tolerance: float = DEFAULT_SUM_TOLERANCE,
) -> list:
    """Evaluate the workbook and return every rule violation found."""
    if not rules:
        return []
    values = evaluate(workbook)
    default_sheet = workbook.sheets[0].name if workbook.sheets else "Sheet1"
    violations: list[RuleViolation] = []
    for rule in rules:
        targets = _parse_target(rule.target, default_sheet, rule.id)
        for address in targets:
            observed = values.get(address, BLANK)
            failure = _check_one(rule, address, observed, values, default_sheet, tolerance)
            if failure is not None:
                violations.append(RuleViolation(rule.id, address, observed, failure))
    return violations


def _check_one(rule, address, observed, values, default_sheet, tolerance):
    if rule.predicate == "not_error":
        return "value is an error" if observed.is_error() else None
    if observed.is_error():
        return f"value is an error ({observed.value})"
    numeric = _as_number(observed)
    if isinstance(numeric, EvalValue):
        return f"expected a numeric value, found {observed.type}"
    if rule.predicate == "between":
        lo, hi = rule.args
        if not (lo <= numeric <= hi):
            return f"value {render_number(numeric)} outside [{lo}, {hi}]"
        return None
    if rule.predicate == "nonnegative":
        if numeric < 0:
            return f"value {render_number(numeric)} is negative"
        return None
    if rule.predicate == "equals_sum_of":
        total = 0.0
        for cell in _parse_target(rule.args[0], default_sheet, rule.id):
            value = values.get(cell, BLANK)
            if value.is_error():
                return f"summand {cell.qualified()} is an error"
            if value.type == "number":
                total += value.value
        if abs(numeric - total) > tolerance:
            return f"value {render_number(numeric)} != sum {render_number(total)}"
        return None
    raise ConfigError(f"unknown predicate {rule.predicate!r}")

"""Cell addressing: A1-style coordinates, column letter arithmetic, grid bounds."""

import re
from dataclasses import dataclass

from .errors import FormulaParseError

MAX_COLUMNS = 16384  # column XFD
MAX_ROWS = 1_048_576

_ADDRESS_RE = re.compile(
    r"^(?:(?P<sheet>[A-Za-z_][A-Za-z0-9_]*)!)?"
    r"(?P<cabs>\$?)(?P<col>[A-Za-z]+)(?P<rabs>\$?)(?P<row>[0-9]+)$"
)


def letters_to_column(letters: str) -> int:
    """Base-26 column letters to 1-based ordinal: A=1, Z=26, AA=27."""
    col = 0
    for ch in letters.upper():
        col = col * 26 + (ord(ch) - ord("A") + 1)
    return col


def column_to_letters(col: int) -> str:
    if col < 1:
        raise ValueError(f"column ordinal must be >= 1, got {col}")
    letters = ""
    while col:
        col, rem = divmod(col - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


@dataclass(frozen=True, order=False)
class CellAddress:
    """A single cell position. Column and row are 1-based ordinals."""

    sheet: str
    column: int
    row: int

    def __post_init__(self):
        if not self.sheet:
            raise ValueError("sheet name must be non-empty")
        if not 1 <= self.column <= MAX_COLUMNS:
            raise ValueError(f"column {self.column} outside 1..{MAX_COLUMNS}")
        if not 1 <= self.row <= MAX_ROWS:
            raise ValueError(f"row {self.row} outside 1..{MAX_ROWS}")

    def a1(self) -> str:
        """A1 text without the sheet prefix."""
        return f"{column_to_letters(self.column)}{self.row}"

    def qualified(self) -> str:
        """Sheet-qualified A1 text, e.g. ``Data!B3``."""
        return f"{self.sheet}!{self.a1()}"

    def sort_key(self) -> tuple:
        return (self.sheet, self.row, self.column)

    def __repr__(self) -> str:
        return f"CellAddress({self.qualified()!r})"


def parse_address(text: str, default_sheet: str) -> CellAddress:
    """Parse ``[Sheet!]$?COL$?ROW``. ``$`` markers are accepted and discarded.

    Absoluteness is a property of formula references, not of addresses; the
    formula layer records it separately.
    """
    match = _ADDRESS_RE.match(text)
    if match is None:
        # Report the first character that breaks the shape.
        for i, ch in enumerate(text):
            if not (ch.isalnum() or ch in "$!_"):
                raise FormulaParseError(f"malformed cell address {text!r}", i)
        raise FormulaParseError(f"malformed cell address {text!r}", 0)
    sheet = match.group("sheet") or default_sheet
    column = letters_to_column(match.group("col"))
    row = int(match.group("row"))
    if column > MAX_COLUMNS:
        raise FormulaParseError(
            f"column {match.group('col')!r} beyond grid bound", match.start("col")
        )
    if row > MAX_ROWS:
        raise FormulaParseError(f"row {row} beyond grid bound", match.start("row"))
    if row < 1:
        raise FormulaParseError("row ordinals start at 1", match.start("row"))
    return CellAddress(sheet=sheet, column=column, row=row)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for genwb

from scr.store import Store
from scr.workflow import WorkflowEngine


@pytest.fixture
def store(tmp_path):
    return Store.init(tmp_path / "store")


@pytest.fixture
def ticking_clock():
    """Deterministic one-second ticks starting 2026-02-01T09:00:00Z."""
    state = {"n": 0}

    def clock():
        n = state["n"]
        state["n"] += 1
        return f"2026-02-01T09:{n // 60:02d}:{n % 60:02d}Z"

    return clock


@pytest.fixture
def engine(store, ticking_clock):
    return WorkflowEngine(store, clock=ticking_clock)


def wb(doc: dict):
    """Parse a workbook from a plain dict (test shorthand)."""
    from scr.grid import parse_workbook
    from scr.jsonutil import canonical_json

    return parse_workbook(canonical_json(doc))


def one_sheet(cells: dict, name: str = "book", sheet: str = "S1"):
    return wb({"name": name, "sheets": [{"name": sheet, "cells": cells}]})

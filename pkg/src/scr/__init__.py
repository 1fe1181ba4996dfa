"""Spreadsheet change-review toolkit.

Analysis engine (grid model, formula parsing, dependency evaluation,
metrics, diffing, risk rating) wrapped in a governance workflow (inventory,
peer review, tool-assisted evaluation, audit trail), operable through a CLI
and an HTTP API.
"""

__version__ = "0.1.0"

"""Canonical JSON rendering and content digests.

Every persisted record in this package (workbook documents, change sets,
reports, audit events) is serialized through :func:`canonical_json` so that
equal values always produce identical bytes, and digests are stable across
platforms and processes.
"""

import hashlib
import json

# Canonical floats: integral values print without a fractional part, everything
# else uses Python's shortest round-trip repr.
_MAX_EXACT_INT = 2**53


def render_number(value: float) -> str:
    """Shortest decimal text that round-trips to the same 64-bit float."""
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("non-finite numbers have no canonical rendering")
    if value == int(value) and abs(value) < _MAX_EXACT_INT:
        return str(int(value))
    return repr(value)


def canonical_json(obj) -> str:
    """Serialize with fixed key order (insertion order) and stable number text.

    Callers are responsible for building dicts in their documented field
    order; this function never reorders keys.
    """
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def canonical_line(obj) -> str:
    """Single-line canonical rendering, for append-only log records."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=False) + "\n"


def digest(text: str) -> str:
    """sha256 hex digest of UTF-8 encoded text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def digest_json(obj) -> str:
    return digest(canonical_json(obj))


def load_json(text: str, *, source: str = "<input>"):
    """json.loads that rejects duplicate object keys instead of silently dropping them."""

    def _no_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise ValueError(f"duplicate key {key!r} in {source}")
            seen[key] = value
        return seen

    return json.loads(text, object_pairs_hook=_no_duplicates)

"""Canonical JSON helpers.

Every artifact that participates in byte-stable golden tests (snapshots,
traces, reports) goes through these functions so that two equal values
always serialize to identical bytes.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_dumps(value: Any) -> str:
    """Serialize with sorted keys and no whitespace padding."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def ordered_dumps(value: Any) -> str:
    """Serialize preserving dict insertion order (for fixed-field-order records)."""
    return json.dumps(value, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")

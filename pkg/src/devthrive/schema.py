"""Versioned event-schema document: the contract for every ingest file.

Extensibility happens by revving this document, never by inventing new
free-form event kinds.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .model import _PAYLOAD_FIELDS, EventKind

SCHEMA_VERSION = 1


class SchemaVersionError(ValueError):
    """Dataset declares an event-schema version this build cannot read."""


def schema_document() -> dict[str, Any]:
    """The machine-readable schema for line-delimited event files."""
    kinds = {
        kind.value: {
            "required": list(required),
            "optional": list(optional),
        }
        for kind, (required, optional) in _PAYLOAD_FIELDS.items()
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "envelope": {
            "required": ["event_id", "kind", "timestamp", "team_id", "payload"],
            "optional": ["actor_id"],
            "timestamp_format": "RFC 3339, UTC",
        },
        "kinds": kinds,
    }


def write_schema_document(path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(schema_document(), indent=2, sort_keys=True) + "\n")
    return path


def check_schema_version(declared: int) -> None:
    if declared != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"event schema version {declared} is not supported (expected {SCHEMA_VERSION})"
        )


def known_kinds() -> list[str]:
    return [kind.value for kind in EventKind]

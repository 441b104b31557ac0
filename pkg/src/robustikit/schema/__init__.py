"""JSON schemas for model documents and for the reports the tools emit."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

NAMES = ("model", "report")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict[str, Any]:
    if name not in NAMES:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files(__package__).joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc: Any, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` when ``doc`` does not match."""
    import jsonschema

    jsonschema.validate(doc, load_schema(name))

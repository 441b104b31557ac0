"""Bundled heater models used by the examples, tests and documentation."""

from __future__ import annotations

from importlib import resources

from ..syntax.parser import SourceFile, load

NAMES = ("ht0", "ht1")


def text(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.cpm").read_text(encoding="utf-8")


def source(name: str) -> SourceFile:
    return load(text(name), f"{name}.cpm")

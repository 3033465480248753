"""Bundled environment presets used across the examples and tests."""

from __future__ import annotations

import json
from importlib import resources

from sharpwave.model import Environment

__all__ = ["fixture_names", "fixture_path", "load_fixture"]

_FIXTURES = (
    "fisher",
    "periodic_monostable",
    "combustion03",
    "bistable025",
    "multistable_terrace",
    "bad_kappa",
)


def fixture_names() -> tuple[str, ...]:
    return _FIXTURES


def fixture_path(name: str):
    """Path-like handle to the bundled JSON file."""
    if name not in _FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {_FIXTURES}")
    return resources.files("sharpwave") / "fixtures" / f"{name}.json"


def load_fixture(name: str) -> Environment:
    with resources.as_file(fixture_path(name)) as p:
        return Environment.loads(p.read_text())

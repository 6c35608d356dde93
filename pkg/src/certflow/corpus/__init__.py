"""Fixture programs, the synthetic generator and the dynamic taint oracle."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..ir import Program, parse_file

FIXTURES = ("phone", "hierarchy", "implicit", "library", "arrays", "recursion")
# recursive fixtures can sustain an inserted pair through their own entry
NONRECURSIVE_FIXTURES = tuple(f for f in FIXTURES if f != "recursion")

# summaries of the motivating example once the analyzer has converged
PHONE_EXPECTED = {
    "App.foo/1": {("sym:sms", "sym:id"), ("ret", "sym:num")},
    "App.bar/1": {("sym:sms", "sym:id"), ("ret", "sym:num")},
    "App.getId/1": {("ret", "sym:id")},
    "App.getNumber/1": {("ret", "sym:num")},
    "App.Send/2": {("sym:sms", "p:1")},
}


def fixture_dir() -> Path:
    return Path(str(resources.files(__package__) / "fixtures"))


def fixture_paths(name: str) -> tuple[Path, Path, Path]:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    d = fixture_dir()
    return d / f"{name}.ir", d / f"{name}.cfgtaint", d / f"{name}.dcert"


def load_fixture(name: str) -> Program:
    ir, cfg, _ = fixture_paths(name)
    return parse_file(ir, cfg)


def fixture_entries(name: str) -> list[str]:
    return sorted(load_fixture(name).config.entries)

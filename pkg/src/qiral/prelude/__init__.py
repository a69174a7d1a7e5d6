"""Shipped `.qir` sources: operator definition, equations, algorithm templates."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .. import ir
from ..frontend import SourceUnit, parse

LIBRARY = ("prelude.qir", "equations.qir", "algorithms.qir")
GOAL = "goal.qir"


def source(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def path(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath(name)))


def load(lattice: ir.Lattice | None = None, with_goal: bool = False,
         extra: tuple[str, ...] = ()) -> SourceUnit:
    """Parse the library files (and optionally the default goal) in order."""
    names = LIBRARY + ((GOAL,) if with_goal else ())
    unit = SourceUnit()
    for name in names:
        unit = unit.merge(parse(source(name), lattice, base=unit))
    for text in extra:
        unit = unit.merge(parse(text, lattice, base=unit))
    return unit

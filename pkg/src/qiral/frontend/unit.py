"""Parsed source units and algorithm templates."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import ir


@dataclass(frozen=True)
class AlgorithmTemplate:
    name: str
    inputs: tuple[ir.Term, ...]
    outputs: tuple[ir.Term, ...]
    match: ir.Assign
    requires: tuple[ir.Term, ...]
    locals: tuple[ir.Term, ...]
    body: tuple[ir.Statement, ...]
    loc: ir.Loc | None = field(default=None, compare=False, repr=False)

    @property
    def symbols(self) -> tuple[ir.Term, ...]:
        return (*self.inputs, *self.outputs, *self.locals)

    @property
    def pattern_names(self) -> frozenset[str]:
        return frozenset(s.name for s in (*self.inputs, *self.outputs))


@dataclass(frozen=True)
class Equation:
    name: str
    params: tuple[ir.Term, ...]
    lhs: ir.Term
    rhs: ir.Term
    condition: ir.Term | None = None
    loc: ir.Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SourceUnit:
    declarations: tuple[ir.Term, ...] = ()
    defs: tuple[tuple[str, ir.Term], ...] = ()
    equations: tuple[Equation, ...] = ()
    templates: tuple[AlgorithmTemplate, ...] = ()
    goal: tuple[ir.Statement, ...] = ()

    def merge(self, other: SourceUnit) -> SourceUnit:
        return SourceUnit(
            self.declarations + other.declarations,
            self.defs + other.defs,
            self.equations + other.equations,
            self.templates + other.templates,
            self.goal + other.goal,
        )

    def template(self, name: str) -> AlgorithmTemplate:
        for t in self.templates:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def is_empty(self) -> bool:
        return not (self.declarations or self.defs or self.equations
                    or self.templates or self.goal)

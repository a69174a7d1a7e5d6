"""End-to-end driver: sources -> plan -> LoopIR, shared by the CLI and the tests."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import ir, prelude
from .algorithms import goal_globals, load_catalog, plan
from .errors import QiralError
from .frontend import SourceUnit, parse
from .lowering import LoopIR, compile_program
from .rewrite import RuleSet, rules_from_unit
from .shapes import typecheck_program
from .vm.geometry import check_dims


@dataclass
class Compiled:
    unit: SourceUnit
    rules: RuleSet
    program: list
    lir: LoopIR
    lattice: ir.Lattice


def load_sources(dims, prelude_paths=(), inputs=(), with_default_goal: bool = True) -> SourceUnit:
    """Library (shipped, or the given prelude files) followed by the input files.

    The shipped goal `x = Dirac^-1 * b` is appended when no input declares a goal.
    """
    lattice = ir.Lattice("L", check_dims(dims))
    unit = SourceUnit()
    if prelude_paths:
        for path in prelude_paths:
            unit = unit.merge(parse(Path(path).read_text(encoding="utf-8"), lattice, base=unit))
    else:
        unit = prelude.load(lattice)
    for path in inputs:
        unit = unit.merge(parse(Path(path).read_text(encoding="utf-8"), lattice, base=unit))
    if with_default_goal and not unit.goal:
        unit = unit.merge(parse(prelude.source(prelude.GOAL), lattice, base=unit))
    return unit


def typecheck(unit: SourceUnit):
    return typecheck_program(unit.defs, unit.templates, unit.goal, unit.declarations)


def compile_unit(unit: SourceUnit, algorithms, layout: str = "linear", trace=None,
                 optimize: bool = True, rules: RuleSet | None = None) -> Compiled:
    if not algorithms:
        raise QiralError("no algorithms given")
    typecheck(unit)
    rules = rules or rules_from_unit(unit)
    program = plan(list(unit.goal), list(algorithms), load_catalog(unit), rules,
                   goal_globals(unit), trace=trace)
    result = _goal_result(unit)
    lir = compile_program(program, layout, dict(unit.defs), result, optimize)
    lattice = ir.lattice_of(_goal_set(unit))
    return Compiled(unit, rules, program, lir, lattice)


def compile_goal(dims, algorithms, layout: str = "linear", prelude_paths=(), inputs=(),
                 trace=None, optimize: bool = True) -> Compiled:
    unit = load_sources(dims, prelude_paths, inputs)
    return compile_unit(unit, algorithms, layout, trace, optimize)


def _goal_result(unit: SourceUnit) -> str | None:
    for st in unit.goal:
        if isinstance(st, ir.Assign) and isinstance(st.lhs, ir.VectorSym):
            return st.lhs.name
    return None


def _goal_set(unit: SourceUnit) -> ir.IndexSet:
    for st in unit.goal:
        if isinstance(st, ir.Assign) and isinstance(st.lhs, ir.VectorSym):
            return st.lhs.over
    raise QiralError("goal has no vector assignment")


def dirac_term(unit: SourceUnit) -> ir.Term:
    defs = dict(unit.defs)
    if "Dirac" not in defs:
        raise QiralError("no Dirac definition in the sources")
    return defs["Dirac"]


def apply_program(unit: SourceUnit, matrix: ir.Term | None = None, layout: str = "linear"):
    """LoopIR computing y = M * v (M defaults to the Dirac definition)."""
    m = matrix if matrix is not None else dirac_term(unit)
    over = _goal_set(unit)
    st = ir.Assign(ir.VectorSym("y", over), ir.Mul((m, ir.VectorSym("v", over))))
    return compile_program([st], layout, dict(unit.defs), "y")

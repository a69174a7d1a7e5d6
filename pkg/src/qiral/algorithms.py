"""Algorithm catalog and the planner that composes templates over a goal."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import ir, prelude
from .errors import NoMatch, RequirementUnprovable, ResidualInverse, UnknownAlgorithm
from .frontend import AlgorithmTemplate, SourceUnit
from .frontend.printer import format_statement, format_term
from .rewrite import RuleSet, check_requirement, instantiate, iter_matches, to_pattern
from .rewrite.engine import Pattern
from .shapes import ShapeEnv, symbol_shape

CATALOG_NAMES = ("CGNR", "CGNE", "BiCGSTAB", "SCHUR")


@dataclass(frozen=True)
class AlgorithmCatalog:
    templates: dict[str, AlgorithmTemplate]

    def __getitem__(self, name: str) -> AlgorithmTemplate:
        try:
            return self.templates[name]
        except KeyError:
            known = ", ".join(sorted(self.templates))
            raise UnknownAlgorithm(f"unknown algorithm {name!r} (known: {known})") from None

    def __contains__(self, name: str) -> bool:
        return name in self.templates

    def names(self) -> list[str]:
        return list(self.templates)


def load_catalog(unit: SourceUnit | None = None) -> AlgorithmCatalog:
    """Templates from `unit` (the shipped prelude when omitted)."""
    unit = unit if unit is not None else prelude.load()
    return AlgorithmCatalog({t.name: t for t in unit.templates})


# ---------------------------------------------------------------------------
# template application
# ---------------------------------------------------------------------------


@dataclass
class PlanContext:
    """Global symbols visible to templates, plus a counter for fresh names."""

    globals: dict[str, ir.Term] = field(default_factory=dict)
    counter: itertools.count = field(default_factory=lambda: itertools.count(1))


def _parity_projector(parity: str, over: ir.IndexSet) -> ir.Term | None:
    atoms = over.atoms()
    if not atoms or not isinstance(atoms[0], ir.Lattice):
        return None
    proj = ir.Projection(parity, atoms[0])
    if len(atoms) == 1:
        return proj
    return ir.Tensor((proj, ir.Identity(ir.product(*atoms[1:]))))


def _bind(σ: dict, sym: ir.Term, value: ir.Term) -> dict | None:
    """Extend σ with sym := value when the shapes agree (binding set variables)."""
    pat = Pattern(ir.PVar(sym.name), params={sym.name: sym})
    for out in iter_matches(pat, value, ShapeEnv()):
        merged = dict(σ)
        for k, v in out.items():
            if k in merged and merged[k] != v:
                return None
            merged[k] = v
        return merged
    return None


def _default_inputs(tpl: AlgorithmTemplate, σ: dict, ctx: PlanContext) -> dict:
    """Bind inputs the Match clause left open.

    Scalars take the global of the same name.  Rectangular matrix inputs
    whose column set is a lattice product become the even and then the odd
    parity projector.
    """
    parities = iter(ir.PARITIES)
    for sym in tpl.inputs:
        if sym.name in σ:
            continue
        value = None
        if isinstance(sym, ir.SymScalar):
            value = ctx.globals.get(sym.name)
        elif isinstance(sym, ir.MatrixSym):
            cols = instantiate(ir.Identity(sym.cols), σ).over
            parity = next(parities, None)
            if parity is not None:
                value = _parity_projector(parity, cols)
        if value is None:
            raise NoMatch(f"{tpl.name}: no binding for input {sym.name!r}", tpl.loc)
        bound = _bind(σ, sym, value)
        if bound is None:
            raise NoMatch(f"{tpl.name}: default for {sym.name!r} has the wrong shape", tpl.loc)
        σ = bound
    return σ


def _fresh_locals(tpl: AlgorithmTemplate, σ: dict, ctx: PlanContext) -> dict:
    prefix = f"{tpl.name}{next(ctx.counter)}_"
    σ = dict(σ)
    for sym in tpl.locals:
        inst = instantiate(sym, σ) if not isinstance(sym, ir.SymScalar) else sym
        σ[sym.name] = _retype(inst, prefix + sym.name)
    return σ


def _retype(sym: ir.Term, name: str) -> ir.Term:
    if isinstance(sym, ir.SymScalar):
        return ir.SymScalar(name, sym.real)
    if isinstance(sym, ir.VectorSym):
        return ir.VectorSym(name, sym.over)
    return ir.MatrixSym(name, sym.rows, sym.cols)


def _instantiate_symbol_sets(sym: ir.Term, σ: dict) -> ir.Term:
    def sub(s):
        return instantiate(ir.Identity(s), σ).over

    if isinstance(sym, ir.VectorSym):
        return ir.VectorSym(sym.name, sub(sym.over))
    if isinstance(sym, ir.MatrixSym):
        return ir.MatrixSym(sym.name, sub(sym.rows), sub(sym.cols))
    return sym


def match_template(goal: ir.Statement, tpl: AlgorithmTemplate) -> dict | None:
    if not isinstance(goal, ir.Assign):
        return None
    names = [s.name for s in (*tpl.inputs, *tpl.outputs)]
    pat = Pattern(to_pattern(tpl.match, names), params={s.name: s for s in (*tpl.inputs,
                                                                          *tpl.outputs)})
    for σ in iter_matches(pat, goal, ShapeEnv()):
        return σ
    return None


def apply_algorithm(goal: ir.Statement, tpl: AlgorithmTemplate, rules: RuleSet,
                    ctx: PlanContext | None = None) -> list[ir.Statement]:
    """Replace a matching goal statement with the template body."""
    ctx = ctx or PlanContext()
    σ = match_template(goal, tpl)
    if σ is None:
        raise NoMatch(f"{tpl.name} does not match: {format_statement(goal)}",
                      getattr(goal, "loc", None))
    σ = _default_inputs(tpl, σ, ctx)
    names = [s.name for s in tpl.symbols]
    for req in tpl.requires:
        pred = instantiate(to_pattern(req, names), σ)
        verdict = check_requirement(pred, rules)
        if not verdict:
            raise RequirementUnprovable(
                f"{tpl.name}: cannot prove {format_term(pred)}: {verdict.message}",
                pred, verdict.normal_form)
    σ = _fresh_locals(tpl, σ, ctx)
    # locals are symbols, but their declared sets may mention set variables
    for sym in tpl.locals:
        σ[sym.name] = _instantiate_symbol_sets(σ[sym.name], σ)
    body = [instantiate(to_pattern(st, names), σ) for st in tpl.body]
    return body


# ---------------------------------------------------------------------------
# planning
# ---------------------------------------------------------------------------


def _inline_matrices(stmts: list[ir.Statement]) -> list[ir.Statement]:
    """Substitute matrix-valued assignments into later statements and drop them."""
    out: list[ir.Statement] = []
    defs: dict[ir.Term, ir.Term] = {}
    for st in stmts:
        if defs:
            st = ir.map_statement(st, lambda t: ir.replace_terms(t, defs))
        if isinstance(st, ir.Assign) and isinstance(st.lhs, ir.MatrixSym):
            defs[st.lhs] = st.rhs
            continue
        if isinstance(st, ir.While):
            st = ir.While(st.cond, tuple(_inline_matrices(list(st.body))), loc=st.loc)
        out.append(st)
    return out


def normalize_statements(stmts, rules: RuleSet, trace=None) -> list[ir.Statement]:
    from .rewrite.engine import Normalizer

    engine = Normalizer(rules, trace)
    return [ir.map_statement(st, engine.normalize) for st in stmts]


def _rewrite_statements(stmts, tpl, rules, ctx, hits):
    out: list[ir.Statement] = []
    for st in stmts:
        if isinstance(st, ir.While):
            body = _rewrite_statements(st.body, tpl, rules, ctx, hits)
            out.append(ir.While(st.cond, tuple(body), loc=st.loc))
        elif isinstance(st, ir.Assign) and ir.contains(st.rhs, ir.Inverse) \
                and match_template(st, tpl) is not None:
            out.extend(apply_algorithm(st, tpl, rules, ctx))
            hits.append(st)
        else:
            out.append(st)
    return out


def _with_inverse(stmts) -> list[ir.Statement]:
    found = []
    for st in ir.flatten_statements(stmts):
        if isinstance(st, ir.While):
            found.extend(_with_inverse(st.body))
        elif any(ir.contains(t, ir.Inverse) for t in ir.statement_terms(st)):
            found.append(st)
    return found


def plan(goal, names, catalog: AlgorithmCatalog, rules: RuleSet,
         globals_: dict[str, ir.Term] | None = None, trace=None) -> list[ir.Statement]:
    """Apply the named templates left to right; the result has no inverses left."""
    if isinstance(goal, ir.Statement):
        goal = [goal]
    templates = [catalog[n] for n in names]
    ctx = PlanContext(dict(globals_ or {}))
    program = list(goal)
    for tpl in templates:
        hits: list[ir.Statement] = []
        program = _rewrite_statements(program, tpl, rules, ctx, hits)
        if not hits:
            shown = "; ".join(format_statement(s) for s in program[:3])
            raise NoMatch(f"{tpl.name} matches no statement of: {shown}")
        program = normalize_statements(_inline_matrices(program), rules, trace)
    left = _with_inverse(program)
    if left:
        text = "\n".join(format_statement(s) for s in left)
        raise ResidualInverse(f"inverses remain after {', '.join(names)}:\n{text}", left)
    return program


def goal_globals(unit: SourceUnit) -> dict[str, ir.Term]:
    return {s.name: s for s in unit.declarations}


def program_env(stmts) -> ShapeEnv:
    """Shapes of every symbol a program mentions."""
    env = ShapeEnv()
    for st in ir.flatten_statements(stmts):
        for t in ir.statement_terms(st):
            for n in ir.walk(t):
                if isinstance(n, (ir.SymScalar, ir.VectorSym, ir.MatrixSym)):
                    env[n.name] = symbol_shape(n)
    return env


__all__ = ["AlgorithmCatalog", "CATALOG_NAMES", "PlanContext", "apply_algorithm",
           "goal_globals", "load_catalog", "match_template", "normalize_statements", "plan",
           "program_env"]

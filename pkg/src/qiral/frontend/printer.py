"""Canonical text form of parsed programs."""

from __future__ import annotations

from .. import ir
from .unit import AlgorithmTemplate, Equation, SourceUnit

SUM, PRODUCT, UNARY, POSTFIX = 1, 2, 3, 4


def format_set(s: ir.IndexSet) -> str:
    return " (x) ".join(_set_atom(a) for a in s.atoms())


def _set_atom(a: ir.IndexSet) -> str:
    if isinstance(a, ir.Sublattice):
        return f"{a.parity}({a.parent.name})"
    return a.name


def format_number(v: complex) -> str:
    v = complex(v)
    if v.imag == 0:
        r = v.real
        if r == int(r) and abs(r) < 1e15:
            return str(int(r))
        return repr(r)
    if v.real == 0:
        return f"{format_number(v.imag)} * i"
    return f"({format_number(v.real)} + {format_number(v.imag)} * i)"


def format_term(t: ir.Term) -> str:
    return _fmt(t, SUM)


def _level(t: ir.Term) -> int:
    if isinstance(t, (ir.Add, ir.Sub)):
        return SUM
    if isinstance(t, (ir.Mul, ir.Tensor, ir.Div, ir.ScalarMul)):
        return PRODUCT
    if isinstance(t, ir.Neg):
        return UNARY
    if isinstance(t, ir.ScalarLit):
        v = complex(t.value)
        if v.imag != 0:
            return PRODUCT if v.real == 0 else POSTFIX
        return UNARY if v.real < 0 else POSTFIX
    if isinstance(t, (ir.DirectSum, ir.IndexedSum)):
        # a binder body extends over a postfix expression; never leave it
        # bare where a postfix operator could follow
        return UNARY
    return POSTFIX


def _fmt(t: ir.Term, need: int) -> str:
    s = _raw(t)
    if _level(t) < need:
        return f"({s})"
    return s


def _binary(terms, op: str) -> str:
    parts = [_fmt(terms[0], PRODUCT if op != "+" else SUM)]
    right_level = UNARY if op != "+" else PRODUCT
    for x in terms[1:]:
        parts.append(_fmt(x, right_level))
    return f" {op} ".join(parts)


def _raw(t: ir.Term) -> str:
    if isinstance(t, ir.ScalarLit):
        v = complex(t.value)
        if v.imag == 0 and v.real < 0:
            return "-" + format_number(-v.real)
        return format_number(v)
    if isinstance(t, ir.ImaginaryUnit):
        return "i"
    if isinstance(t, (ir.SymScalar, ir.VectorSym, ir.MatrixSym, ir.PVar)):
        return t.name
    if isinstance(t, ir.Identity):
        atoms = t.over.atoms()
        if len(atoms) == 1 and not isinstance(atoms[0], ir.Sublattice):
            return f"I_{atoms[0].name}"
        return "I_{" + format_set(t.over) + "}"
    if isinstance(t, ir.Zero):
        if t.cols is None:
            return f"zero({format_set(t.rows)})"
        return f"zero({format_set(t.rows)}, {format_set(t.cols)})"
    if isinstance(t, ir.Gamma):
        return f"gamma[{t.dir}]"
    if isinstance(t, ir.Gamma5):
        return "gamma5"
    if isinstance(t, ir.Shift):
        return f"shift({format_set(t.lattice)}, {t.dir})"
    if isinstance(t, ir.GaugeLink):
        return f"U({t.dir})[{t.site}]"
    if isinstance(t, ir.Projection):
        return f"proj({t.parity}, {t.lattice.name})"
    if isinstance(t, ir.Add):
        return _binary(t.terms, "+")
    if isinstance(t, ir.Sub):
        return f"{_fmt(t.a, SUM)} - {_fmt(t.b, PRODUCT)}"
    if isinstance(t, ir.Neg):
        return "-" + _fmt(t.a, UNARY)
    if isinstance(t, ir.Mul):
        return _binary(t.terms, "*")
    if isinstance(t, ir.Tensor):
        return _binary(t.terms, "(x)")
    if isinstance(t, ir.ScalarMul):
        return f"{_fmt(t.scalar, PRODUCT)} * {_fmt(t.a, UNARY)}"
    if isinstance(t, ir.Div):
        return f"{_fmt(t.a, PRODUCT)} / {_fmt(t.b, UNARY)}"
    if isinstance(t, ir.Conj):
        return f"conj({format_term(t.a)})"
    if isinstance(t, ir.DirectSum):
        return f"dsum {t.binder} in {format_set(t.domain)} : {_fmt(t.body, POSTFIX)}"
    if isinstance(t, ir.IndexedSum):
        return f"sum {t.binder} in {format_set(t.domain)} : {_fmt(t.body, POSTFIX)}"
    if isinstance(t, ir.Transpose):
        return f"{_fmt(t.a, POSTFIX)}^t"
    if isinstance(t, ir.Dagger):
        return f"dagger({format_term(t.a)})"
    if isinstance(t, ir.Inverse):
        return f"{_fmt(t.a, POSTFIX)}^-1"
    if isinstance(t, ir.SubVector):
        return f"{_fmt(t.a, POSTFIX)}[{format_set(t.over)}]"
    if isinstance(t, ir.InnerProduct):
        return f"<{format_term(t.a)} | {format_term(t.b)}>"
    if isinstance(t, ir.Pred):
        return f"{t.name}({', '.join(format_term(a) for a in t.args)})"
    raise TypeError(f"cannot print {t!r}")


def format_statement(st: ir.Statement, indent: str = "") -> str:
    if isinstance(st, ir.Assign):
        return f"{indent}{format_term(st.lhs)} = {format_term(st.rhs)} ;"
    if isinstance(st, ir.While):
        c = st.cond
        lines = [f"{indent}while ({format_term(c.lhs)} {c.op} {format_term(c.rhs)}) {{"]
        lines += [format_statement(s, indent + "  ") for s in st.body]
        lines.append(indent + "}")
        return "\n".join(lines)
    if isinstance(st, ir.Seq):
        return "\n".join(format_statement(s, indent) for s in st.body)
    raise TypeError(f"cannot print {st!r}")


def format_program(stmts, indent: str = "") -> str:
    return "\n".join(format_statement(s, indent) for s in stmts)


def format_type(sym: ir.Term) -> str:
    if isinstance(sym, ir.SymScalar):
        return "real" if sym.real else "complex"
    if isinstance(sym, ir.VectorSym):
        return f"vector({format_set(sym.over)})"
    return f"matrix({format_set(sym.rows)}, {format_set(sym.cols)})"


def format_typed(syms) -> str:
    groups: list[tuple[list[str], str]] = []
    for s in syms:
        ty = format_type(s)
        if groups and groups[-1][1] == ty:
            groups[-1][0].append(s.name)
        else:
            groups.append(([s.name], ty))
    return ", ".join(f"{', '.join(names)} : {ty}" for names, ty in groups)


def format_template(t: AlgorithmTemplate) -> str:
    out = [f"algorithm {t.name} {{"]
    if t.inputs:
        out.append(f"  Input {format_typed(t.inputs)} ;")
    if t.outputs:
        out.append(f"  Output {format_typed(t.outputs)} ;")
    out.append(f"  Match {format_term(t.match.lhs)} = {format_term(t.match.rhs)} ;")
    for r in t.requires:
        out.append(f"  Require {format_term(r)} ;")
    if t.locals:
        out.append(f"  Var {format_typed(t.locals)} ;")
    out.append("  body {")
    out += [format_statement(s, "    ") for s in t.body]
    out.append("  }")
    out.append("}")
    return "\n".join(out)


def format_equation(e: Equation) -> str:
    out = [f"equation {e.name} {{"]
    if e.params:
        out.append(f"  forall {format_typed(e.params)} ;")
    out.append(f"  {format_term(e.lhs)} = {format_term(e.rhs)} ;")
    if e.condition is not None:
        out.append(f"  when {format_term(e.condition)} ;")
    out.append("}")
    return "\n".join(out)


def pretty_print(u: SourceUnit) -> str:
    parts: list[str] = []
    for sym in u.declarations:
        parts.append(f"decl {sym.name} : {format_type(sym)} ;")
    for name, body in u.defs:
        parts.append(f"def {name} = {format_term(body)} ;")
    parts += [format_equation(e) for e in u.equations]
    parts += [format_template(t) for t in u.templates]
    for st in u.goal:
        parts.append("goal " + format_statement(st))
    return "\n".join(parts) + ("\n" if parts else "")

"""Shape inference and the program type checker."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ir
from .errors import ProgramErrors, QiralError, ShapeMismatch, UnboundSymbol
from .ir import IndexSet


@dataclass(frozen=True)
class ScalarShape:
    def __str__(self) -> str:
        return "scalar"


@dataclass(frozen=True)
class VectorShape:
    over: IndexSet

    def __str__(self) -> str:
        return f"vector({self.over})"


@dataclass(frozen=True)
class MatrixShape:
    rows: IndexSet
    cols: IndexSet

    def __str__(self) -> str:
        return f"matrix({self.rows} -> {self.cols})"

    @property
    def dims(self) -> tuple[int | None, int | None]:
        return self.rows.cardinality, self.cols.cardinality


@dataclass(frozen=True)
class PredShape:
    def __str__(self) -> str:
        return "predicate"


SCALAR = ScalarShape()
PRED = PredShape()
Shape = ScalarShape | VectorShape | MatrixShape | PredShape


@dataclass(frozen=True)
class SiteVar:
    domain: IndexSet


@dataclass(frozen=True)
class DirVar:
    pass


def _sets_equal(a: IndexSet, b: IndexSet) -> bool:
    return a.atoms() == b.atoms()


class ShapeEnv(dict):
    """Maps symbol names to shapes and binder names to SiteVar/DirVar."""

    def bind(self, name: str, value) -> ShapeEnv:
        out = ShapeEnv(self)
        out[name] = value
        return out


def infer_shape(t: ir.Term, env: dict | None = None, strict: bool | None = None) -> Shape:
    """Unique shape of `t`; raises ShapeMismatch or UnboundSymbol.

    Unless `strict`, symbol nodes are trusted to carry their own shapes and
    `env` only needs binders and pattern variables.  `strict` defaults to
    whether an env was given.
    """
    if strict is None:
        strict = env is not None
    return _Inferer(strict).shape(t, ShapeEnv(env or {}))


class _Inferer:
    def __init__(self, strict: bool):
        self.strict = strict

    def fail(self, t, msg):
        raise ShapeMismatch(msg, getattr(t, "loc", None))

    def check_dir(self, t, d: ir.Dir, env):
        if not d.is_const and not isinstance(env.get(d.name), DirVar):
            raise UnboundSymbol(f"direction {d.name!r} is not bound", t.loc)

    def shape(self, t: ir.Term, env: ShapeEnv) -> Shape:
        m = getattr(self, "_" + type(t).__name__)
        return m(t, env)

    # atoms
    def _ScalarLit(self, t, env):
        return SCALAR

    def _ImaginaryUnit(self, t, env):
        return SCALAR

    def _SymScalar(self, t, env):
        if self.strict and t.name not in env:
            raise UnboundSymbol(f"symbol {t.name!r} is not declared", t.loc)
        return SCALAR

    def _VectorSym(self, t, env):
        if self.strict and t.name not in env:
            raise UnboundSymbol(f"symbol {t.name!r} is not declared", t.loc)
        return VectorShape(t.over)

    def _MatrixSym(self, t, env):
        if self.strict and t.name not in env:
            raise UnboundSymbol(f"symbol {t.name!r} is not declared", t.loc)
        return MatrixShape(t.rows, t.cols)

    def _PVar(self, t, env):
        if t.name in env and not isinstance(env[t.name], (SiteVar, DirVar)):
            return env[t.name]
        raise UnboundSymbol(f"pattern variable {t.name!r} has no shape", t.loc)

    def _Identity(self, t, env):
        return MatrixShape(t.over, t.over)

    def _Zero(self, t, env):
        return VectorShape(t.rows) if t.cols is None else MatrixShape(t.rows, t.cols)

    def _Gamma(self, t, env):
        self.check_dir(t, t.dir, env)
        return MatrixShape(ir.S, ir.S)

    def _Gamma5(self, t, env):
        return MatrixShape(ir.S, ir.S)

    def _Shift(self, t, env):
        if not isinstance(t.lattice, ir.Lattice):
            self.fail(t, f"shift needs a lattice, got {t.lattice}")
        self.check_dir(t, t.dir, env)
        return MatrixShape(t.lattice, t.lattice)

    def _GaugeLink(self, t, env):
        self.check_dir(t, t.dir, env)
        if not isinstance(env.get(t.site), SiteVar):
            raise UnboundSymbol(f"site {t.site!r} is not bound by a direct sum", t.loc)
        return MatrixShape(ir.C, ir.C)

    def _Projection(self, t, env):
        return MatrixShape(ir.Sublattice(t.lattice, t.parity), t.lattice)

    # arithmetic
    def _same(self, t, shapes):
        first = shapes[0]
        for s in shapes[1:]:
            if type(s) is not type(first) or not _shape_eq(s, first):
                self.fail(t, f"operands have shapes {first} and {s}")
        return first

    def _Add(self, t, env):
        return self._same(t, [self.shape(x, env) for x in t.terms])

    def _Sub(self, t, env):
        return self._same(t, [self.shape(t.a, env), self.shape(t.b, env)])

    def _Neg(self, t, env):
        return self.shape(t.a, env)

    def _Mul(self, t, env):
        acc = self.shape(t.terms[0], env)
        for x in t.terms[1:]:
            acc = self.mul2(t, acc, self.shape(x, env))
        return acc

    def mul2(self, t, a: Shape, b: Shape) -> Shape:
        if isinstance(a, ScalarShape):
            if isinstance(b, PredShape):
                self.fail(t, "cannot multiply a predicate")
            return b
        if isinstance(b, ScalarShape):
            if isinstance(a, PredShape):
                self.fail(t, "cannot multiply a predicate")
            return a
        if isinstance(a, MatrixShape):
            if isinstance(b, MatrixShape):
                if not _sets_equal(a.cols, b.rows):
                    self.fail(t, f"cannot multiply {a} by {b}")
                return MatrixShape(a.rows, b.cols)
            if isinstance(b, VectorShape):
                if not _sets_equal(a.cols, b.over):
                    self.fail(t, f"cannot apply {a} to {b}")
                return VectorShape(a.rows)
        self.fail(t, f"cannot multiply {a} by {b}")

    def _ScalarMul(self, t, env):
        s = self.shape(t.scalar, env)
        if not isinstance(s, ScalarShape):
            self.fail(t, f"scalar factor has shape {s}")
        return self.shape(t.a, env)

    def _Div(self, t, env):
        for x in (t.a, t.b):
            s = self.shape(x, env)
            if not isinstance(s, ScalarShape):
                self.fail(t, f"division operand has shape {s}")
        return SCALAR

    def _Conj(self, t, env):
        s = self.shape(t.a, env)
        if not isinstance(s, ScalarShape):
            self.fail(t, f"conj of {s}")
        return SCALAR

    def _Tensor(self, t, env):
        shapes = [self.shape(x, env) for x in t.terms]
        if not all(isinstance(s, MatrixShape) for s in shapes):
            self.fail(t, "tensor product operands must be matrices")
        return MatrixShape(
            ir.product(*(s.rows for s in shapes)), ir.product(*(s.cols for s in shapes))
        )

    def _DirectSum(self, t, env):
        if not isinstance(t.domain, (ir.Lattice, ir.Sublattice)):
            self.fail(t, f"direct sum must range over a lattice, not {t.domain}")
        s = self.shape(t.body, env.bind(t.binder, SiteVar(t.domain)))
        if not isinstance(s, MatrixShape):
            self.fail(t, f"direct sum of {s}")
        return MatrixShape(ir.product(t.domain, s.rows), ir.product(t.domain, s.cols))

    def _IndexedSum(self, t, env):
        kind = DirVar() if isinstance(t.domain, ir.Directions) else SiteVar(t.domain)
        return self.shape(t.body, env.bind(t.binder, kind))

    def _Transpose(self, t, env):
        s = self.shape(t.a, env)
        if isinstance(s, MatrixShape):
            return MatrixShape(s.cols, s.rows)
        if isinstance(s, ScalarShape):
            return s
        self.fail(t, f"cannot transpose {s}")

    _Dagger = _Transpose

    def _Inverse(self, t, env):
        s = self.shape(t.a, env)
        if isinstance(s, ScalarShape):
            return s
        if not isinstance(s, MatrixShape) or not _sets_equal(s.rows, s.cols):
            self.fail(t, f"inverse of non-square {s}")
        return s

    def _SubVector(self, t, env):
        s = self.shape(t.a, env)
        if not isinstance(s, VectorShape):
            self.fail(t, f"subvector of {s}")
        return VectorShape(t.over)

    def _InnerProduct(self, t, env):
        a, b = self.shape(t.a, env), self.shape(t.b, env)
        if not (isinstance(a, VectorShape) and isinstance(b, VectorShape)):
            self.fail(t, f"inner product of {a} and {b}")
        if not _sets_equal(a.over, b.over):
            self.fail(t, f"inner product of {a} and {b}")
        return SCALAR

    def _Pred(self, t, env):
        if t.name != "isInvertible" or len(t.args) != 1:
            raise UnboundSymbol(f"unknown predicate {t.name!r}", t.loc)
        s = self.shape(t.args[0], env)
        if not isinstance(s, MatrixShape) or not _sets_equal(s.rows, s.cols):
            self.fail(t, f"isInvertible needs a square matrix, got {s}")
        return PRED


def _shape_eq(a: Shape, b: Shape) -> bool:
    if isinstance(a, VectorShape):
        return _sets_equal(a.over, b.over)
    if isinstance(a, MatrixShape):
        return _sets_equal(a.rows, b.rows) and _sets_equal(a.cols, b.cols)
    return True


def shapes_agree(a: Shape, b: Shape) -> bool:
    return type(a) is type(b) and _shape_eq(a, b)


def symbol_shape(t: ir.Term) -> Shape:
    if isinstance(t, ir.SymScalar):
        return SCALAR
    if isinstance(t, ir.VectorSym):
        return VectorShape(t.over)
    if isinstance(t, ir.MatrixSym):
        return MatrixShape(t.rows, t.cols)
    raise TypeError(f"{t!r} is not a symbol")


def env_for(terms) -> ShapeEnv:
    """Environment declaring every symbol appearing in the given terms."""
    env = ShapeEnv()
    for t in terms:
        for n in ir.walk(t):
            if isinstance(n, (ir.SymScalar, ir.VectorSym, ir.MatrixSym)):
                env[n.name] = symbol_shape(n)
    return env


# ---------------------------------------------------------------------------
# Whole-program checking
# ---------------------------------------------------------------------------


def check_statement(st: ir.Statement, env: ShapeEnv, errors: list[QiralError]) -> None:
    if isinstance(st, ir.Assign):
        lhs = st.lhs
        if not isinstance(lhs, (ir.VectorSym, ir.MatrixSym, ir.SymScalar)):
            errors.append(ShapeMismatch("assignment target must be a symbol", st.loc))
            return
        try:
            ls = infer_shape(lhs, env)
            rs = infer_shape(st.rhs, env)
        except QiralError as e:
            if e.loc is None:
                e.loc = st.loc
            errors.append(e)
            return
        # `v = 0` zero-initialises a vector
        zero_init = isinstance(rs, ScalarShape) and isinstance(st.rhs, ir.ScalarLit) \
            and st.rhs.value == 0
        if not shapes_agree(ls, rs) and not zero_init:
            errors.append(ShapeMismatch(f"cannot assign {rs} to {lhs.name}: {ls}", st.loc))
    elif isinstance(st, ir.While):
        for side in (st.cond.lhs, st.cond.rhs):
            try:
                s = infer_shape(side, env)
                if not isinstance(s, ScalarShape):
                    errors.append(ShapeMismatch(f"loop condition compares {s}", st.loc))
            except QiralError as e:
                if e.loc is None:
                    e.loc = st.loc
                errors.append(e)
        for s in st.body:
            check_statement(s, env, errors)
    elif isinstance(st, ir.Seq):
        for s in st.body:
            check_statement(s, env, errors)


@dataclass
class TypedProgram:
    env: ShapeEnv
    def_shapes: dict[str, Shape] = field(default_factory=dict)
    goal: list[ir.Statement] = field(default_factory=list)


def template_env(tpl) -> ShapeEnv:
    env = ShapeEnv()
    for sym in (*tpl.inputs, *tpl.outputs, *tpl.locals):
        env[sym.name] = symbol_shape(sym)
    return env


def check_template(tpl, errors: list[QiralError]) -> None:
    env = template_env(tpl)
    check_statement(tpl.match, env, errors)
    for p in tpl.requires:
        try:
            infer_shape(p, env)
        except QiralError as e:
            errors.append(e)
    for st in tpl.body:
        check_statement(st, env, errors)


def typecheck_program(defs, templates, goal, declarations=()) -> TypedProgram:
    """Typecheck a whole unit, collecting every error before raising."""
    errors: list[QiralError] = []
    env = ShapeEnv()
    for sym in declarations:
        env[sym.name] = symbol_shape(sym)
    out = TypedProgram(env)
    for name, body in defs:
        try:
            s = infer_shape(body, env)
            out.def_shapes[name] = s
            env[name] = s
        except QiralError as e:
            errors.append(e)
    for tpl in templates:
        check_template(tpl, errors)
    goal = [goal] if isinstance(goal, ir.Statement) else list(goal or [])
    for st in goal:
        check_statement(st, env, errors)
    out.goal = goal
    if errors:
        raise ProgramErrors(errors)
    return out

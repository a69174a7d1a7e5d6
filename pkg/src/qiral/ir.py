"""Term IR: index sets, matrix/vector/scalar terms and statements.

All nodes are immutable and hashable.  Source locations ride along on every
node but never take part in equality.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator

DIRECTIONS = ("x", "y", "z", "t")
PARITIES = ("even", "odd")


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Index sets
# ---------------------------------------------------------------------------


class IndexSet:
    """Base class of index-set descriptors."""

    name: str

    def atoms(self) -> tuple[IndexSet, ...]:
        return (self,)

    @property
    def cardinality(self) -> int | None:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lattice(IndexSet):
    name: str = "L"
    dims: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.dims is not None:
            if len(self.dims) != 4 or any(int(d) < 1 for d in self.dims):
                raise ValueError(f"lattice needs 4 positive extents, got {self.dims}")
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def cardinality(self) -> int | None:
        if self.dims is None:
            return None
        return self.dims[0] * self.dims[1] * self.dims[2] * self.dims[3]


@dataclass(frozen=True)
class Sublattice(IndexSet):
    """Sites of one parity class of a lattice (sum of coordinates even/odd)."""

    parent: Lattice
    parity: str

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"bad parity {self.parity!r}")

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"{self.parity}({self.parent.name})"

    @property
    def cardinality(self) -> int | None:
        n = self.parent.cardinality
        return None if n is None else n // 2


@dataclass(frozen=True)
class Atomic(IndexSet):
    name: str
    extent: int

    def __post_init__(self):
        if self.extent < 1:
            raise ValueError("atomic extent must be positive")

    @property
    def cardinality(self) -> int:
        return self.extent


@dataclass(frozen=True)
class Directions(IndexSet):
    name: str = "D"

    @property
    def cardinality(self) -> int:
        return 4


@dataclass(frozen=True)
class Abstract(IndexSet):
    """An index set left open, as used by generic algorithm templates."""

    name: str

    @property
    def cardinality(self) -> None:
        return None


@dataclass(frozen=True)
class Product(IndexSet):
    factors: tuple[IndexSet, ...]

    @property
    def name(self) -> str:  # type: ignore[override]
        return " (x) ".join(str(f) for f in self.factors)

    def atoms(self) -> tuple[IndexSet, ...]:
        return self.factors

    @property
    def cardinality(self) -> int | None:
        out = 1
        for f in self.factors:
            c = f.cardinality
            if c is None:
                return None
            out *= c
        return out


def product(*sets: IndexSet) -> IndexSet:
    """Flattened product; a single factor is returned unchanged."""
    atoms: list[IndexSet] = []
    for s in sets:
        atoms.extend(s.atoms())
    if len(atoms) == 1:
        return atoms[0]
    return Product(tuple(atoms))


C = Atomic("C", 3)
S = Atomic("S", 4)
D = Directions()


def lattice_of(s: IndexSet) -> Lattice | None:
    """The lattice (or parent lattice) appearing in an index set, if any."""
    for a in s.atoms():
        if isinstance(a, Lattice):
            return a
        if isinstance(a, Sublattice):
            return a.parent
    return None


def site_domain(s: IndexSet) -> IndexSet | None:
    """The lattice-like leading atom of a site-field index set."""
    for a in s.atoms():
        if isinstance(a, (Lattice, Sublattice)):
            return a
    return None


def parity_of(s: IndexSet) -> str | None:
    for a in s.atoms():
        if isinstance(a, Sublattice):
            return a.parity
    return None


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dir:
    """A signed direction: a constant x/y/z/t or a direction binder name."""

    name: str
    sign: int = 1

    def __neg__(self) -> Dir:
        return Dir(self.name, -self.sign)

    @property
    def is_const(self) -> bool:
        return self.name in DIRECTIONS

    @property
    def axis(self) -> int:
        return DIRECTIONS.index(self.name)

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "") + self.name


class Term:
    loc: Loc | None

    def __add__(self, other: Term) -> Term:
        return Add((self, other))

    def __sub__(self, other: Term) -> Term:
        return Sub(self, other)

    def __mul__(self, other: Term) -> Term:
        return Mul((self, other))


def _loc() -> Loc | None:
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class ScalarLit(Term):
    value: complex
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class SymScalar(Term):
    name: str
    real: bool = True
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class ImaginaryUnit(Term):
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Identity(Term):
    over: IndexSet
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Zero(Term):
    """Zero matrix (rows x cols) or zero vector (cols is None)."""

    rows: IndexSet
    cols: IndexSet | None = None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Gamma(Term):
    dir: Dir
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Gamma5(Term):
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Shift(Term):
    lattice: IndexSet
    dir: Dir
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class GaugeLink(Term):
    dir: Dir
    site: str
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Projection(Term):
    parity: str
    lattice: Lattice
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class VectorSym(Term):
    name: str
    over: IndexSet
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class MatrixSym(Term):
    name: str
    rows: IndexSet
    cols: IndexSet
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class PVar(Term):
    """Pattern variable; only appears in rule left-hand sides."""

    name: str
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Add(Term):
    terms: tuple[Term, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Sub(Term):
    a: Term
    b: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Neg(Term):
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Mul(Term):
    terms: tuple[Term, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class ScalarMul(Term):
    scalar: Term
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Div(Term):
    a: Term
    b: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Conj(Term):
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Tensor(Term):
    terms: tuple[Term, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class DirectSum(Term):
    binder: str
    domain: IndexSet
    body: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class IndexedSum(Term):
    binder: str
    domain: IndexSet
    body: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Transpose(Term):
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Dagger(Term):
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Inverse(Term):
    a: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class SubVector(Term):
    a: Term
    over: IndexSet
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class InnerProduct(Term):
    a: Term
    b: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Pred(Term):
    """Predicate application such as isInvertible(M)."""

    name: str
    args: tuple[Term, ...]
    loc: Loc | None = _loc()


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


class Statement:
    loc: Loc | None


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in (">", "<"):
            raise ValueError(f"unsupported comparison {self.op!r}")


@dataclass(frozen=True)
class Assign(Statement):
    lhs: Term
    rhs: Term
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class While(Statement):
    cond: Compare
    body: tuple[Statement, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Seq(Statement):
    body: tuple[Statement, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Decl(Statement):
    vars: tuple[tuple[str, object], ...]
    loc: Loc | None = _loc()


# ---------------------------------------------------------------------------
# Generic traversal
# ---------------------------------------------------------------------------

_TERM_FIELDS: dict[type, tuple[tuple[str, bool], ...]] = {}


def _term_fields(cls: type) -> tuple[tuple[str, bool], ...]:
    """(field name, is_tuple) for every Term-valued field of a node class."""
    try:
        return _TERM_FIELDS[cls]
    except KeyError:
        pass
    out = []
    for f in dataclasses.fields(cls):
        if f.name in ("terms", "args"):
            out.append((f.name, True))
        elif f.name in ("a", "b", "body", "scalar") and cls not in (While, Seq):
            out.append((f.name, False))
    _TERM_FIELDS[cls] = tuple(out)
    return _TERM_FIELDS[cls]


def children(t: Term) -> tuple[Term, ...]:
    out: list[Term] = []
    for name, is_tuple in _term_fields(type(t)):
        v = getattr(t, name)
        if is_tuple:
            out.extend(v)
        else:
            out.append(v)
    return tuple(out)


def rebuild(t: Term, kids: tuple[Term, ...] | list[Term]) -> Term:
    """Copy of t with its Term children replaced, in children() order."""
    kids = list(kids)
    changes = {}
    i = 0
    for name, is_tuple in _term_fields(type(t)):
        if is_tuple:
            n = len(getattr(t, name))
            changes[name] = tuple(kids[i:i + n])
            i += n
        else:
            changes[name] = kids[i]
            i += 1
    if not changes:
        return t
    return dataclasses.replace(t, **changes)


def walk(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    yield t
    for c in children(t):
        yield from walk(c)


def map_bottom_up(t: Term, fn) -> Term:
    kids = children(t)
    if kids:
        new = tuple(map_bottom_up(k, fn) for k in kids)
        if any(a is not b for a, b in zip(new, kids)):
            t = rebuild(t, new)
    return fn(t)


def substitute_dir(t: Term, binder: str, value: Dir) -> Term:
    """Replace a direction binder with a concrete (signed) direction."""

    def sub(d: Dir) -> Dir:
        if d.name == binder:
            return Dir(value.name, value.sign * d.sign)
        return d

    def fn(n: Term) -> Term:
        if isinstance(n, (Gamma, Shift, GaugeLink)):
            return dataclasses.replace(n, dir=sub(n.dir))
        return n

    return map_bottom_up(t, fn)


def replace_terms(t: Term, mapping: dict[Term, Term]) -> Term:
    """Structural substitution of whole subterms (top-down, no re-scan)."""
    if t in mapping:
        return mapping[t]
    kids = children(t)
    if not kids:
        return t
    new = tuple(replace_terms(k, mapping) for k in kids)
    if all(a is b for a, b in zip(new, kids)):
        return t
    return rebuild(t, new)


def add(*terms: Term) -> Term:
    flat: list[Term] = []
    for x in terms:
        flat.extend(x.terms if isinstance(x, Add) else (x,))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*terms: Term) -> Term:
    flat: list[Term] = []
    for x in terms:
        flat.extend(x.terms if isinstance(x, Mul) else (x,))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def tensor(*terms: Term) -> Term:
    flat: list[Term] = []
    for x in terms:
        flat.extend(x.terms if isinstance(x, Tensor) else (x,))
    return flat[0] if len(flat) == 1 else Tensor(tuple(flat))


def lit(v: complex | float | int) -> ScalarLit:
    return ScalarLit(complex(v))


def free_symbols(t: Term) -> set[str]:
    return {
        n.name for n in walk(t) if isinstance(n, (SymScalar, VectorSym, MatrixSym, PVar))
    }


def statement_terms(st: Statement) -> Iterator[Term]:
    if isinstance(st, Assign):
        yield st.lhs
        yield st.rhs
    elif isinstance(st, While):
        yield st.cond.lhs
        yield st.cond.rhs
        for s in st.body:
            yield from statement_terms(s)
    elif isinstance(st, Seq):
        for s in st.body:
            yield from statement_terms(s)


def map_statement(st: Statement, fn) -> Statement:
    """Apply a Term -> Term function to every term of a statement."""
    if isinstance(st, Assign):
        return dataclasses.replace(st, lhs=fn(st.lhs), rhs=fn(st.rhs))
    if isinstance(st, While):
        cond = Compare(st.cond.op, fn(st.cond.lhs), fn(st.cond.rhs))
        return dataclasses.replace(st, cond=cond, body=tuple(map_statement(s, fn) for s in st.body))
    if isinstance(st, Seq):
        return dataclasses.replace(st, body=tuple(map_statement(s, fn) for s in st.body))
    return st


def flatten_statements(body) -> list[Statement]:
    out: list[Statement] = []
    for st in body:
        if isinstance(st, Seq):
            out.extend(flatten_statements(st.body))
        else:
            out.append(st)
    return out


def contains(t: Term, cls: type) -> bool:
    return any(isinstance(n, cls) for n in walk(t))

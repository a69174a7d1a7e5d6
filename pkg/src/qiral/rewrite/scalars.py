"""Canonical form for scalar expressions.

A scalar is kept as a Laurent polynomial over atoms: symbols, inner
products, conjugates of complex atoms and opaque reciprocals of sums.
Rendering back to a Term is deterministic, so canonicalisation is
idempotent and can be used directly as a rewrite rule.
"""

from __future__ import annotations

import functools
from collections import defaultdict

from .. import ir

Monomial = tuple  # sorted tuple of (atom key, atom term, power)


class Poly:
    __slots__ = ("terms", "atoms")

    def __init__(self, terms=None, atoms=None):
        self.terms: dict[tuple, complex] = terms or {}
        self.atoms: dict[str, ir.Term] = atoms or {}

    @classmethod
    def const(cls, c: complex) -> Poly:
        return cls({(): complex(c)} if c != 0 else {})

    @classmethod
    def atom(cls, t: ir.Term) -> Poly:
        key = _atom_key(t)
        return cls({((key, 1),): 1 + 0j}, {key: t})

    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    def const_value(self) -> complex:
        return self.terms.get((), 0j)

    def __add__(self, other: Poly) -> Poly:
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0j) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return Poly(out, {**self.atoms, **other.atoms})

    def scale(self, c: complex) -> Poly:
        if c == 0:
            return Poly()
        return Poly({m: v * c for m, v in self.terms.items()}, dict(self.atoms))

    def __mul__(self, other: Poly) -> Poly:
        out: dict[tuple, complex] = defaultdict(complex)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[_mono_mul(m1, m2)] += c1 * c2
        return Poly({m: c for m, c in out.items() if c != 0}, {**self.atoms, **other.atoms})

    def inverse(self) -> Poly:
        if not self.terms:
            raise ZeroDivisionError("inverse of zero scalar")
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            return Poly({tuple((k, -p) for k, p in m): 1 / c}, dict(self.atoms))
        # opaque reciprocal of a sum; pull out the leading coefficient so the
        # atom itself is monic and stable
        lead = self.terms[min(self.terms, key=_mono_sort_key)]
        monic = self.scale(1 / lead)
        return Poly.atom(_Recip(render(monic))).scale(1 / lead)

    def conj(self) -> Poly:
        out = Poly.const(0)
        for m, c in self.terms.items():
            p = Poly.const(c.conjugate())
            for key, power in m:
                a = _conj_atom(self.atoms[key])
                p = p * _power(a, power)
            out = out + p
        return out


def _power(p: Poly, k: int) -> Poly:
    if k < 0:
        p, k = p.inverse(), -k
    out = Poly.const(1)
    for _ in range(k):
        out = out * p
    return out


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    powers: dict[str, int] = dict(a)
    for k, p in b:
        powers[k] = powers.get(k, 0) + p
    return tuple(sorted((k, p) for k, p in powers.items() if p != 0))


def _mono_sort_key(m: Monomial):
    return (sum(abs(p) for _, p in m), m)


class _Recip(ir.Term):
    """Marker atom 1/(sum); only lives inside Poly."""

    def __init__(self, body: ir.Term):
        self.body = body

    def __eq__(self, other):
        return isinstance(other, _Recip) and other.body == self.body

    def __hash__(self):
        return hash(("recip", self.body))


@functools.lru_cache(maxsize=4096)
def _atom_key(t: ir.Term) -> str:
    from ..frontend.printer import format_term
    if isinstance(t, _Recip):
        return "~/" + format_term(t.body)
    return format_term(t)


def _conj_atom(t: ir.Term) -> Poly:
    if isinstance(t, ir.SymScalar) and t.real:
        return Poly.atom(t)
    if isinstance(t, ir.InnerProduct):
        return Poly.atom(ir.InnerProduct(t.b, t.a))
    if isinstance(t, ir.Conj):
        return to_poly(t.a)
    if isinstance(t, _Recip):
        return to_poly(t.body).conj().inverse()
    return Poly.atom(ir.Conj(t))


def to_poly(t: ir.Term) -> Poly:
    if isinstance(t, ir.ScalarLit):
        return Poly.const(t.value)
    if isinstance(t, ir.ImaginaryUnit):
        return Poly.const(1j)
    if isinstance(t, ir.Add):
        out = Poly()
        for x in t.terms:
            out = out + to_poly(x)
        return out
    if isinstance(t, ir.Sub):
        return to_poly(t.a) + to_poly(t.b).scale(-1)
    if isinstance(t, ir.Neg):
        return to_poly(t.a).scale(-1)
    if isinstance(t, ir.Mul):
        out = Poly.const(1)
        for x in t.terms:
            out = out * to_poly(x)
        return out
    if isinstance(t, ir.ScalarMul):
        return to_poly(t.scalar) * to_poly(t.a)
    if isinstance(t, ir.Div):
        return to_poly(t.a) * to_poly(t.b).inverse()
    if isinstance(t, ir.Inverse):
        return to_poly(t.a).inverse()
    if isinstance(t, ir.Conj):
        return to_poly(t.a).conj()
    if isinstance(t, ir.Dagger):
        return to_poly(t.a).conj()
    if isinstance(t, ir.Transpose):
        return to_poly(t.a)
    return Poly.atom(t)


def _render_atom(t: ir.Term) -> ir.Term:
    return t


def render(p: Poly) -> ir.Term:
    if not p.terms:
        return ir.lit(0)
    parts = []
    for m in sorted(p.terms, key=_mono_sort_key):
        c = p.terms[m]
        num: list[ir.Term] = []
        den: list[ir.Term] = []
        for key, power in m:
            a = p.atoms[key]
            if isinstance(a, _Recip):
                # 1/(sum)^k renders on the other side of the fraction
                (den if power > 0 else num).extend([a.body] * abs(power))
            else:
                (num if power > 0 else den).extend([a] * abs(power))
        head: list[ir.Term] = [] if c == 1 and num else [ir.lit(c)]
        numerator = ir.mul(*head, *num) if head or num else ir.lit(1)
        if den:
            parts.append(ir.Div(numerator, ir.mul(*den)))
        else:
            parts.append(numerator)
    return ir.add(*parts)


def canonical(t: ir.Term) -> ir.Term:
    """Canonical rendering of a scalar expression."""
    return render(to_poly(t))


def is_scalar_term(t: ir.Term) -> bool:
    """Structural scalar test (no environment needed)."""
    if isinstance(t, (ir.ScalarLit, ir.ImaginaryUnit, ir.SymScalar, ir.InnerProduct,
                      ir.Div, ir.Conj)):
        return True
    if isinstance(t, (ir.Add, ir.Mul)):
        return all(is_scalar_term(x) for x in t.terms)
    if isinstance(t, (ir.Sub,)):
        return is_scalar_term(t.a) and is_scalar_term(t.b)
    if isinstance(t, (ir.Neg, ir.Inverse, ir.Dagger, ir.Transpose)):
        return is_scalar_term(t.a)
    return False


def literal_value(t: ir.Term) -> complex | None:
    """Numeric value of a closed constant scalar, else None."""
    try:
        p = to_poly(t)
    except ZeroDivisionError:
        return None
    return p.const_value() if p.is_const() else None


def is_pure_imaginary(t: ir.Term) -> bool:
    """True when t is i times a polynomial over real symbols with real coefficients."""
    try:
        p = to_poly(t)
    except ZeroDivisionError:
        return False
    if not p.terms:
        return False
    for m, c in p.terms.items():
        if c.real != 0:
            return False
        for key, _ in m:
            a = p.atoms[key]
            if not (isinstance(a, ir.SymScalar) and a.real):
                return False
    return True


def is_symbolically_nonzero(t: ir.Term) -> bool:
    """Nonzero literals and single monomials over declared symbols.

    Symbols are treated as nonzero-capable parameters; a sum of monomials is
    only accepted when it is 1 plus a sum of squares of real terms.
    """
    try:
        p = to_poly(t)
    except ZeroDivisionError:
        return False
    if not p.terms:
        return False
    if len(p.terms) == 1:
        return True
    return _one_plus_squares(p)


def _one_plus_squares(p: Poly) -> bool:
    if p.terms.get((), 0) != 1:
        return False
    for m, c in p.terms.items():
        if m == ():
            continue
        if c.imag != 0 or c.real <= 0:
            return False
        for key, power in m:
            a = p.atoms[key]
            if power % 2 or not (isinstance(a, ir.SymScalar) and a.real):
                return False
    return True

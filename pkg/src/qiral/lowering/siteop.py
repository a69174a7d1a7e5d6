"""Structured matrix terms as sums of stencil pieces.

A piece acts on a site field as

    (P v)[s] = coef * links(s) (x) spin * v[s + offset]

restricted to output sites of a given parity.  Pieces may cover only part of
the site/colour/spin factors while they are being assembled from tensor
products; a fully assembled piece covers all three.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import ir
from ..errors import UnloweredConstruct
from ..frontend.printer import format_term
from ..rewrite.scalars import is_scalar_term
from ..vm.gamma import GAMMA, GAMMA5
from .loopir import LinkRef

SITE, COLOR, SPIN = "site", "color", "spin"
ORDER = (SITE, COLOR, SPIN)
ZERO4 = (0, 0, 0, 0)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _neg(a):
    return tuple(-x for x in a)


def _odd(v) -> bool:
    return sum(abs(x) for x in v) % 2 == 1


def _flip(p: str) -> str:
    return "odd" if p == "even" else "even"


def _shifted_parity(p: str | None, off) -> str | None:
    """Parity required of s, given that s + off must have parity p."""
    if p is None:
        return None
    return _flip(p) if _odd(off) else p


def _join_parity(a: str | None, b: str | None):
    if a is None:
        return b, True
    if b is None or a == b:
        return a, True
    return None, False


@dataclass(frozen=True)
class Piece:
    coef: ir.Term
    cover: tuple[str, ...]
    out_dom: str | None = None
    in_dom: str | None = None
    offset: tuple[int, int, int, int] = ZERO4
    parity: str | None = None
    links: tuple[LinkRef, ...] = ()
    spin: np.ndarray | None = None

    @property
    def simple(self) -> bool:
        return sum(abs(x) for x in self.offset) <= 1 and len(self.links) <= 1

    def key(self):
        return (self.out_dom, self.in_dom, self.offset, self.parity, self.links)


def _spin_of(p: Piece) -> np.ndarray:
    return p.spin if p.spin is not None else np.eye(4, dtype=complex)


def _with_coef(p: Piece, c: ir.Term) -> Piece:
    return replace(p, coef=ir.mul(c, p.coef) if p.coef != ir.lit(1) else c)


def _coef_mul(a: ir.Term, b: ir.Term) -> ir.Term:
    one = ir.lit(1)
    if a == one:
        return b
    if b == one:
        return a
    return ir.mul(a, b)


def tensor(a: Piece, b: Piece) -> Piece:
    if not a.cover or not b.cover:
        raise UnloweredConstruct("tensor with an empty factor")
    if ORDER.index(a.cover[-1]) >= ORDER.index(b.cover[0]):
        raise UnloweredConstruct(f"tensor factors out of site/colour/spin order: "
                                 f"{a.cover} then {b.cover}")
    site = a if SITE in a.cover else b
    color = a if COLOR in a.cover else b
    return Piece(
        coef=_coef_mul(a.coef, b.coef),
        cover=a.cover + b.cover,
        out_dom=site.out_dom, in_dom=site.in_dom, offset=site.offset, parity=site.parity,
        links=color.links if COLOR in a.cover + b.cover else (),
        spin=(a.spin if SPIN in a.cover else b.spin) if SPIN in a.cover + b.cover else None,
    )


def compose(a: Piece, b: Piece) -> Piece | None:
    """a * b, or None when the parity constraints contradict each other."""
    if a.cover != b.cover:
        raise UnloweredConstruct(f"product of pieces over {a.cover} and {b.cover}")
    parity, ok = _join_parity(a.parity, _shifted_parity(b.parity, a.offset))
    if not ok:
        return None
    # the intermediate site s + a.offset has to lie in a's input domain
    if a.in_dom in ir.PARITIES:
        parity, ok = _join_parity(parity, _shifted_parity(a.in_dom, a.offset))
        if not ok:
            return None
    if a.out_dom in ir.PARITIES:
        parity, ok = _join_parity(parity, a.out_dom)
        if not ok:
            return None
        if parity == a.out_dom:
            parity = None
    links = a.links + tuple(replace(l, rel=_add(l.rel, a.offset)) for l in b.links)
    spin = None
    if SPIN in a.cover:
        spin = _spin_of(a) @ _spin_of(b)
    return Piece(
        coef=_coef_mul(a.coef, b.coef), cover=a.cover,
        out_dom=a.out_dom, in_dom=b.in_dom,
        offset=_add(a.offset, b.offset), parity=parity, links=links, spin=spin,
    )


def dagger(p: Piece) -> Piece:
    off = p.offset
    back = _neg(off)
    links = tuple(LinkRef(l.axis, not l.dagger, _add(l.rel, back)) for l in reversed(p.links))
    # output site t of the adjoint is t = s + offset for a valid old output site s
    parity, ok = _join_parity(_shifted_parity(p.parity, back),
                              _shifted_parity(p.out_dom if p.out_dom in ir.PARITIES else None,
                                              back))
    if not ok:
        raise UnloweredConstruct("adjoint of an empty stencil piece")
    return Piece(
        coef=ir.Conj(p.coef) if p.coef != ir.lit(1) else p.coef, cover=p.cover,
        out_dom=p.in_dom, in_dom=p.out_dom, offset=back,
        parity=_restrict(parity, p.in_dom), links=links,
        spin=None if p.spin is None else p.spin.conj().T,
    )


def transpose(p: Piece) -> Piece:
    if p.links:
        raise UnloweredConstruct("transpose of a gauge-link block")
    q = dagger(p)
    return replace(q, coef=p.coef, spin=None if p.spin is None else p.spin.T)


def _restrict(parity: str | None, dom: str | None) -> str | None:
    """Drop a parity constraint the output domain already implies."""
    if dom in ir.PARITIES and parity == dom:
        return None
    return parity


# ---------------------------------------------------------------------------
# term -> pieces
# ---------------------------------------------------------------------------


def _domain(s: ir.IndexSet) -> str:
    if isinstance(s, ir.Sublattice):
        return s.parity
    if isinstance(s, ir.Lattice):
        return "L"
    raise UnloweredConstruct(f"{s} is not a lattice domain")


def _cover_of(s: ir.IndexSet) -> tuple[tuple[str, ...], str | None]:
    cover, dom = [], None
    for a in s.atoms():
        if isinstance(a, (ir.Lattice, ir.Sublattice)):
            cover.append(SITE)
            dom = _domain(a)
        elif a == ir.C:
            cover.append(COLOR)
        elif a == ir.S:
            cover.append(SPIN)
        else:
            raise UnloweredConstruct(f"index set {a} has no site/colour/spin role")
    if tuple(cover) not in _VALID_COVERS:
        raise UnloweredConstruct(f"index set {s} is not ordered site, colour, spin")
    return tuple(cover), dom


_VALID_COVERS = {(SITE,), (COLOR,), (SPIN,), (SITE, COLOR), (COLOR, SPIN), (SITE, SPIN),
                 (SITE, COLOR, SPIN)}


def _identity(s: ir.IndexSet) -> Piece:
    cover, dom = _cover_of(s)
    return Piece(ir.lit(1), cover, out_dom=dom, in_dom=dom,
                 spin=np.eye(4, dtype=complex) if SPIN in cover else None)


def _link(d: ir.Dir) -> LinkRef:
    if not d.is_const:
        raise UnloweredConstruct(f"unbound direction {d}")
    if d.sign > 0:
        return LinkRef(d.axis, False, ZERO4)
    back = [0, 0, 0, 0]
    back[d.axis] = -1
    return LinkRef(d.axis, True, tuple(back))


def _unit(d: ir.Dir) -> tuple[int, int, int, int]:
    v = [0, 0, 0, 0]
    v[d.axis] = d.sign
    return tuple(v)


def pieces(t: ir.Term, defs: dict | None = None) -> list[Piece]:
    """Expand a matrix term into a list of pieces whose sum it equals."""
    defs = defs or {}
    return _merge(_pieces(t, defs, None))


def _merge(ps: list[Piece]) -> list[Piece]:
    return ps


def _pieces(t, defs, site_binder) -> list[Piece]:
    if isinstance(t, ir.MatrixSym) and t.name in defs:
        return _pieces(defs[t.name], defs, site_binder)
    if isinstance(t, ir.Identity):
        return [_identity(t.over)]
    if isinstance(t, ir.Zero):
        return []
    if isinstance(t, ir.Gamma):
        if not t.dir.is_const:
            raise UnloweredConstruct(f"gamma over unbound direction {t.dir}")
        return [Piece(ir.lit(1), (SPIN,), spin=GAMMA[t.dir.name].copy())]
    if isinstance(t, ir.Gamma5):
        return [Piece(ir.lit(1), (SPIN,), spin=GAMMA5.copy())]
    if isinstance(t, ir.Shift):
        dom = _domain(t.lattice)
        return [Piece(ir.lit(1), (SITE,), dom, dom, offset=_unit(t.dir))]
    if isinstance(t, ir.Projection):
        return [Piece(ir.lit(1), (SITE,), t.parity, "L")]
    if isinstance(t, ir.GaugeLink):
        if site_binder is None or t.site != site_binder:
            raise UnloweredConstruct(f"gauge link outside its site sum: {format_term(t)}")
        return [Piece(ir.lit(1), (COLOR,), links=(_link(t.dir),))]
    if isinstance(t, ir.ScalarMul):
        return [_with_coef(p, t.scalar) for p in _pieces(t.a, defs, site_binder)]
    if isinstance(t, ir.Neg):
        return [_with_coef(p, ir.lit(-1)) for p in _pieces(t.a, defs, site_binder)]
    if isinstance(t, ir.Add):
        out = []
        for x in t.terms:
            out.extend(_pieces(x, defs, site_binder))
        return out
    if isinstance(t, ir.Sub):
        return _pieces(t.a, defs, site_binder) + \
            [_with_coef(p, ir.lit(-1)) for p in _pieces(t.b, defs, site_binder)]
    if isinstance(t, ir.Tensor):
        acc = _pieces(t.terms[0], defs, site_binder)
        for x in t.terms[1:]:
            right = _pieces(x, defs, site_binder)
            acc = [tensor(a, b) for a in acc for b in right]
        return acc
    if isinstance(t, ir.Mul):
        scal = [x for x in t.terms if is_scalar_term(x)]
        if scal:
            rest = [x for x in t.terms if not is_scalar_term(x)]
            if not rest:
                raise UnloweredConstruct(f"scalar where an operator was expected: "
                                         f"{format_term(t)}")
            inner = rest[0] if len(rest) == 1 else ir.Mul(tuple(rest))
            return [_with_coef(p, ir.mul(*scal)) for p in _pieces(inner, defs, site_binder)]
        acc = _pieces(t.terms[0], defs, site_binder)
        for x in t.terms[1:]:
            right = _pieces(x, defs, site_binder)
            acc = [c for a in acc for b in right if (c := compose(a, b)) is not None]
        return acc
    if isinstance(t, ir.Dagger):
        return [dagger(p) for p in _pieces(t.a, defs, site_binder)]
    if isinstance(t, ir.Transpose):
        return [transpose(p) for p in _pieces(t.a, defs, site_binder)]
    if isinstance(t, ir.IndexedSum):
        if not isinstance(t.domain, ir.Directions):
            raise UnloweredConstruct(f"indexed sum over {t.domain}")
        out = []
        for d in ir.DIRECTIONS:
            out.extend(_pieces(ir.substitute_dir(t.body, t.binder, ir.Dir(d)), defs, site_binder))
        return out
    if isinstance(t, ir.DirectSum):
        dom = _domain(t.domain)
        body = _pieces(t.body, defs, t.binder)
        out = []
        for p in body:
            if SITE in p.cover:
                raise UnloweredConstruct("direct sum over sites of a site-level block")
            site = Piece(ir.lit(1), (SITE,), dom, dom)
            out.append(tensor(site, p))
        return out
    raise UnloweredConstruct(f"no lowering for {type(t).__name__}: {format_term(t)}")


def is_simple(ps: list[Piece]) -> bool:
    return all(p.simple for p in ps)


def check_full(ps: list[Piece], what: ir.Term) -> None:
    for p in ps:
        if p.cover != ORDER:
            raise UnloweredConstruct(
                f"operator does not act on site (x) colour (x) spin fields: {format_term(what)}")

"""Statement programs to LoopIR.

Vector statements become parallel site loops: stencil operators turn into
hop kernels (gather plus colour-spin block multiply), linear combinations
into lincomb kernels.  Inner products become ordered reductions, scalar
statements stay on the host, and while loops become sequential loops.
"""

from __future__ import annotations

import itertools

from .. import ir
from ..errors import UnloweredConstruct
from ..frontend.printer import format_statement, format_term
from ..rewrite.scalars import is_scalar_term
from . import siteop
from .loopir import (Buffer, Hop, HopKernel, LinComb, LoopIR, ParallelFor, Reduction,
                     ScalarAssign, SeqWhile, Spin)

LAYOUTS = ("nested", "linear")
MAX_PIECES = 512

Terms = list  # list of (coef Term, buffer name)


def _site_domain(s: ir.IndexSet) -> str:
    dom = ir.site_domain(s)
    if dom is None or [a.cardinality for a in s.atoms()[1:]] != [3, 4]:
        raise UnloweredConstruct(f"vectors over {s} are not colour-spin site fields")
    return dom.parity if isinstance(dom, ir.Sublattice) else "L"


def _is_zero(t: ir.Term) -> bool:
    return isinstance(t, ir.Zero) or (isinstance(t, ir.ScalarLit) and t.value == 0)


class _Lowerer:
    def __init__(self, defs: dict, layout: str):
        self.defs = defs
        self.layout = layout
        self.buffers: dict[str, Buffer] = {}
        self.counter = itertools.count(1)
        self.dots = itertools.count(1)

    # buffers ---------------------------------------------------------------

    def declare(self, sym: ir.VectorSym) -> str:
        if sym.name not in self.buffers:
            self.buffers[sym.name] = Buffer(sym.name, _site_domain(sym.over), role="state")
        return sym.name

    def temp(self, domain: str) -> str:
        name = f"t{next(self.counter)}"
        self.buffers[name] = Buffer(name, domain, role="temp")
        return name

    def domain(self, name: str) -> str:
        return self.buffers[name].domain

    def loop(self, kernel) -> ParallelFor:
        return ParallelFor(self.domain(kernel.out), (kernel,), layout=self.layout)

    # vector expressions ------------------------------------------------------

    def vec(self, e: ir.Term, out: list) -> Terms:
        if isinstance(e, ir.VectorSym):
            return [(ir.lit(1), self.declare(e))]
        if _is_zero(e):
            return []
        if isinstance(e, ir.ScalarMul):
            return [(_cmul(e.scalar, c), b) for c, b in self.vec(e.a, out)]
        if isinstance(e, ir.Neg):
            return [(_cmul(ir.lit(-1), c), b) for c, b in self.vec(e.a, out)]
        if isinstance(e, ir.Add):
            return [tb for x in e.terms for tb in self.vec(x, out)]
        if isinstance(e, ir.Sub):
            return self.vec(e.a, out) + self.vec(ir.Neg(e.b), out)
        if isinstance(e, ir.Mul):
            scal = [x for x in e.terms if is_scalar_term(x)]
            rest = [x for x in e.terms if not is_scalar_term(x)]
            if scal:
                inner = rest[0] if len(rest) == 1 else ir.Mul(tuple(rest))
                return self.vec(ir.ScalarMul(ir.mul(*scal), inner), out)
            mats, v = rest[:-1], rest[-1]
            src = self.materialize(self.vec(v, out), out, None)
            if not mats:
                return [(ir.lit(1), src)]
            mat = mats[0] if len(mats) == 1 else ir.Mul(tuple(mats))
            return self.apply(mat, src, out)
        raise UnloweredConstruct(f"no lowering for vector expression {format_term(e)}")

    def materialize(self, terms: Terms, out: list, domain: str | None) -> str:
        if len(terms) == 1 and terms[0][0] == ir.lit(1):
            return terms[0][1]
        if domain is None:
            if not terms:
                raise UnloweredConstruct("zero vector of unknown domain")
            domain = self.domain(terms[0][1])
        name = self.temp(domain)
        out.append(self.loop(LinComb(name, tuple(terms))))
        return name

    # operators ---------------------------------------------------------------

    def stencil(self, mat: ir.Term) -> list[siteop.Piece] | None:
        try:
            ps = siteop.pieces(mat, self.defs)
        except UnloweredConstruct:
            return None
        if len(ps) > MAX_PIECES or not siteop.is_simple(ps):
            return None
        siteop.check_full(ps, mat)
        return ps

    def apply(self, mat: ir.Term, src: str, out: list) -> Terms:
        if isinstance(mat, ir.MatrixSym) and mat.name in self.defs:
            mat = self.defs[mat.name]
        ps = self.stencil(mat)
        if ps is not None:
            return [(ir.lit(1), self.hop(ps, src, out, mat))]
        if isinstance(mat, ir.ScalarMul):
            return [(_cmul(mat.scalar, c), b) for c, b in self.apply(mat.a, src, out)]
        if isinstance(mat, ir.Neg):
            return [(_cmul(ir.lit(-1), c), b) for c, b in self.apply(mat.a, src, out)]
        if isinstance(mat, ir.Add):
            return [tb for x in mat.terms for tb in self.apply(x, src, out)]
        if isinstance(mat, ir.Sub):
            return self.apply(mat.a, src, out) + self.apply(ir.Neg(mat.b), src, out)
        if isinstance(mat, ir.Mul) and any(is_scalar_term(x) for x in mat.terms):
            scal = [x for x in mat.terms if is_scalar_term(x)]
            rest = [x for x in mat.terms if not is_scalar_term(x)]
            inner = rest[0] if len(rest) == 1 else ir.Mul(tuple(rest))
            return self.apply(ir.ScalarMul(ir.mul(*scal), inner), src, out)
        if isinstance(mat, ir.Mul):
            factors = list(mat.terms)
            # longest suffix that is still a nearest-neighbour stencil
            for k in range(len(factors) - 1):
                tail = ir.Mul(tuple(factors[k:]))
                if self.stencil(tail) is not None:
                    break
            else:
                k = len(factors) - 1
            tail = factors[k] if k == len(factors) - 1 else ir.Mul(tuple(factors[k:]))
            mid = self.materialize(self.apply(tail, src, out), out, None)
            if k == 0:
                return [(ir.lit(1), mid)]
            head = factors[0] if k == 1 else ir.Mul(tuple(factors[:k]))
            return self.apply(head, mid, out)
        raise UnloweredConstruct(f"no lowering for operator {format_term(mat)}")

    def hop(self, ps: list[siteop.Piece], src: str, out: list, mat: ir.Term) -> str:
        if not ps:
            raise UnloweredConstruct(f"operator is identically zero: {format_term(mat)}")
        doms = {(p.out_dom, p.in_dom) for p in ps}
        if len(doms) != 1:
            raise UnloweredConstruct(f"operator mixes domains {sorted(doms)}")
        (out_dom, in_dom), = doms
        if in_dom != self.domain(src):
            raise UnloweredConstruct(
                f"operator expects {in_dom} fields but {src} lives on {self.domain(src)}")
        legs: dict = {}
        for p in ps:
            key = (p.offset, p.links[0] if p.links else None, p.parity)
            legs.setdefault(key, []).append((p.coef, Spin.of(p.spin)))
        hops = tuple(Hop(off, link, par, tuple(spins))
                     for (off, link, par), spins in legs.items())
        name = self.temp(out_dom)
        out.append(self.loop(HopKernel(name, src, hops)))
        return name

    # statements --------------------------------------------------------------

    def statement(self, st: ir.Statement) -> list:
        out: list = []
        if isinstance(st, ir.Seq):
            for s in st.body:
                out.extend(self.statement(s))
        elif isinstance(st, ir.While):
            body = []
            for s in st.body:
                body.extend(self.statement(s))
            if any(ir.contains(t, ir.InnerProduct) for t in (st.cond.lhs, st.cond.rhs)):
                raise UnloweredConstruct("inner product inside a loop condition")
            out.append(SeqWhile(st.cond, tuple(body)))
        elif isinstance(st, ir.Decl):
            pass
        elif isinstance(st, ir.Assign) and isinstance(st.lhs, ir.VectorSym):
            self.vector_assign(st, out)
        elif isinstance(st, ir.Assign) and isinstance(st.lhs, ir.SymScalar):
            self.scalar_assign(st, out)
        else:
            raise UnloweredConstruct(f"cannot lower statement {format_statement(st)}")
        return out

    def vector_assign(self, st: ir.Assign, out: list) -> None:
        target = self.declare(st.lhs)
        start = len(out)
        terms = self.vec(st.rhs, out)
        last = out[-1].body[0] if len(out) > start else None
        fresh = (last is not None and len(terms) == 1 and terms[0] == (ir.lit(1), last.out)
                 and self.buffers[last.out].role == "temp")
        if fresh and isinstance(last, HopKernel) and last.src != target \
                and self.domain(last.out) == self.domain(target):
            out[-1] = self.loop(HopKernel(target, last.src, last.hops))
            del self.buffers[last.out]
            return
        if fresh and isinstance(last, LinComb) and self.domain(last.out) == self.domain(target):
            out[-1] = self.loop(LinComb(target, last.terms))
            del self.buffers[last.out]
            return
        if terms == [(ir.lit(1), target)]:
            return
        for _, b in terms:
            if self.domain(b) != self.domain(target):
                raise UnloweredConstruct(
                    f"{format_statement(st)}: {b} lives on {self.domain(b)}, "
                    f"target on {self.domain(target)}")
        out.append(self.loop(LinComb(target, tuple(terms))))

    def scalar_assign(self, st: ir.Assign, out: list) -> None:
        rhs = st.rhs
        if isinstance(rhs, ir.InnerProduct):
            a, b = self.dot_operands(rhs, out)
            out.append(Reduction(st.lhs.name, a, b, self.domain(a)))
            return
        subst = {}
        for n in ir.walk(rhs):
            if isinstance(n, ir.InnerProduct) and n not in subst:
                a, b = self.dot_operands(n, out)
                name = f"dot{next(self.dots)}"
                out.append(Reduction(name, a, b, self.domain(a)))
                subst[n] = ir.SymScalar(name, real=False)
        if subst:
            rhs = ir.replace_terms(rhs, subst)
        out.append(ScalarAssign(st.lhs.name, rhs))

    def dot_operands(self, ip: ir.InnerProduct, out: list) -> tuple[str, str]:
        a = self.materialize(self.vec(ip.a, out), out, None)
        b = self.materialize(self.vec(ip.b, out), out, None)
        if self.domain(a) != self.domain(b):
            raise UnloweredConstruct(f"inner product across domains: {format_term(ip)}")
        return a, b


def _cmul(a: ir.Term, b: ir.Term) -> ir.Term:
    if a == ir.lit(1):
        return b
    if b == ir.lit(1):
        return a
    return ir.mul(a, b)


# ---------------------------------------------------------------------------
# program-level analysis
# ---------------------------------------------------------------------------


def _scan(body, written_v: set, written_s: set, inputs_v: list, inputs_s: list) -> None:
    from .loopir import LibraryCall

    def read_v(name):
        if name not in written_v and name not in inputs_v:
            inputs_v.append(name)

    def read_s(term):
        for n in ir.walk(term):
            if isinstance(n, ir.SymScalar) and n.name not in written_s \
                    and n.name not in inputs_s:
                inputs_s.append(n.name)

    for node in body:
        if isinstance(node, ParallelFor):
            for k in node.body:
                k = k.kernel if isinstance(k, LibraryCall) else k
                if isinstance(k, HopKernel):
                    read_v(k.src)
                    for h in k.hops:
                        for c, _ in h.spins:
                            read_s(c)
                else:
                    for c, b in k.terms:
                        read_s(c)
                        read_v(b)
                written_v.add(k.out)
        elif isinstance(node, Reduction):
            read_v(node.a)
            read_v(node.b)
            written_s.add(node.target)
        elif isinstance(node, ScalarAssign):
            read_s(node.expr)
            written_s.add(node.target)
        elif isinstance(node, SeqWhile):
            read_s(node.cond.lhs)
            read_s(node.cond.rhs)
            _scan(node.body, written_v, written_s, inputs_v, inputs_s)


def lower(program, layout: str = "linear", defs: dict | None = None,
          result: str | None = None) -> LoopIR:
    """Lower an inverse-free statement list."""
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    if isinstance(program, ir.Statement):
        program = [program]
    low = _Lowerer(dict(defs or {}), layout)
    body = []
    for st in program:
        if any(ir.contains(t, ir.Inverse) for t in ir.statement_terms(st)
               if not is_scalar_term(t)):
            raise UnloweredConstruct(f"matrix inverse left in {format_statement(st)}")
        body.extend(low.statement(st))
    inputs_v: list[str] = []
    inputs_s: list[str] = []
    _scan(body, set(), set(), inputs_v, inputs_s)
    buffers = []
    assigned = _assigned_vectors(program)
    for name, buf in low.buffers.items():
        if name in inputs_v:
            role = "input"
        elif buf.role == "state" and name in assigned:
            role = "output"
        else:
            role = buf.role
        buffers.append(Buffer(name, buf.domain, buf.block, role))
    if result is None:
        outs = [b.name for b in buffers if b.role == "output"]
        result = "x" if "x" in outs else (outs[-1] if outs else None)
    return LoopIR(tuple(buffers), tuple(body), tuple(inputs_s), result, layout)


def _assigned_vectors(program) -> set[str]:
    out = set()

    def visit(stmts):
        for st in stmts:
            if isinstance(st, ir.Assign) and isinstance(st.lhs, ir.VectorSym):
                out.add(st.lhs.name)
            elif isinstance(st, (ir.While, ir.Seq)):
                visit(st.body)

    visit(program)
    return out

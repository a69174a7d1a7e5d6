"""Rewrite rules implemented in Python.

These cover what is awkward to state as a plain equation: flattening,
scalar arithmetic, shape-dependent zero laws, block alignment for the
mixed-product law and the parity laws.  Every rule carries a sampler that
produces a random closed instance on which it fires, so the oracle can
check it the same way as a declarative equation.
"""

from __future__ import annotations

from .. import ir
from ..shapes import MatrixShape, VectorShape
from . import scalars
from .engine import Context, RewriteRule

# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def _zero_like(ctx: Context, t: ir.Term) -> ir.Term | None:
    s = ctx.try_shape(t)
    if isinstance(s, MatrixShape):
        return ir.Zero(s.rows, s.cols)
    if isinstance(s, VectorShape):
        return ir.Zero(s.over)
    if s is not None:
        return ir.lit(0)
    return None


def _is_zero(t: ir.Term) -> bool:
    return isinstance(t, ir.Zero)


def _scalar(t: ir.Term) -> bool:
    return scalars.is_scalar_term(t)


def _smul(s: ir.Term, a: ir.Term) -> ir.Term:
    return ir.ScalarMul(scalars.canonical(s), a)


def _split_scalar(t: ir.Term) -> tuple[ir.Term, ir.Term]:
    if isinstance(t, ir.ScalarMul):
        return t.scalar, t.a
    return ir.lit(1), t


def _rand_atomic(rng, name: str, lo: int = 1, hi: int = 3) -> ir.Atomic:
    return ir.Atomic(name, int(rng.integers(lo, hi + 1)))


def _rand_matrix(rng, name: str, rows: ir.IndexSet, cols: ir.IndexSet, bindings: dict):
    m = ir.MatrixSym(name, rows, cols)
    shape = (rows.cardinality, cols.cardinality)
    bindings[name] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return m


# ---------------------------------------------------------------------------
# structural rules
# ---------------------------------------------------------------------------


def _flatten(t, ctx):
    if isinstance(t, (ir.Add, ir.Mul, ir.Tensor)):
        cls = type(t)
        if len(t.terms) == 1:
            return t.terms[0]
        if any(isinstance(x, cls) for x in t.terms):
            flat = []
            for x in t.terms:
                flat.extend(x.terms if isinstance(x, cls) else (x,))
            return cls(tuple(flat))
    return None


def _flatten_sample(rng, lattice):
    b = {}
    X = _rand_atomic(rng, "X", 2, 3)
    ms = [_rand_matrix(rng, f"M{k}", X, X, b) for k in range(3)]
    cls = [ir.Add, ir.Mul, ir.Tensor][int(rng.integers(3))]
    return cls((cls((ms[0], ms[1])), ms[2])), b


def _scalar_canon(t, ctx):
    if isinstance(t, (ir.ScalarLit, ir.SymScalar, ir.InnerProduct, ir.PVar)):
        return None
    if not _scalar(t):
        return None
    try:
        out = scalars.canonical(t)
    except ZeroDivisionError:
        return None
    return out if out != t else None


def _scalar_canon_sample(rng, lattice):
    k, m = ir.SymScalar("kappa"), ir.SymScalar("mu")
    a, b = (ir.lit(complex(*rng.standard_normal(2))) for _ in range(2))
    forms = [
        ir.Add((ir.Mul((a, k)), ir.Mul((k, b)))),
        ir.Div(ir.Mul((a, k, m)), ir.Add((ir.lit(1), ir.Mul((k, k))))),
        ir.Conj(ir.Mul((ir.ImaginaryUnit(), a, m))),
        ir.Sub(ir.Mul((ir.lit(2), ir.ImaginaryUnit(), k, m)), ir.Neg(b)),
    ]
    return forms[int(rng.integers(len(forms)))], {}


def _neg_sub(t, ctx):
    if isinstance(t, ir.Neg) and not _scalar(t):
        return ir.ScalarMul(ir.lit(-1), t.a)
    if isinstance(t, ir.Sub) and not _scalar(t):
        return ir.add(t.a, ir.ScalarMul(ir.lit(-1), t.b))
    return None


def _neg_sub_sample(rng, lattice):
    b = {}
    X = _rand_atomic(rng, "X", 2, 3)
    m1, m2 = (_rand_matrix(rng, f"M{k}", X, X, b) for k in range(2))
    return (ir.Sub(m1, m2) if rng.integers(2) else ir.Neg(m1)), b


def _scalar_pull(t, ctx):
    """Move scalar factors to a single ScalarMul in front."""
    if isinstance(t, ir.ScalarMul):
        if isinstance(t.a, ir.ScalarMul):
            return _smul(ir.mul(t.scalar, t.a.scalar), t.a.a)
        v = scalars.literal_value(t.scalar)
        if v == 1:
            return t.a
        if v == 0:
            return _zero_like(ctx, t.a)
        if _scalar(t.a):
            return ir.mul(t.scalar, t.a)
        return None
    if isinstance(t, (ir.Mul, ir.Tensor)) and not _scalar(t):
        coef: list[ir.Term] = []
        rest: list[ir.Term] = []
        for x in t.terms:
            if isinstance(t, ir.Mul) and _scalar(x):
                coef.append(x)
            elif isinstance(x, ir.ScalarMul):
                coef.append(x.scalar)
                rest.append(x.a)
            else:
                rest.append(x)
        if not coef:
            return None
        body = (ir.mul if isinstance(t, ir.Mul) else ir.tensor)(*rest)
        return _smul(ir.mul(*coef), body)
    if isinstance(t, ir.Dagger) and isinstance(t.a, ir.ScalarMul):
        return _smul(ir.Conj(t.a.scalar), ir.Dagger(t.a.a))
    if isinstance(t, ir.Transpose) and isinstance(t.a, ir.ScalarMul):
        return ir.ScalarMul(t.a.scalar, ir.Transpose(t.a.a))
    if isinstance(t, ir.Inverse) and isinstance(t.a, ir.ScalarMul):
        if not scalars.is_symbolically_nonzero(t.a.scalar):
            return None
        return _smul(ir.Div(ir.lit(1), t.a.scalar), ir.Inverse(t.a.a))
    if isinstance(t, (ir.IndexedSum, ir.DirectSum)) and isinstance(t.body, ir.ScalarMul):
        return ir.ScalarMul(t.body.scalar, type(t)(t.binder, t.domain, t.body.a))
    if isinstance(t, ir.InnerProduct):
        if isinstance(t.a, ir.ScalarMul):
            return scalars.canonical(ir.mul(ir.Conj(t.a.scalar),
                                            ir.InnerProduct(t.a.a, t.b)))
        if isinstance(t.b, ir.ScalarMul):
            return scalars.canonical(ir.mul(t.b.scalar, ir.InnerProduct(t.a, t.b.a)))
    return None


def _scalar_pull_sample(rng, lattice):
    b = {}
    X = _rand_atomic(rng, "X", 2, 3)
    m1, m2 = (_rand_matrix(rng, f"M{k}", X, X, b) for k in range(2))
    c = ir.lit(complex(*rng.standard_normal(2)))
    kappa = ir.SymScalar("kappa")
    forms = [
        ir.Mul((m1, ir.ScalarMul(c, m2))),
        ir.Mul((kappa, m1, c, m2)),
        ir.Tensor((ir.ScalarMul(c, m1), m2)),
        ir.Dagger(ir.ScalarMul(ir.mul(c, ir.ImaginaryUnit()), m1)),
        ir.ScalarMul(c, ir.ScalarMul(kappa, m1)),
        ir.Inverse(ir.ScalarMul(ir.lit(2.5), m1)),
    ]
    return forms[int(rng.integers(len(forms)))], b


def _zero_laws(t, ctx):
    if isinstance(t, (ir.Mul, ir.Tensor)) and any(_is_zero(x) for x in t.terms):
        return _zero_like(ctx, t)
    if isinstance(t, ir.ScalarMul) and _is_zero(t.a):
        return t.a
    if isinstance(t, (ir.Dagger, ir.Transpose)) and _is_zero(t.a):
        z = t.a
        return z if z.cols is None else ir.Zero(z.cols, z.rows)
    if isinstance(t, (ir.DirectSum, ir.IndexedSum)) and _is_zero(t.body):
        return _zero_like(ctx, t)
    if isinstance(t, ir.Add) and not _scalar(t) and any(_is_zero(x) for x in t.terms):
        rest = [x for x in t.terms if not _is_zero(x)]
        return ir.add(*rest) if rest else t.terms[0]
    if isinstance(t, ir.InnerProduct) and (_is_zero(t.a) or _is_zero(t.b)):
        return ir.lit(0)
    return None


def _zero_sample(rng, lattice):
    b = {}
    X, Y = _rand_atomic(rng, "X", 2, 3), _rand_atomic(rng, "Y", 1, 3)
    m = _rand_matrix(rng, "M", X, Y, b)
    forms = [
        ir.Mul((m, ir.Zero(Y, X))),
        ir.Add((m, ir.Zero(X, Y))),
        ir.Tensor((ir.Zero(X, X), m)),
        ir.Dagger(ir.Zero(X, Y)),
    ]
    return forms[int(rng.integers(len(forms)))], b


def _add_collect(t, ctx):
    """Merge Add operands that differ only by a scalar coefficient."""
    if not isinstance(t, ir.Add) or _scalar(t):
        return None
    order: list[ir.Term] = []
    coefs: dict[ir.Term, list[ir.Term]] = {}
    for x in t.terms:
        c, body = _split_scalar(x)
        if body not in coefs:
            order.append(body)
            coefs[body] = []
        coefs[body].append(c)
    if len(order) == len(t.terms):
        return None
    out = []
    for body in order:
        cs = coefs[body]
        out.append(body if cs == [ir.lit(1)] else _smul(ir.add(*cs), body))
    return ir.add(*out)


def _add_collect_sample(rng, lattice):
    b = {}
    X = _rand_atomic(rng, "X", 2, 3)
    m1, m2 = (_rand_matrix(rng, f"M{k}", X, X, b) for k in range(2))
    c = ir.lit(complex(*rng.standard_normal(2)))
    return ir.Add((ir.ScalarMul(c, m1), m2, m1)), b


# ---------------------------------------------------------------------------
# adjoints of structured leaves
# ---------------------------------------------------------------------------


def _adjoint_leaves(t, ctx):
    if isinstance(t, (ir.Dagger, ir.Transpose)):
        a, dag = t.a, isinstance(t, ir.Dagger)
        if isinstance(a, ir.Shift):
            return ir.Shift(a.lattice, -a.dir)
        if isinstance(a, (ir.Identity, ir.Gamma5)):
            return a
        if dag and isinstance(a, ir.Gamma):
            return a
        if isinstance(a, ir.Projection):
            return ir.Transpose(a) if dag else None
        if isinstance(a, type(t)):
            return a.a
        if dag and isinstance(a, ir.Transpose) and isinstance(a.a, ir.Projection):
            return a.a
        if isinstance(a, (ir.DirectSum, ir.IndexedSum)):
            return type(a)(a.binder, a.domain, type(t)(a.body))
    return None


def _adjoint_sample(rng, lattice):
    d = ir.Dir(ir.DIRECTIONS[int(rng.integers(4))], int(rng.choice([-1, 1])))
    forms = [
        ir.Dagger(ir.Shift(lattice, d)),
        ir.Transpose(ir.Shift(lattice, d)),
        ir.Dagger(ir.Gamma(d)),
        ir.Dagger(ir.Projection("odd", lattice)),
        ir.Dagger(ir.Transpose(ir.Projection("even", lattice))),
        ir.Dagger(ir.DirectSum("s", lattice, ir.GaugeLink(d, "s"))),
        ir.Dagger(ir.IndexedSum("e", ir.D, ir.Gamma(ir.Dir("e")))),
    ]
    return forms[int(rng.integers(len(forms)))], {}


# ---------------------------------------------------------------------------
# identity laws
# ---------------------------------------------------------------------------


def _identity_laws(t, ctx):
    if isinstance(t, ir.Mul) and len(t.terms) > 1:
        rest = [x for x in t.terms if not isinstance(x, ir.Identity)]
        if len(rest) == len(t.terms):
            return None
        if not rest:
            return t.terms[0]
        return ir.mul(*rest)
    if isinstance(t, ir.Tensor):
        out: list[ir.Term] = []
        changed = False
        for x in t.terms:
            if out and isinstance(x, ir.Identity) and isinstance(out[-1], ir.Identity):
                out[-1] = ir.Identity(ir.product(out[-1].over, x.over))
                changed = True
            else:
                out.append(x)
        if changed:
            return ir.tensor(*out)
    return None


def _identity_sample(rng, lattice):
    b = {}
    X, Y = _rand_atomic(rng, "X", 2, 3), _rand_atomic(rng, "Y", 1, 3)
    m = _rand_matrix(rng, "M", X, Y, b)
    forms = [
        ir.Mul((ir.Identity(X), m)),
        ir.Mul((m, ir.Identity(Y))),
        ir.Tensor((ir.Identity(X), ir.Identity(Y), m)),
    ]
    return forms[int(rng.integers(len(forms)))], b


def _shift_cancel(t, ctx):
    if not isinstance(t, ir.Mul):
        return None
    terms = list(t.terms)
    for i in range(len(terms) - 1):
        a, b = terms[i], terms[i + 1]
        if isinstance(a, ir.Shift) and isinstance(b, ir.Shift) \
                and a.lattice == b.lattice and a.dir == -b.dir:
            rest = terms[:i] + terms[i + 2:]
            return ir.mul(*rest) if rest else ir.Identity(a.lattice)
    return None


def _shift_cancel_sample(rng, lattice):
    d = ir.Dir(ir.DIRECTIONS[int(rng.integers(4))], int(rng.choice([-1, 1])))
    return ir.Mul((ir.Shift(lattice, d), ir.Shift(lattice, -d))), {}


# ---------------------------------------------------------------------------
# mixed-product law with block alignment
# ---------------------------------------------------------------------------


def _boundaries(sizes):
    out, acc = [], 0
    for s in sizes[:-1]:
        acc += s
        out.append(acc)
    return out


def _splittable(p, factors, sizes):
    """p is an existing boundary, or lies inside an identity factor."""
    acc = 0
    for f, s in zip(factors, sizes):
        if p == acc:
            return True
        if acc < p < acc + s:
            return isinstance(f, ir.Identity)
        acc += s
    return p == acc


def _regroup(factors, sizes, atoms, cuts):
    """Split the factor list into cells delimited by `cuts` (atom positions)."""
    edges = [0, *cuts, sum(sizes)]
    cells = []
    for lo, hi in zip(edges, edges[1:]):
        pieces = []
        acc = 0
        for f, s in zip(factors, sizes):
            a0, a1 = acc, acc + s
            acc = a1
            if a1 <= lo or a0 >= hi:
                continue
            if lo <= a0 and a1 <= hi:
                pieces.append(f)
            else:
                pieces.append(ir.Identity(ir.product(*atoms[max(lo, a0):min(hi, a1)])))
        cells.append(ir.tensor(*pieces))
    return cells


def _mixed_product(t, ctx):
    if not isinstance(t, ir.Mul):
        return None
    terms = t.terms
    for i in range(len(terms) - 1):
        a, b = terms[i], terms[i + 1]
        if not (isinstance(a, ir.Tensor) and isinstance(b, ir.Tensor)):
            continue
        sa = [ctx.try_shape(x) for x in a.terms]
        sb = [ctx.try_shape(x) for x in b.terms]
        if not all(isinstance(s, MatrixShape) for s in sa + sb):
            continue
        csz = [len(s.cols.atoms()) for s in sa]
        rsz = [len(s.rows.atoms()) for s in sb]
        atoms = ir.product(*(s.cols for s in sa)).atoms()
        cand = sorted(set(_boundaries(csz)) | set(_boundaries(rsz)))
        cuts = [p for p in cand
                if _splittable(p, a.terms, csz) and _splittable(p, b.terms, rsz)]
        if not cuts:
            continue
        left = _regroup(a.terms, csz, atoms, cuts)
        right = _regroup(b.terms, rsz, atoms, cuts)
        merged = ir.tensor(*(ir.mul(x, y) for x, y in zip(left, right)))
        return ir.mul(*terms[:i], merged, *terms[i + 2:])
    return None


def _mixed_product_sample(rng, lattice):
    b = {}
    X, Y, Z, W = (_rand_atomic(rng, n, 1, 3) for n in "XYZW")
    forms = rng.integers(3)
    if forms == 0:
        a1 = _rand_matrix(rng, "A1", X, Y, b)
        a2 = _rand_matrix(rng, "A2", Z, W, b)
        b1 = _rand_matrix(rng, "B1", Y, X, b)
        b2 = _rand_matrix(rng, "B2", W, Y, b)
        return ir.Mul((ir.Tensor((a1, a2)), ir.Tensor((b1, b2)))), b
    if forms == 1:
        # identities get split to line up with the other side
        a1 = _rand_matrix(rng, "A1", X, Y, b)
        b2 = _rand_matrix(rng, "B2", ir.product(Z, W), X, b)
        g = _rand_matrix(rng, "G", Y, Y, b)
        return ir.Mul((ir.Tensor((a1, ir.Identity(ir.product(Z, W)))),
                       ir.Tensor((g, b2)))), b
    a1 = _rand_matrix(rng, "A1", X, X, b)
    g = _rand_matrix(rng, "G", ir.product(Y, Z), ir.product(Y, Z), b)
    return ir.Mul((ir.Tensor((a1, ir.Identity(Y), ir.Identity(Z))),
                   ir.Tensor((ir.Identity(X), g)))), b


# ---------------------------------------------------------------------------
# parity laws
# ---------------------------------------------------------------------------


def parity_flip(t: ir.Term) -> int | None:
    """Parity flip of a lattice operator (0 or 1); None when it cannot be told."""
    if isinstance(t, ir.Shift):
        return 1
    if isinstance(t, (ir.Identity, ir.Projection, ir.Gamma, ir.Gamma5, ir.GaugeLink,
                      ir.Zero)):
        return 0
    if _scalar(t):
        return 0
    if isinstance(t, (ir.Mul, ir.Tensor)):
        total = 0
        for x in t.terms:
            f = parity_flip(x)
            if f is None:
                return None
            total ^= f
        return total
    if isinstance(t, ir.Add):
        flips = {parity_flip(x) for x in t.terms}
        return flips.pop() if len(flips) == 1 else None
    if isinstance(t, (ir.ScalarMul,)):
        return parity_flip(t.a)
    if isinstance(t, (ir.Dagger, ir.Transpose)):
        return parity_flip(t.a)
    if isinstance(t, ir.Inverse):
        return 0 if parity_flip(t.a) == 0 else None
    if isinstance(t, (ir.IndexedSum, ir.DirectSum)):
        return parity_flip(t.body)
    return None


def _even_extents(t: ir.Term) -> bool:
    for n in ir.walk(t):
        if isinstance(n, ir.Shift):
            dims = getattr(n.lattice, "dims", None)
            if dims is not None and any(d % 2 for d in dims):
                return False
    return True


def _parities(ctx, t):
    s = ctx.try_shape(t)
    if not isinstance(s, MatrixShape):
        return None
    pr, pc = ir.parity_of(s.rows), ir.parity_of(s.cols)
    if pr is None or pc is None:
        return None
    return pr, pc


def _parity_zero(t, ctx):
    if not isinstance(t, (ir.Mul, ir.Tensor)):
        return None
    par = _parities(ctx, t)
    if par is None:
        return None
    f = parity_flip(t)
    if f is None or not _even_extents(t):
        return None
    if (par[0] == par[1]) == (f == 0):
        return None
    return _zero_like(ctx, t)


def _parity_zero_sample(rng, lattice):
    d = ir.Dir(ir.DIRECTIONS[int(rng.integers(4))], int(rng.choice([-1, 1])))
    p = str(rng.choice(ir.PARITIES))
    proj = ir.Tensor((ir.Projection(p, lattice), ir.Identity(ir.C)))
    hop = ir.Mul((ir.Tensor((ir.Shift(lattice, d), ir.Identity(ir.C))),
                  ir.DirectSum("s", lattice, ir.GaugeLink(d, "s"))))
    return ir.Mul((proj, hop, ir.Transpose(proj))), {}


def _parity_distribute(t, ctx):
    """Distribute a parity-sandwiched sum whose operands flip parity differently."""
    if not isinstance(t, ir.Mul) or _parities(ctx, t) is None:
        return None
    for i, x in enumerate(t.terms):
        coef, body = _split_scalar(x)
        if not isinstance(body, ir.Add):
            continue
        flips = [parity_flip(y) for y in body.terms]
        if None in flips or len(set(flips)) < 2:
            continue
        pre, post = t.terms[:i], t.terms[i + 1:]
        parts = [ir.mul(*pre, y, *post) for y in body.terms]
        out = ir.add(*parts)
        return out if coef == ir.lit(1) else ir.ScalarMul(coef, out)
    return None


def _parity_distribute_sample(rng, lattice):
    d = ir.Dir(ir.DIRECTIONS[int(rng.integers(4))], 1)
    p, q = (str(rng.choice(ir.PARITIES)) for _ in range(2))
    mid = ir.Add((ir.Identity(lattice), ir.Shift(lattice, d),
                  ir.ScalarMul(ir.lit(0.5), ir.Shift(lattice, -d))))
    return ir.Mul((ir.Projection(p, lattice), mid,
                   ir.Transpose(ir.Projection(q, lattice)))), {}


# ---------------------------------------------------------------------------
# closed-form inverse of the twisted-mass diagonal block
# ---------------------------------------------------------------------------


def twisted_parts(t: ir.Term):
    """Recognise alpha*I_{X(x)S} + beta*(I_X (x) gamma5); returns (X, alpha, beta)."""
    if not isinstance(t, ir.Add) or len(t.terms) != 2:
        return None
    for first, second in (t.terms, t.terms[::-1]):
        alpha, ident = _split_scalar(first)
        beta, g = _split_scalar(second)
        if not isinstance(ident, ir.Identity):
            continue
        if isinstance(g, ir.Tensor) and len(g.terms) == 2 \
                and isinstance(g.terms[0], ir.Identity) and isinstance(g.terms[1], ir.Gamma5):
            over = g.terms[0].over
        elif isinstance(g, ir.Gamma5):
            over = None
        else:
            continue
        want = ir.S if over is None else ir.product(over, ir.S)
        if ident.over.atoms() != want.atoms():
            continue
        return over, alpha, beta
    return None


def _twisted_inverse(t, ctx):
    if not isinstance(t, ir.Inverse):
        return None
    parts = twisted_parts(t.a)
    if parts is None:
        return None
    over, alpha, beta = parts
    a = scalars.literal_value(alpha)
    if a is None or a.imag != 0 or a.real == 0 or not scalars.is_pure_imaginary(beta):
        return None
    g5 = ir.Gamma5() if over is None else ir.Tensor((ir.Identity(over), ir.Gamma5()))
    ident = ir.Identity(ir.S if over is None else ir.product(over, ir.S))
    denom = ir.Sub(ir.mul(alpha, alpha), ir.mul(beta, beta))
    inner = ir.add(_smul(alpha, ident) if a != 1 else ident,
                   _smul(ir.Neg(beta), g5))
    return _smul(ir.Div(ir.lit(1), denom), inner)


def _twisted_sample(rng, lattice):
    k, m = ir.SymScalar("kappa"), ir.SymScalar("mu")
    beta = ir.mul(ir.lit(2), ir.ImaginaryUnit(), k, m)
    over = [None, ir.C, ir.product(lattice, ir.C)][int(rng.integers(3))]
    g5 = ir.Gamma5() if over is None else ir.Tensor((ir.Identity(over), ir.Gamma5()))
    ident = ir.Identity(ir.S if over is None else ir.product(over, ir.S))
    return ir.Inverse(ir.Add((ident, ir.ScalarMul(beta, g5)))), {}


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def builtin_rules() -> list[RewriteRule]:
    table = [
        ("flatten", _flatten, _flatten_sample),
        ("scalar-canonical", _scalar_canon, _scalar_canon_sample),
        ("neg-sub", _neg_sub, _neg_sub_sample),
        ("zero-laws", _zero_laws, _zero_sample),
        ("scalar-pull", _scalar_pull, _scalar_pull_sample),
        ("identity-laws", _identity_laws, _identity_sample),
        ("adjoint-leaves", _adjoint_leaves, _adjoint_sample),
        ("shift-cancel", _shift_cancel, _shift_cancel_sample),
        ("parity-zero", _parity_zero, _parity_zero_sample),
        ("parity-distribute", _parity_distribute, _parity_distribute_sample),
        ("mixed-product", _mixed_product, _mixed_product_sample),
        ("add-collect", _add_collect, _add_collect_sample),
        ("twisted-inverse", _twisted_inverse, _twisted_sample),
    ]
    return [RewriteRule(name, kind="builtin", fn=fn, sampler=sampler)
            for name, fn, sampler in table]


def definition_rule(name: str, body: ir.Term) -> RewriteRule:
    """Unfold a `def` wherever its symbol appears."""

    def unfold(t, ctx):
        if isinstance(t, ir.MatrixSym) and t.name == name:
            return body
        return None

    return RewriteRule(f"def:{name}", kind="definition", fn=unfold)


def random_scalar_bindings(rng) -> dict:
    return {"kappa": float(rng.uniform(0.05, 0.3)), "mu": float(rng.uniform(-0.5, 0.5))}


__all__ = ["builtin_rules", "definition_rule", "parity_flip", "twisted_parts",
           "random_scalar_bindings"]

"""Generated expressions survive print -> parse unchanged."""

from hypothesis import given, settings
from hypothesis import strategies as st

from qiral import ir
from qiral.frontend import format_term, parse

PRELUDE = "decl a, b : real ;\ndecl z : complex ;\ndecl A, B : matrix(S, S) ;\n"

atoms = st.sampled_from(["a", "b", "z", "A", "B", "I_S", "gamma5", "i", "2", "0.5",
                         "gamma[x]", "gamma[t]", "1e-3"])


def _compound(inner):
    binary = st.tuples(inner, st.sampled_from(["+", "-", "*", "/", "(x)"]), inner).map(
        lambda p: f"({p[0]} {p[1]} {p[2]})")
    unary = st.tuples(st.sampled_from(["-{}", "dagger({})", "conj({})", "({})^t", "({})^-1"]),
                      inner).map(lambda p: p[0].format(p[1]))
    return binary | unary


exprs = st.recursive(atoms, _compound, max_leaves=12)
LAT = ir.Lattice("L", (2, 2, 2, 2))


def _body(src):
    u = parse(PRELUDE + f"def E = {src} ;\n", LAT)
    return dict(u.defs)["E"]


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_print_parse_is_identity(src):
    t = _body(src)
    assert _body(format_term(t)) == t


@settings(max_examples=60, deadline=None)
@given(exprs)
def test_printing_is_a_fixed_point(src):
    once = format_term(_body(src))
    assert format_term(_body(once)) == once

from pathlib import Path

import pytest

from qiral import ir, prelude
from qiral.errors import ProgramErrors
from qiral.frontend import format_term, parse, pretty_print, tokenize

FIXTURES = sorted((Path(__file__).parent / "fixtures" / "roundtrip").glob("*.qir"))
LIBRARY = [prelude.path(n) for n in (*prelude.LIBRARY, prelude.GOAL)]


def test_enough_fixtures():
    assert len(FIXTURES) >= 30


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_fixture_round_trip(path, lattice):
    base = prelude.load(lattice)
    first = parse(path.read_text(), lattice, base=base)
    text = pretty_print(first)
    again = parse(text, lattice, base=base)
    assert again == first
    assert pretty_print(again) == text


def test_library_round_trip(lattice):
    src = "\n".join(p.read_text() for p in LIBRARY)
    first = parse(src, lattice)
    second = parse(pretty_print(first), lattice)
    assert second == first


def test_comments_and_whitespace_ignored():
    toks = tokenize("x = A^-1 * b ; # trailing\n")
    assert [t.text for t in toks[:-1]] == ["x", "=", "A", "^", "-", "1", "*", "b", ";"]
    assert toks[-1].kind == "eof"


def test_token_locations():
    toks = tokenize("decl a : real ;\n  def")
    assert str(toks[-2].loc) == "2:3"


def test_link_call_on_direction_x_is_not_a_tensor(lattice):
    u = parse("def Lx = dsum s in L : U(x)[s] ;", lattice)
    body = dict(u.defs)["Lx"]
    assert isinstance(body.body, ir.GaugeLink)
    assert body.body.dir == ir.Dir("x", 1)


def test_tensor_without_spaces_still_a_tensor(lattice):
    u = parse("def T = I_L(x)I_C ;", lattice)
    assert isinstance(dict(u.defs)["T"], ir.Tensor)


def test_precedence(lattice):
    u = parse("decl a, b, c : real ;\ndef E = a + b * c - a ;", lattice)
    assert format_term(dict(u.defs)["E"]) == "a + b * c - a"


def _errors(src, lattice):
    with pytest.raises(ProgramErrors) as ei:
        parse(src, lattice)
    return ei.value.errors


@pytest.mark.parametrize("src,kind,where", [
    ("decl a : real ;\ndecl a : real ;", "DuplicateName", "2:6"),
    ("def X = foo + 1 ;", "UnboundSymbol", "1:9"),
    ("def X = I_S +", "SyntaxError_", "1:14"),
    ("decl q : tensor ;", "SyntaxError_", "1:10"),
    ("def Z = proj(blue, L) ;", "SyntaxError_", "1:14"),
    ("def W = sum d in D : gamma[q] ;", "UnboundSymbol", "1:28"),
    ("def Y = U(y)[s] ;", "UnboundSymbol", "1:14"),
])
def test_diagnostics_carry_locations(src, kind, where, lattice):
    errs = _errors(src, lattice)
    assert type(errs[0]).__name__ == kind
    assert str(errs[0].loc) == where


def test_duplicate_equation_names(lattice):
    errs = _errors("equation e { gamma5 = gamma5 ; }\nequation e { gamma5 = gamma5 ; }",
                   lattice)
    assert [type(e).__name__ for e in errs] == ["DuplicateName"]


def test_algorithm_needs_match(lattice):
    errs = _errors("algorithm A { Input b : vector(IS) ; body { } }", lattice)
    assert "Match" in errs[0].message


def test_binary_direct_sum_rejected(lattice):
    errs = _errors("def P = shift(L, x) (+) I_L ;", lattice)
    assert "dsum" in errs[0].message


def test_templates_parse_with_open_index_sets(unit):
    names = [t.name for t in unit.templates]
    assert names == ["CGNR", "CGNE", "BiCGSTAB", "SCHUR"]
    cgnr = unit.templates[0]
    assert isinstance(cgnr.match.rhs, ir.Mul)
    assert any(isinstance(st, ir.While) for st in cgnr.body)


def test_sublattice_sets(lattice):
    u = parse("decl ve : vector(even(L) (x) C) ;", lattice)
    over = u.declarations[0].over
    assert ir.parity_of(over) == "even"

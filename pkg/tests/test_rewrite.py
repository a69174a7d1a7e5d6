import json

import pytest

from qiral import ir
from qiral.errors import FuelExhausted
from qiral.frontend import format_term, parse
from qiral.rewrite import (RuleSet, builtin_rules, check_requirement, jsonl_tracer, normalize,
                           rules_from_unit)

DECLS = "decl A, B : matrix(S, S) ;\ndecl a, b : real ;\ndecl v : vector(S) ;\n"


def term(src, lattice):
    return dict(parse(DECLS + f"def E = {src} ;", lattice).defs)["E"]


@pytest.mark.parametrize("src,want", [
    ("dagger(dagger(A))", "A"),
    ("gamma5 * gamma5", "I_S"),
    ("(A * B)^t", "B^t * A^t"),
    ("I_S * A", "A"),
    ("A + zero(S, S)", "A"),
    ("dagger(A * B)", "dagger(B) * dagger(A)"),
    ("2 * a * A + 3 * A", "(3 + 2 * a) * A"),
    ("proj(even, L) * proj(even, L)^t", "I_{even(L)}"),
    ("proj(even, L) * proj(odd, L)^t", "zero(even(L), odd(L))"),
    ("I_S * v", "v"),
])
def test_normal_forms(src, want, lattice, rules):
    assert format_term(normalize(term(src, lattice), rules)) == want


def test_normalization_is_idempotent(defs, rules):
    once = normalize(ir.Dagger(defs["Dirac"]), rules)
    assert normalize(once, rules) == once


def test_rule_names_are_unique(rules):
    names = [r.name for r in rules]
    assert len(names) == len(set(names))


def test_duplicate_rule_names_rejected():
    rs = builtin_rules()
    with pytest.raises(ValueError):
        RuleSet([rs[0], rs[0]])


def test_bad_strategy_rejected():
    with pytest.raises(ValueError):
        RuleSet(builtin_rules(), strategy="sideways")


def test_fuel_exhaustion(lattice, unit):
    rs = rules_from_unit(unit, fuel=3)
    with pytest.raises(FuelExhausted):
        normalize(term("dagger(dagger(dagger(dagger(A * B * A))))", lattice), rs)


def test_trace_records_every_step(lattice, rules, tmp_path):
    log = tmp_path / "trace.jsonl"
    with open(log, "w") as fh:
        normalize(term("dagger(dagger(A)) * I_S", lattice), rules, trace=jsonl_tracer(fh))
    rows = [json.loads(line) for line in log.read_text().splitlines()]
    assert rows
    assert set(rows[0]) >= {"rule", "before", "after"}
    assert rows[-1]["after"] == "A"


def test_outermost_strategy_agrees(lattice, unit):
    t = term("dagger(A * dagger(B)) + 0 * A", lattice)
    inner = normalize(t, rules_from_unit(unit))
    outer = normalize(t, rules_from_unit(unit, strategy="outermost"))
    assert inner == outer


def _even_block(unit_defs_src, lattice):
    from qiral import prelude
    u = prelude.load(lattice, extra=(unit_defs_src,))
    return u, dict(u.defs)


def test_even_block_invertibility_is_proven(lattice):
    u, d = _even_block("def P1 = proj(even, L) (x) I_{C (x) S} ;\ndef Blk = P1 * Dirac * P1^t ;",
                       lattice)
    res = check_requirement(ir.Pred("isInvertible", (d["Blk"],)), rules_from_unit(u))
    assert res
    text = format_term(res.normal_form)
    assert "gamma5" in text and "kappa" in text and "mu" in text


def test_full_dirac_invertibility_not_provable(defs, rules):
    res = check_requirement(ir.Pred("isInvertible", (defs["Dirac"],)), rules)
    assert not res
    assert res.normal_form is not None


def test_zero_is_not_invertible(lattice, rules):
    res = check_requirement(ir.Pred("isInvertible", (term("0 * A", lattice),)), rules)
    assert not res

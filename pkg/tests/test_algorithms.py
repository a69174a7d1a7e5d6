import numpy as np
import pytest

from qiral import ir
from qiral.algorithms import goal_globals, load_catalog, plan
from qiral.errors import NoMatch, ResidualInverse, UnknownAlgorithm
from qiral.pipeline import compile_goal, load_sources
from qiral.rewrite import rules_from_unit
from qiral.vm import RunParams, execute, random_vector

from .conftest import SMALL


@pytest.fixture(scope="module")
def src():
    u = load_sources(SMALL)
    return u, rules_from_unit(u)


def _plan(src, names):
    u, rs = src
    return plan(list(u.goal), names, load_catalog(u), rs, goal_globals(u))


def _lhs(st):
    return st.lhs.name


def test_cgnr_statement_order(src):
    prog = _plan(src, ["CGNR"])
    head = [_lhs(s).removeprefix("CGNR1_") for s in prog[:-1]]
    assert head == ["r", "z", "p", "x", "n_z", "n_r"]
    loop = prog[-1]
    assert isinstance(loop, ir.While)
    assert loop.cond.op == ">" and loop.cond.rhs == ir.SymScalar("epsilon")
    body = [_lhs(s).removeprefix("CGNR1_") for s in loop.body]
    assert body == ["Ap", "alpha", "x", "r", "z", "n_z1", "beta", "p", "n_z", "n_r"]


def test_no_inverse_left_after_krylov_plans(src):
    for names in (["CGNR"], ["CGNE"], ["BiCGSTAB"], ["SCHUR", "CGNR"]):
        for st in ir.flatten_statements(_plan(src, names)):
            assert not any(ir.contains(t, ir.Inverse) for t in ir.statement_terms(st))


def test_schur_alone_leaves_an_inverse(src):
    with pytest.raises(ResidualInverse):
        _plan(src, ["SCHUR"])


def test_schur_after_cgnr_has_nothing_to_match(src):
    with pytest.raises(NoMatch):
        _plan(src, ["CGNR", "SCHUR"])


def test_unknown_algorithm(src):
    with pytest.raises(UnknownAlgorithm, match="BiCGSTAB"):
        _plan(src, ["GMRES"])


def test_schur_cgnr_has_single_outer_loop(src):
    prog = _plan(src, ["SCHUR", "CGNR"])
    loops = [s for s in prog if isinstance(s, ir.While)]
    assert len(loops) == 1
    assert any(_lhs(s) == "x" for s in prog[-2:])


def test_schur_uses_closed_form_block_inverse(src):
    from qiral.frontend import format_statement
    text = "\n".join(format_statement(s) for s in _plan(src, ["SCHUR", "CGNR"]))
    assert "1 + 4 * kappa * kappa * mu * mu" in text


def test_custom_template_from_input_file(tmp_path):
    extra = tmp_path / "rich.qir"
    extra.write_text("""algorithm RICH {
  Input A : matrix(IS, IS), b : vector(IS), epsilon : real ;
  Output x : vector(IS) ;
  Match x = A^-1 * b ;
  Var r : vector(IS), n_r : real ;
  body {
    x = b ;
    r = b - A * x ;
    n_r = <r | r> ;
    while (n_r > epsilon) {
      x = x + r ;
      r = b - A * x ;
      n_r = <r | r> ;
    }
  }
}
""")
    c = compile_goal(SMALL, ["RICH"], inputs=[extra])
    assert c.lir.result == "x"


@pytest.mark.parametrize("names", [["CGNR"], ["CGNE"], ["BiCGSTAB"], ["SCHUR", "CGNR"]])
def test_squared_residual_meets_threshold(names, gauge, dense_dirac):
    c = compile_goal(SMALL, names)
    b = random_vector(192, 42)
    eps = 1e-16 * np.vdot(b, b).real
    res = execute(c.lir, gauge, b, RunParams(epsilon=eps))
    assert not res.max_iter_exceeded
    r = dense_dirac @ res.x - b
    assert np.vdot(r, r).real <= 10 * eps


def test_cgnr_normal_residual_non_increasing(gauge):
    c = compile_goal(SMALL, ["CGNR"])
    b = random_vector(192, 7)
    nz = [execute(c.lir, gauge, b, RunParams(max_iter=k)).scalars["CGNR1_n_z"].real
          for k in range(1, 31)]
    for before, after in zip(nz, nz[1:]):
        assert after <= before * (1 + 1e-10)

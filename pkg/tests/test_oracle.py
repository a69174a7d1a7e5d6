import numpy as np
import pytest

from qiral import ir
from qiral.errors import SizeGuardExceeded, Singular, UnboundAtom
from qiral.frontend import parse
from qiral.oracle import (Env, block_structure, check_rule_soundness, dense_inverse,
                          dense_solve, denote, run_dense)
from qiral.rewrite import rules_from_unit
from qiral.vm import GAMMA5, random_vector

from .conftest import KAPPA, MU, SMALL, rel


def _def(src, lattice, decls=""):
    return dict(parse(decls + f"def E = {src} ;", lattice).defs)["E"]


def test_scalars_and_small_matrices(lattice):
    assert denote(_def("2 * i", lattice)) == 2j
    np.testing.assert_array_equal(denote(_def("I_S", lattice)), np.eye(4))
    np.testing.assert_array_equal(denote(_def("gamma5", lattice)), GAMMA5)
    z = denote(_def("zero(S, C)", lattice))
    assert z.shape == (4, 3) and not z.any()


def test_tensor_is_kronecker(lattice):
    m = denote(_def("I_C (x) gamma5", lattice))
    np.testing.assert_array_equal(m, np.kron(np.eye(3), GAMMA5))


def test_shift_moves_forward(lattice):
    sh = denote(_def("shift(L, x)", lattice))
    v = np.arange(16, dtype=complex)
    # x-fastest numbering: site s+x is s+1 with wrap inside each row of two
    np.testing.assert_array_equal((sh @ v)[:4], [1, 0, 3, 2])


def test_unbound_matrix_symbol(lattice):
    t = _def("A * A", lattice, "decl A : matrix(S, S) ;\n")
    with pytest.raises(UnboundAtom):
        denote(t)
    a = np.arange(16.0).reshape(4, 4)
    np.testing.assert_allclose(denote(t, Env(arrays={"A": a})), a @ a)


def test_unbound_gauge(defs):
    with pytest.raises(UnboundAtom):
        denote(defs["Dirac"], Env(dims=SMALL, scalars={"kappa": KAPPA, "mu": MU}))


def test_size_guard(defs, gauge):
    env = Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": MU}, guard=100)
    with pytest.raises(SizeGuardExceeded):
        denote(defs["Dirac"], env)


def test_dense_solve_matches_numpy():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    b = rng.standard_normal(30) + 0j
    x = dense_solve(m, b)
    assert rel(m @ x, b) < 1e-13
    assert rel(dense_inverse(m) @ b, x) < 1e-12


def test_dense_solve_needs_pivoting():
    m = np.array([[0, 1], [1, 0]], dtype=complex)
    np.testing.assert_allclose(dense_solve(m, np.array([2, 3])), [3, 2])


def test_singular_matrix():
    with pytest.raises(Singular):
        dense_solve(np.ones((3, 3)), np.ones(3))


def test_all_prelude_rules_sound(rules):
    checked = [r for r in rules if r.kind != "definition"]
    assert len(checked) >= 40
    bad = [res for res in (check_rule_soundness(r, 20, seed=1) for r in checked) if not res]
    assert not bad, bad


def test_corrupted_rule_is_caught(lattice):
    u = parse("equation bad { gamma5 * gamma5 = 2 * I_S ; }", lattice)
    rule = next(r for r in rules_from_unit(u) if r.name == "bad")
    res = check_rule_soundness(rule)
    assert not res.passed
    assert res.error == pytest.approx(0.5)


def test_gamma5_conjugation_flips_twist(defs, gauge, dense_dirac):
    flipped = denote(defs["Dirac"], Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": -MU}))
    g5 = np.kron(np.eye(dense_dirac.shape[0] // 4), GAMMA5)
    np.testing.assert_allclose(g5 @ dense_dirac @ g5, flipped.conj().T, atol=1e-14)


def test_dirac_without_hopping_is_local(defs, gauge):
    m = denote(defs["Dirac"], Env(gauge=gauge, scalars={"kappa": 0.0, "mu": MU}))
    assert (block_structure(m) == 1).all()
    np.testing.assert_allclose(np.diag(m), 1.0)


def test_block_structure_counts_neighbours():
    m = np.zeros((36, 36))
    m[:12, :] = 1
    m[24:, 24:] = 1
    assert block_structure(m).tolist() == [3, 0, 1]


def test_run_dense_follows_loops(lattice):
    prog = list(parse("""decl n : real ;
goal n = 0 ;
goal while (n < 5) { n = n + 1 ; }
""", lattice).goal)
    state = run_dense(prog, Env())
    assert state.scalars["n"] == 5


def test_dense_cgnr_program_agrees_with_direct_solve(unit, rules, gauge, dense_dirac):
    from qiral.algorithms import goal_globals, load_catalog, plan

    prog = plan(list(unit.goal), ["CGNR"], load_catalog(unit), rules, goal_globals(unit))
    b = random_vector(dense_dirac.shape[0], 5)
    env = Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": MU, "epsilon": 1e-24},
              arrays={"b": b})
    x = run_dense(prog, env).arrays["x"]
    assert rel(x, dense_solve(dense_dirac, b)) < 1e-9

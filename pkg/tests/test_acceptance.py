"""Acceptance criteria 1-11.

Each test carries a ``criterion`` marker; the conftest hook prints one
PASS/FAIL/SKIP/XFAIL line per criterion at the end of the run.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from qiral import ir, prelude
from qiral.backend import build_and_diff, emit, find_compiler
from qiral.frontend import parse, pretty_print
from qiral.oracle import Env, block_structure, check_rule_soundness, dense_solve, denote
from qiral.pipeline import apply_program, compile_goal, load_sources
from qiral.rewrite import check_requirement, rules_from_unit
from qiral.vm import GAMMA, GAMMA5, RunParams, execute, parallel_execute, random_gauge, random_vector

from .conftest import KAPPA, MEDIUM, MU, SMALL, rel

SOLVERS = ("CGNR", "CGNE", "BiCGSTAB")
N_SMALL, N_MEDIUM = 192, 3072
FIXTURES = sorted((Path(__file__).parent / "fixtures" / "roundtrip").glob("*.qir"))


def criterion(n, title):
    return pytest.mark.criterion(n, title)


@pytest.fixture(scope="module")
def medium():
    g = random_gauge(MEDIUM, 42)
    b = random_vector(N_MEDIUM, 42)
    return g, b, RunParams(kappa=KAPPA, mu=MU, epsilon=1e-16 * np.vdot(b, b).real)


@pytest.fixture(scope="module")
def medium_runs(medium):
    g, b, p = medium
    out = {}
    for names in (["CGNR"], ["CGNE"], ["BiCGSTAB"], ["SCHUR", "CGNR"]):
        out[",".join(names)] = execute(compile_goal(MEDIUM, names).lir, g, b, p)
    return out


@criterion(1, "dense Dirac vs lowered VM apply, 20 vectors at 2^4, rel <= 1e-12, < 5 s")
def test_c01_operator_equivalence(gauge, defs):
    t0 = time.perf_counter()
    m = denote(defs["Dirac"], Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": MU}))
    lir = apply_program(load_sources(SMALL))
    worst = 0.0
    for k in range(20):
        v = random_vector(N_SMALL, 100 + k)
        y = execute(lir, gauge, v, RunParams(kappa=KAPPA, mu=MU)).x
        worst = max(worst, rel(y, m @ v))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-12
    assert elapsed < 5


@criterion(2, "every shipped equation sound over 20 trials at 1e-12, < 10 s")
def test_c02_rule_soundness(rules):
    t0 = time.perf_counter()
    eqs = [r for r in rules if r.kind != "definition"]
    bad = [res for res in (check_rule_soundness(r, 20, seed=2, tol=1e-12) for r in eqs)
           if not res.passed]
    elapsed = time.perf_counter() - t0
    assert not bad, bad
    assert elapsed < 10


@criterion(3, "even-even block invertibility proven; block and closed-form inverse checked")
def test_c03_requirement_discharge(lattice, gauge):
    u = prelude.load(lattice, extra=("def P1 = proj(even, L) (x) I_{C (x) S} ;\n"
                                     "def Blk = P1 * Dirac * P1^t ;",))
    d = dict(u.defs)
    res = check_requirement(ir.Pred("isInvertible", (d["Blk"],)), rules_from_unit(u))
    assert res

    env = Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": MU})
    p1 = denote(d["P1"], env)
    env.arrays.update(P1=p1, Dirac=denote(d["Dirac"], env))
    blk = denote(d["Blk"], env)
    twist = np.eye(4) + 2j * KAPPA * MU * GAMMA5
    want = np.kron(np.eye(blk.shape[0] // 4), twist)
    assert np.abs(blk - want).max() <= 1e-13
    assert np.abs(denote(res.normal_form, env) - want).max() <= 1e-13

    g5 = np.kron(np.eye(blk.shape[0] // 4), GAMMA5)
    eye = np.eye(blk.shape[0])
    a = 2j * KAPPA * MU
    lhs = (eye + a * g5) @ (eye - a * g5)
    assert np.abs(lhs - (1 + 4 * KAPPA**2 * MU**2) * eye).max() <= 1e-14


@criterion(4, "CGNR, CGNE, BiCGSTAB at 2^4: residual <= 1e-7, pairwise and dense within 1e-6")
def test_c04_solver_correctness(gauge, dense_dirac):
    t0 = time.perf_counter()
    b = random_vector(N_SMALL, 42)
    p = RunParams(kappa=KAPPA, mu=MU, epsilon=1e-16 * np.vdot(b, b).real)
    xs = {}
    for name in SOLVERS:
        r = execute(compile_goal(SMALL, [name]).lir, gauge, b, p)
        assert not r.max_iter_exceeded
        assert rel(dense_dirac @ r.x, b) <= 1e-7
        xs[name] = r.x
    ref = dense_solve(dense_dirac, b)
    for i, a in enumerate(SOLVERS):
        assert rel(xs[a], ref) <= 1e-6
        for c in SOLVERS[i + 1:]:
            assert rel(xs[a], xs[c]) <= 1e-6
    assert time.perf_counter() - t0 < 30


@criterion(5, "4^4, seed 42: all three converge within 3072 iterations with distinct counts")
def test_c05_convergence_traces(medium, medium_runs):
    g, b, p = medium
    counts = []
    for name in SOLVERS:
        r = medium_runs[name]
        assert not r.max_iter_exceeded
        assert r.iterations <= 3072
        assert r.trace[-1][1] <= p.epsilon
        counts.append(r.iterations)
    assert len(set(counts)) == 3, counts


@criterion(6, "SCHUR,CGNR uses strictly fewer Dirac block applications than CGNR at 4^4")
def test_c06_preconditioning_benefit(medium_runs):
    plain, pre = medium_runs["CGNR"], medium_runs["SCHUR,CGNR"]
    assert pre.counters["neighbour_blocks"] < plain.counters["neighbour_blocks"]
    assert rel(pre.x, plain.x) <= 1e-6


@criterion(7, "1, 2, 4 workers bit-identical; disabling privatization is detected")
def test_c07_determinism(gauge):
    b = random_vector(N_SMALL, 7)
    for names in (["CGNR"], ["SCHUR", "CGNR"]):
        lir = compile_goal(SMALL, names).lir
        runs = [parallel_execute(lir, gauge, b, RunParams(), threads=t) for t in (1, 2, 4)]
        for r in runs[1:]:
            assert np.array_equal(r.x, runs[0].x)
            assert r.trace == runs[0].trace
    lir = compile_goal(SMALL, ["CGNR"]).lir
    good = parallel_execute(lir, gauge, b, RunParams(max_iter=5), threads=4)
    bad = parallel_execute(lir, gauge, b, RunParams(max_iter=5), threads=4, privatize=False)
    assert not np.array_equal(good.x, bad.x)


@criterion(8, "Clifford algebra exact; gamma5-hermiticity of dense Dirac <= 1e-12")
def test_c08_gamma_algebra(gauge, defs, dense_dirac):
    eye = np.eye(4)
    for mu in ir.DIRECTIONS:
        for nu in ir.DIRECTIONS:
            assert np.array_equal(GAMMA[mu] @ GAMMA[nu] + GAMMA[nu] @ GAMMA[mu],
                                  2 * (mu == nu) * eye)
        assert np.array_equal(GAMMA[mu].conj().T, GAMMA[mu])
    assert np.array_equal(GAMMA5, GAMMA["x"] @ GAMMA["y"] @ GAMMA["z"] @ GAMMA["t"])
    assert np.array_equal(GAMMA5 @ GAMMA5, eye)
    assert np.array_equal(GAMMA5.conj().T, GAMMA5)
    flipped = denote(defs["Dirac"], Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": -MU}))
    g5 = np.kron(np.eye(dense_dirac.shape[0] // 4), GAMMA5)
    err = np.linalg.norm(dense_dirac.conj().T - g5 @ flipped @ g5) / np.linalg.norm(dense_dirac)
    assert err <= 1e-12


@criterion(9, "dense Dirac has 9 nonzero 12x12 blocks per block row")
@pytest.mark.xfail(strict=True, reason="on a 2^4 lattice s+d and s-d are the same site, "
                                       "so each row has 5 distinct neighbour blocks")
def test_c09_block_structure_small(dense_dirac):
    assert (block_structure(dense_dirac) == 9).all()


@criterion(9, "dense Dirac has 9 nonzero 12x12 blocks per block row")
def test_c09_block_structure_medium():
    lat = ir.Lattice("L", MEDIUM)
    m = denote(dict(prelude.load(lat).defs)["Dirac"],
               Env(gauge=random_gauge(MEDIUM, 42), scalars={"kappa": KAPPA, "mu": MU}))
    assert (block_structure(m) == 9).all()


@criterion(10, "emitted C for CGNR at 4^4 matches the VM within 1e-10; private clause present")
@pytest.mark.skipif(find_compiler() is None, reason="no C compiler on PATH")
def test_c10_native_backend(medium):
    g, b, p = medium
    lir = compile_goal(MEDIUM, ["CGNR"]).lir
    rep = build_and_diff(lir, g, b, p, tol=1e-10)
    assert rep.max_rel_diff <= 1e-10
    assert "#pragma omp parallel for private(" in rep.source


@criterion(11, "round-trip on >= 30 fixtures; byte-deterministic emission")
def test_c11_golden(lattice):
    assert len(FIXTURES) >= 30
    base = prelude.load(lattice)
    for path in FIXTURES:
        first = parse(path.read_text(), lattice, base=base)
        text = pretty_print(first)
        assert parse(text, lattice, base=base) == first
        assert pretty_print(parse(text, lattice, base=base)) == text
    for names in (["CGNR"], ["SCHUR", "CGNR"]):
        lir = compile_goal(MEDIUM, names).lir
        assert emit(lir, MEDIUM) == emit(compile_goal(MEDIUM, names).lir, MEDIUM)

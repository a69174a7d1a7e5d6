from dataclasses import replace

import numpy as np
import pytest

from qiral import ir
from qiral.errors import RaceDetected, UnloweredConstruct
from qiral.frontend import parse
from qiral.lowering import (HopKernel, LinComb, ParallelFor, Reduction, ScalarWrite, SeqWhile,
                            can_fuse, compile_program, dump_ir, fuse_loops, kernels, lower,
                            privatize, walk_nodes)
from qiral.pipeline import apply_program, compile_goal, load_sources

from .conftest import SMALL

ORIGIN = (0, 0, 0, 0)


@pytest.fixture(scope="module")
def cgnr():
    return compile_goal(SMALL, ["CGNR"]).lir


@pytest.fixture(scope="module")
def schur():
    return compile_goal(SMALL, ["SCHUR", "CGNR"]).lir


def _hops(lir):
    return [k for k in kernels(lir.body) if isinstance(k, HopKernel)]


def test_dirac_lowers_to_one_nine_leg_stencil():
    lir = apply_program(load_sources(SMALL))
    (k,) = _hops(lir)
    offsets = sorted(h.offset for h in k.hops)
    want = sorted([ORIGIN] + [tuple(sg * (i == a) for i in range(4))
                              for a in range(4) for sg in (1, -1)])
    assert offsets == want
    local = next(h for h in k.hops if h.is_local)
    assert local.link is None


def test_backward_legs_use_link_at_neighbour(cgnr):
    k = _hops(cgnr)[1]
    for h in k.hops:
        if h.is_local:
            continue
        forward = sum(h.offset) > 0
        assert h.link.dagger == forward
        assert h.link.rel == (ORIGIN if forward else h.offset)


def test_linear_updates_fused_into_one_loop(cgnr):
    loop = next(n for n in walk_nodes(cgnr.body) if isinstance(n, ParallelFor)
                and {k.out for k in n.body} == {"x", "CGNR1_r"})
    assert all(isinstance(k, LinComb) for k in loop.body)


def test_fusion_rejects_neighbour_dependence(cgnr):
    hop = next(n for n in walk_nodes(cgnr.body) if isinstance(n, ParallelFor)
               and any(isinstance(k, HopKernel) for k in n.body))
    src = hop.body[0].src
    writer = ParallelFor("L", (LinComb(src, ()),))
    assert not can_fuse(writer, hop)
    assert can_fuse(writer, ParallelFor("L", (LinComb("q", ((ir.ScalarLit(1), src),)),)))
    assert not can_fuse(writer, replace(writer, domain="even"))
    assert len(fuse_loops((writer, hop))) == 2


def test_schur_temporaries_become_locals(schur):
    assert schur.locals
    names = {b.name for b in schur.buffers}
    for b in schur.locals:
        assert b.name not in names
        owners = [n for n in walk_nodes(schur.body) if isinstance(n, ParallelFor)
                  and b.name in n.private]
        assert len(owners) == 1


def test_schur_loops_run_over_half_lattices(schur):
    domains = {n.domain for n in walk_nodes(schur.body) if isinstance(n, ParallelFor)}
    assert {"even", "odd"} <= domains
    inner = next(n for n in schur.body if isinstance(n, SeqWhile))
    assert all(n.domain == "odd" for n in walk_nodes(inner.body) if isinstance(n, Reduction))
    temps = {b.name for b in schur.buffers if b.role == "temp"}
    for n in walk_nodes(inner.body):
        if isinstance(n, ParallelFor) and n.domain == "even":
            # the Schur operator passes through an even-site scratch field
            assert {k.out for k in n.body} <= temps


def test_parity_legs_in_full_lattice_hop(schur):
    parities = {h.parity for k in _hops(schur) for h in k.hops}
    assert parities <= {None, "even", "odd"}


def test_hop_temporaries_are_private(cgnr):
    for n in walk_nodes(cgnr.body):
        if isinstance(n, ParallelFor):
            for i, k in enumerate(n.body):
                if isinstance(k, HopKernel):
                    assert {f"psi{i}", f"chi{i}", f"acc{i}"} <= set(n.private)


def test_scalar_write_in_parallel_loop_is_a_race(cgnr):
    bad = ParallelFor("L", (ScalarWrite("alpha", ir.ScalarLit(1)),))
    with pytest.raises(RaceDetected, match="alpha"):
        privatize(cgnr.with_body(cgnr.body + (bad,)))


def test_shared_buffer_listed_private_is_a_race(cgnr):
    loop = ParallelFor("L", (LinComb("x", ()),), private=("CGNR1_r",))
    with pytest.raises(RaceDetected, match="CGNR1_r"):
        privatize(cgnr.with_body((loop,)))


def test_inverse_is_not_lowered(unit):
    with pytest.raises(UnloweredConstruct, match="inverse"):
        lower(list(unit.goal))


def test_non_site_vector_rejected(lattice):
    u = parse("decl a, c : vector(S) ;\ngoal c = a ;", lattice)
    with pytest.raises(UnloweredConstruct):
        lower(list(u.goal))


def test_unknown_layout(unit):
    with pytest.raises(ValueError):
        lower([], "tiled")


@pytest.mark.parametrize("layout", ["linear", "nested"])
def test_layout_tag_on_every_loop(layout):
    lir = compile_goal(SMALL, ["CGNR"], layout).lir
    assert lir.layout == layout
    assert all(n.layout == layout for n in walk_nodes(lir.body) if isinstance(n, ParallelFor))


def test_dump_format(cgnr):
    text = dump_ir(cgnr)
    lines = text.splitlines()
    assert lines[0] == "loopir layout=linear result=x"
    assert "buffer b : L x 12 (input)" in lines
    assert "scalars kappa, mu, epsilon" in lines
    assert "while (CGNR1_n_r > epsilon)" in lines
    assert any(ln.strip().startswith("leg CGNR1_p[s-x] link Ux[s-x]") for ln in lines)
    assert dump_ir(cgnr) == text


def test_unoptimized_pipeline_keeps_all_buffers():
    unit = load_sources(SMALL)
    from qiral.algorithms import goal_globals, load_catalog, plan
    from qiral.rewrite import rules_from_unit

    prog = plan(list(unit.goal), ["SCHUR", "CGNR"], load_catalog(unit),
                rules_from_unit(unit), goal_globals(unit))
    raw = compile_program(prog, defs=dict(unit.defs), optimize=False)
    opt = compile_program(prog, defs=dict(unit.defs))
    assert not raw.locals
    assert len(raw.buffers) == len(opt.buffers) + len(opt.locals)
    n_loops = lambda lir: sum(isinstance(n, ParallelFor) for n in walk_nodes(lir.body))  # noqa
    assert n_loops(opt) < n_loops(raw)


def test_spin_tables_are_exact(cgnr):
    for k in _hops(cgnr):
        for h in k.hops:
            for _, sp in h.spins:
                m = sp.matrix
                assert np.array_equal(m, np.round(m.real) + 1j * np.round(m.imag))

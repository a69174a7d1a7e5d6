import numpy as np
import pytest

from qiral.backend import (LibraryBinding, apply_bindings, build_and_diff, compile_source, emit,
                           find_compiler, max_rel_diff, runtime_files)
from qiral.errors import CompileFailed, QiralError, RuntimeMismatch, ShapeMismatch, UnboundKernel
from qiral.lowering import LibraryCall, kernels
from qiral.pipeline import apply_program, compile_goal, load_sources
from qiral.vm import RunParams, random_gauge, random_vector

from .conftest import MEDIUM, SMALL

needs_cc = pytest.mark.skipif(find_compiler() is None, reason="no C compiler on PATH")

ZGEMM = LibraryBinding("C = A * B", "qr_zgemm_blocks", ("A", "B", "C", "n"))
ZAXPBY = LibraryBinding("Z = a*X + b*Y", "qr_zaxpby_field", ("a", "X", "b", "Y", "Z", "n"))


@pytest.fixture(scope="module")
def cgnr():
    return compile_goal(SMALL, ["CGNR"]).lir


@pytest.fixture(scope="module")
def twist_lir(tmp_path_factory):
    extra = tmp_path_factory.mktemp("twist") / "twist.qir"
    extra.write_text("def Twist = I_{L (x) C (x) S} + 2 * i * kappa * mu * I_{L (x) C} (x) gamma5 ;\n")
    unit = load_sources(SMALL, inputs=[extra])
    return apply_program(unit, dict(unit.defs)["Twist"])


def test_emission_is_deterministic(cgnr):
    assert emit(cgnr, SMALL) == emit(cgnr, SMALL)


def test_parallel_loops_carry_private_clauses(cgnr):
    src = emit(cgnr, SMALL)
    assert "#pragma omp parallel for private(" in src
    assert "int qiral_solve(" in src
    assert "qr_ordered_sum" in src


def test_nested_layout_collapses_four_loops():
    src = emit(compile_goal(SMALL, ["SCHUR", "CGNR"], "nested").lir, SMALL)
    assert "collapse(4)" in src
    assert "QR_EVEN" in src and "QR_ODD" in src


def test_binding_replaces_matching_loop(twist_lir):
    bound = apply_bindings(twist_lir, [ZGEMM])
    calls = [k for k in kernels(bound.body) if isinstance(k, LibraryCall)]
    assert [c.callee for c in calls] == ["qr_zgemm_blocks"]
    assert "qr_zgemm_blocks(blk" in emit(twist_lir, SMALL, [ZGEMM])


def test_binding_ignores_stencils(cgnr):
    bound = apply_bindings(cgnr, [ZGEMM])
    assert not any(isinstance(k, LibraryCall) for k in kernels(bound.body))


def test_library_call_without_binding(twist_lir):
    bound = apply_bindings(twist_lir, [ZGEMM])
    with pytest.raises(UnboundKernel, match="qr_zgemm_blocks"):
        emit(bound, SMALL)


def test_bad_binding_signature():
    with pytest.raises(ShapeMismatch):
        LibraryBinding("C = A * B", "f", ("A", "Q"))
    with pytest.raises(QiralError):
        LibraryBinding("C = A + B", "f", ("A",))
    with pytest.raises(QiralError):
        LibraryBinding("C = A * B", "not-c", ("A",))


def test_max_rel_diff():
    assert max_rel_diff(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 0.5
    assert max_rel_diff(np.zeros(2), np.zeros(2)) == 0.0


def test_runtime_files_shipped():
    files = runtime_files()
    assert {"qiral_runtime.h", "qiral_runtime.c", "qiral_main.c"} <= set(files)


@needs_cc
@pytest.mark.parametrize("names,layout", [(["CGNR"], "linear"), (["SCHUR", "CGNR"], "nested")])
def test_native_matches_vm(names, layout):
    lir = compile_goal(MEDIUM, names, layout).lir
    g = random_gauge(MEDIUM, 42)
    b = random_vector(12 * 256, 42)
    rep = build_and_diff(lir, g, b, RunParams(epsilon=1e-16 * np.vdot(b, b).real), threads=2)
    assert rep.max_rel_diff <= 1e-10
    assert rep.native.exit_code == 0
    assert len(rep.native.trace) == rep.vm.iterations
    assert [i for i, _ in rep.native.trace] == [i for i, _ in rep.vm.trace]


@needs_cc
def test_native_iteration_cap(cgnr):
    g = random_gauge(SMALL, 1)
    rep = build_and_diff(cgnr, g, random_vector(192, 1), RunParams(epsilon=1e-40, max_iter=3))
    assert rep.native.exit_code == 2
    assert len(rep.native.trace) == 3


@needs_cc
def test_bound_kernels_match_vm(twist_lir, cgnr):
    g = random_gauge(SMALL, 5)
    v = random_vector(192, 6)
    rep = build_and_diff(twist_lir, g, v, RunParams(), bindings=[ZGEMM], tol=1e-12)
    assert "qr_zgemm_blocks(" in rep.source
    rep = build_and_diff(cgnr, g, v, RunParams(), bindings=[ZAXPBY], tol=1e-12)
    assert "qr_zaxpby_field(" in rep.source


@needs_cc
def test_planted_runtime_bug_detected(cgnr):
    text = runtime_files()["qiral_runtime.c"]
    assert "acc[c * 4 + a] += t;" in text
    broken = text.replace("acc[c * 4 + a] += t;", "acc[c * 4 + a] -= t;")
    g = random_gauge(SMALL, 2)
    with pytest.raises(RuntimeMismatch):
        build_and_diff(cgnr, g, random_vector(192, 2), RunParams(max_iter=5),
                       runtime={"qiral_runtime.c": broken})


@needs_cc
def test_broken_source_fails_to_compile(tmp_path):
    with pytest.raises(CompileFailed):
        compile_source("int qiral_solve(void) { return ; ", tmp_path)


@needs_cc
def test_kept_workdir(cgnr, tmp_path):
    rep = build_and_diff(cgnr, random_gauge(SMALL, 3), random_vector(192, 3), RunParams(),
                         workdir=tmp_path / "w")
    assert (rep.workdir / "qiral_solver.c").read_text() == rep.source
    assert (rep.workdir / "trace.csv").read_text().startswith("iteration,residual")

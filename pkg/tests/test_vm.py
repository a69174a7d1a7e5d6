import os
import subprocess
import sys

import numpy as np
import pytest

from qiral.errors import NonFiniteValue, QiralError
from qiral.pipeline import apply_program, compile_goal, load_sources
from qiral.vm import (Kernels, Machine, RunParams, execute, parallel_execute, random_gauge,
                      random_vector, unit_gauge)

from .conftest import KAPPA, MU, SMALL, rel

numba_only = pytest.mark.skipif(os.environ.get("QIRAL_NO_NUMBA") not in (None, "", "0"),
                                reason="numba disabled")


@pytest.fixture(scope="module")
def apply_lir():
    return apply_program(load_sources(SMALL))


@pytest.fixture(scope="module")
def cgnr():
    return compile_goal(SMALL, ["CGNR"]).lir


def test_apply_matches_dense(apply_lir, gauge, dense_dirac):
    v = random_vector(192, 3)
    y = execute(apply_lir, gauge, v, RunParams(kappa=KAPPA, mu=MU)).x
    assert rel(y, dense_dirac @ v) < 1e-14


def test_unit_gauge_without_hopping_is_twisted_identity(apply_lir):
    v = random_vector(192, 4)
    y = execute(apply_lir, unit_gauge(SMALL), v, RunParams(kappa=0.0)).x
    np.testing.assert_array_equal(y, v)


def test_apply_counters(apply_lir, gauge):
    c = execute(apply_lir, gauge, random_vector(192, 1), RunParams()).counters
    assert c["hop_kernels"] == 1
    assert c["hop_sites"] == 16
    assert c["neighbour_blocks"] == 16 * 8
    assert c["outer_iterations"] == 0


@numba_only
@pytest.mark.parametrize("names", [["CGNR"], ["SCHUR", "CGNR"]])
def test_numba_and_numpy_kernels_agree(names, gauge):
    lir = compile_goal(SMALL, names).lir
    b = random_vector(192, 9)
    p = RunParams()
    a = execute(lir, gauge, b, p, kernels=Kernels("numba"))
    c = execute(lir, gauge, b, p, kernels=Kernels("numpy"))
    assert a.iterations == c.iterations
    assert rel(a.x, c.x) < 1e-12


def test_numpy_fallback_selected_by_environment():
    code = ("from qiral.vm.kernels import Kernels; import sys; "
            "sys.stdout.write(Kernels().name)")
    env = {**os.environ, "QIRAL_NO_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env=env, check=True).stdout
    assert out == "numpy"


@pytest.mark.parametrize("layout", ["linear", "nested"])
def test_threads_give_identical_bits(layout, gauge):
    lir = compile_goal(SMALL, ["SCHUR", "CGNR"], layout).lir
    b = random_vector(192, 11)
    runs = [parallel_execute(lir, gauge, b, RunParams(), threads=t) for t in (1, 2, 4)]
    for r in runs[1:]:
        assert np.array_equal(r.x, runs[0].x)
        assert r.trace == runs[0].trace


def test_layouts_agree(gauge):
    b = random_vector(192, 12)
    lin = execute(compile_goal(SMALL, ["CGNR"]).lir, gauge, b, RunParams())
    nest = execute(compile_goal(SMALL, ["CGNR"], "nested").lir, gauge, b, RunParams())
    assert rel(nest.x, lin.x) < 1e-13


def test_shared_temporaries_corrupt_threaded_runs(apply_lir, gauge):
    v = random_vector(192, 13)
    good = parallel_execute(apply_lir, gauge, v, RunParams(), threads=4)
    bad = parallel_execute(apply_lir, gauge, v, RunParams(), threads=4, privatize=False)
    assert not np.allclose(good.x, bad.x)
    alone = parallel_execute(apply_lir, gauge, v, RunParams(), threads=1, privatize=False)
    assert np.array_equal(alone.x, good.x)


def test_iteration_cap_sets_flag(cgnr, gauge):
    r = execute(cgnr, gauge, random_vector(192, 1), RunParams(epsilon=1e-40, max_iter=4))
    assert r.max_iter_exceeded
    assert r.iterations == 4
    assert [i for i, _ in r.trace] == [1, 2, 3, 4]


def test_trace_records_squared_residual(cgnr, gauge, dense_dirac):
    b = random_vector(192, 2)
    r = execute(cgnr, gauge, b, RunParams(max_iter=3))
    res = dense_dirac @ r.x - b
    assert r.trace[-1][1] == pytest.approx(np.vdot(res, res).real, rel=1e-8)
    assert r.counters["reductions"] == 2 + 3 * 3


def test_nan_input_is_reported(cgnr, gauge):
    b = random_vector(192, 1)
    b[5] = np.nan
    with pytest.raises(NonFiniteValue):
        execute(cgnr, gauge, b, RunParams())


def test_input_checks(cgnr, gauge):
    with pytest.raises(QiralError, match="entries"):
        execute(cgnr, gauge, np.zeros(10), RunParams())
    with pytest.raises(QiralError, match="no value"):
        execute(cgnr, gauge, {"q": np.zeros(192)}, RunParams())


def test_run_params_validation():
    with pytest.raises(ValueError):
        RunParams(epsilon=0)
    with pytest.raises(ValueError):
        RunParams(max_iter=0)
    with pytest.raises(ValueError):
        Machine(compile_goal(SMALL, ["CGNR"]).lir, random_gauge(SMALL, 1), threads=0)

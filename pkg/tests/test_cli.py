import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from qiral.backend import find_compiler
from qiral.cli import main
from qiral.vm import random_gauge, random_vector, read_vector, write_gauge, write_vector

FIX = Path(__file__).parent / "fixtures" / "cli"
SMALL = ["--lattice", "2,2,2,2"]


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_check_ok(capsys):
    rc, _, err = run(capsys, "check", *SMALL, "--algorithms", "SCHUR,CGNR")
    assert rc == 0 and "ok" in err


def test_check_reports_located_shape_error(capsys):
    rc, _, err = run(capsys, "check", *SMALL, str(FIX / "misshapen.qir"))
    assert rc == 1
    assert err.strip().splitlines() == [
        "error: 2:19: ShapeMismatch: cannot apply matrix(L (x) C (x) S -> L (x) C (x) S) "
        "to vector(C)"]


def test_check_unknown_algorithm(capsys):
    rc, _, err = run(capsys, "check", *SMALL, "--algorithms", "GMRES")
    assert rc == 1 and "GMRES" in err


def test_run_prints_csv(capsys):
    rc, out, err = run(capsys, "run", *SMALL, "--algorithms", "CGNR")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "iteration,residual"
    assert [int(ln.split(",")[0]) for ln in lines[1:]] == list(range(1, len(lines)))
    assert float(lines[-1].split(",")[1]) <= 1e-16
    assert "iterations=" in err and "neighbour_blocks=" in err


def test_run_iteration_cap(capsys, tmp_path):
    report = tmp_path / "r.csv"
    rc, out, err = run(capsys, "run", *SMALL, "--algorithms", "CGNR", "--epsilon", "1e-30",
                       "--max-iter", "5", "--report", str(report))
    assert rc == 2
    assert out == ""
    assert len(report.read_text().splitlines()) == 6
    assert "MaxIterExceeded" in err


def test_run_from_files_and_threads(capsys, tmp_path):
    g, b = tmp_path / "g.bin", tmp_path / "b.bin"
    write_gauge(g, random_gauge((2, 2, 2, 2), 7))
    write_vector(b, random_vector(192, 8))
    outs = []
    for threads in ("1", "3"):
        x = tmp_path / f"x{threads}.bin"
        rc, _, _ = run(capsys, "run", *SMALL, "--algorithms", "SCHUR,CGNR", "--gauge", str(g),
                       "--rhs", str(b), "--threads", threads, "-o", str(x))
        assert rc == 0
        outs.append(read_vector(x))
    assert np.array_equal(*outs)


def test_rhs_size_mismatch(capsys, tmp_path):
    b = tmp_path / "b.bin"
    write_vector(b, np.zeros(12))
    rc, _, err = run(capsys, "run", *SMALL, "--algorithms", "CGNR", "--rhs", str(b))
    assert rc == 3 and "entries" in err


def test_pipeline_errors_exit_3(capsys):
    assert run(capsys, "run", *SMALL, "--algorithms", "SCHUR")[0] == 3
    assert run(capsys, "run", *SMALL)[0] == 3
    assert run(capsys, "run", *SMALL, "--algorithms", "CGNR", "--threads", "0")[0] == 3
    assert run(capsys, "run", "--lattice", "3,2,2,2", "--algorithms", "CGNR")[0] == 3


def test_bad_lattice_argument(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--lattice", "2,2"])


def test_build_ir_to_stdout_and_dump(capsys, tmp_path):
    dump = tmp_path / "d.ir"
    rc, out, _ = run(capsys, "build", *SMALL, "--algorithms", "CGNR", "--emit", "ir",
                     "--dump-ir", str(dump))
    assert rc == 0
    assert out.startswith("loopir layout=linear result=x")
    assert dump.read_text() == out


def test_build_c_writes_runtime(capsys, tmp_path):
    stem = tmp_path / "out" / "solver"
    rc, _, _ = run(capsys, "build", *SMALL, "--algorithms", "SCHUR,CGNR",
                   "--loop-layout", "nested", "-o", str(stem))
    assert rc == 0
    src = stem.with_suffix(".c").read_text()
    assert "collapse(4)" in src and "private(" in src
    assert (stem.parent / "qiral_runtime.h").exists()


def test_trace_rewrites_is_jsonl(capsys, tmp_path):
    log = tmp_path / "rw.jsonl"
    rc, _, _ = run(capsys, "build", *SMALL, "--algorithms", "CGNR", "--emit", "ir",
                   "--trace-rewrites", str(log))
    assert rc == 0
    entries = [json.loads(ln) for ln in log.read_text().splitlines()]
    assert entries and all("rule" in e for e in entries)


def test_oracle_passes(capsys):
    rc, out, _ = run(capsys, "oracle", *SMALL, "--algorithms", "SCHUR,CGNR")
    assert rc == 0
    assert "unsound: 0" in out


def test_oracle_flags_corrupted_rule(capsys):
    rc, _, err = run(capsys, "oracle", *SMALL, str(FIX / "bad_rule.qir"))
    assert rc == 4
    assert "unsound rule bad_gamma5" in err


@pytest.mark.skipif(shutil.which("qiralc") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["qiralc", "check", *SMALL], capture_output=True, text=True)
    assert p.returncode == 0


@pytest.mark.skipif(find_compiler() is None, reason="no C compiler on PATH")
def test_built_solver_runs(capsys, tmp_path):
    from qiral.backend import compile_source

    stem = tmp_path / "qiral_solver"
    assert main(["build", *SMALL, "--algorithms", "CGNR", "-o", str(stem)]) == 0
    capsys.readouterr()
    exe = compile_source(stem.with_suffix(".c").read_text(), tmp_path / "bin")
    g, b, x = tmp_path / "g.bin", tmp_path / "b.bin", tmp_path / "x.bin"
    write_gauge(g, random_gauge((2, 2, 2, 2), 1))
    write_vector(b, random_vector(192, 1))
    p = subprocess.run([str(exe), str(g), str(x), "0.15", "0.1", "1e-16", "100", "-", str(b)],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert p.stdout.startswith("iteration,residual")
    assert read_vector(x).size == 192

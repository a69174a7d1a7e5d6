"""Compile generated C with the host toolchain, run it, and compare with the VM."""

from __future__ import annotations

import csv
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CompileFailed, QiralError, RuntimeMismatch
from ..lowering.loopir import LoopIR
from ..vm.gauge import GaugeConfig, read_vector, write_gauge, write_vector
from ..vm.machine import RunParams, RunResult, execute
from .emit import emit, runtime_files

CFLAGS = ("-std=c11", "-O2", "-fopenmp")
TOLERANCE = 1e-10


def find_compiler() -> str | None:
    for cc in (os.environ.get("CC"), "gcc", "cc", "clang"):
        if cc and shutil.which(cc):
            return cc
    return None


@dataclass
class NativeRun:
    x: np.ndarray
    trace: list[tuple[int, float]]
    exit_code: int
    stderr: str = ""


@dataclass
class BuildReport:
    source: str
    native: NativeRun
    vm: RunResult
    max_rel_diff: float
    workdir: Path | None = field(default=None, repr=False)


def compile_source(source: str, workdir: Path, runtime: dict[str, str] | None = None,
                   cc: str | None = None) -> Path:
    """Write the generated unit plus runtime into `workdir` and link a binary."""
    cc = cc or find_compiler()
    if cc is None:
        raise CompileFailed("no C compiler found (set CC)")
    files = runtime_files()
    files.update(runtime or {})
    workdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (workdir / name).write_text(text, encoding="utf-8")
    (workdir / "qiral_solver.c").write_text(source, encoding="utf-8")
    exe = workdir / "qiral_solver"
    cmd = [cc, *CFLAGS, "-I", str(workdir), "-o", str(exe),
           str(workdir / "qiral_solver.c"), str(workdir / "qiral_runtime.c"),
           str(workdir / "qiral_main.c"), "-lm"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileFailed(f"{' '.join(cmd)}\n{proc.stderr}")
    return exe


def run_native(exe: Path, lir: LoopIR, config: GaugeConfig, inputs: dict[str, np.ndarray],
               params: RunParams, workdir: Path, threads: int | None = None) -> NativeRun:
    gauge = workdir / "gauge.bin"
    write_gauge(gauge, config)
    paths = []
    for name in lir.inputs:
        p = workdir / f"in_{name}.bin"
        write_vector(p, np.asarray(inputs[name], dtype=np.complex128).ravel())
        paths.append(str(p))
    out, report = workdir / "x.bin", workdir / "trace.csv"
    cmd = [str(exe), str(gauge), str(out), *(f"{float(v):.17g}" for v in
           (params.kappa, params.mu, params.epsilon)), str(params.max_iter), str(report), *paths]
    env = dict(os.environ)
    if threads:
        env["OMP_NUM_THREADS"] = str(threads)
    proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
    if proc.returncode not in (0, 2):
        raise QiralError(f"generated solver failed ({proc.returncode}): {proc.stderr.strip()}")
    with open(report, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    trace = [(int(i), float(r)) for i, r in rows]
    return NativeRun(read_vector(out), trace, proc.returncode, proc.stderr)


def max_rel_diff(a: np.ndarray, ref: np.ndarray) -> float:
    """Largest elementwise difference relative to the largest reference entry."""
    scale = float(np.max(np.abs(ref))) if ref.size else 0.0
    diff = float(np.max(np.abs(a - ref))) if ref.size else 0.0
    return diff / scale if scale > 0 else diff


def build_and_diff(lir: LoopIR, config: GaugeConfig, b, params: RunParams, bindings=(),
                   runtime: dict[str, str] | None = None, tol: float = TOLERANCE,
                   workdir: str | Path | None = None, threads: int | None = None) -> BuildReport:
    """Build `lir` natively and raise RuntimeMismatch if it disagrees with the VM.

    `runtime` overrides individual runtime files by name, which is how tests
    plant a broken kernel.
    """
    inputs = b if isinstance(b, dict) else {lir.inputs[0]: b}
    source = emit(lir, config.dims, bindings)
    vm = execute(lir, config, inputs, params)
    keep = workdir is not None
    root = Path(workdir) if keep else Path(tempfile.mkdtemp(prefix="qiral-"))
    try:
        exe = compile_source(source, root, runtime)
        native = run_native(exe, lir, config, inputs, params, root, threads)
    finally:
        if not keep:
            shutil.rmtree(root, ignore_errors=True)
    if native.x.shape != vm.x.shape:
        raise RuntimeMismatch(f"native result has {native.x.size} entries, VM has {vm.x.size}")
    rel = max_rel_diff(native.x, vm.x)
    if not rel <= tol:
        raise RuntimeMismatch(f"native and VM results differ: max relative difference "
                              f"{rel:.3e} > {tol:.1e}")
    return BuildReport(source, native, vm, rel, root if keep else None)

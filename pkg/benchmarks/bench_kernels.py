"""Time the VM site kernels: numba against the numpy fallback.

    python benchmarks/bench_kernels.py [--lattice 8,8,8,8] [--repeat 5]

Both kernel sets are loaded in-process, so QIRAL_NO_NUMBA does not need to be
toggled.  The first numba call compiles, so it is made once before timing.
"""

import argparse
import time

import numpy as np

from qiral.pipeline import apply_program, compile_goal, load_sources
from qiral.vm import Kernels, Machine, RunParams, execute, random_gauge, random_vector


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_apply(dims, repeat, names):
    """One Dirac application: a single nine-leg hop kernel over the lattice."""
    lir = apply_program(load_sources(dims))
    cfg = random_gauge(dims, 1)
    v = random_vector(12 * int(np.prod(dims)), 2)
    out = {}
    for name in names:
        k = Kernels(name)
        m = Machine(lir, cfg, kernels=k)
        run = lambda: m.run({"v": v}, RunParams().scalars(), 1)  # noqa: E731
        run()
        out[name] = best_of(run, repeat)
    return out


def bench_solve(dims, repeat, names):
    c = compile_goal(dims, ["CGNR"])
    cfg = random_gauge(dims, 1)
    b = random_vector(12 * int(np.prod(dims)), 2)
    params = RunParams(max_iter=20)
    out = {}
    for name in names:
        k = Kernels(name)
        execute(c.lir, cfg, b, params, kernels=k)
        out[name] = best_of(lambda: execute(c.lir, cfg, b, params, kernels=k), repeat)
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lattice", default="8,8,8,8")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    dims = tuple(int(x) for x in args.lattice.split(","))

    names = ["numpy"]
    try:
        Kernels("numba")
        names.append("numba")
    except RuntimeError:
        print("numba unavailable; timing numpy only")

    print(f"lattice {dims}, best of {args.repeat}")
    for label, fn in (("Dirac apply", bench_apply), ("CGNR, 20 iterations", bench_solve)):
        res = fn(dims, args.repeat, names)
        line = "  ".join(f"{n}: {t * 1e3:9.2f} ms" for n, t in res.items())
        if len(res) == 2:
            line += f"  speedup {res['numpy'] / res['numba']:.1f}x"
        print(f"{label:22s} {line}")


if __name__ == "__main__":
    main()

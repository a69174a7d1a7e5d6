"""The qiralc command line.

Exit codes: 0 success, 1 check errors, 2 iteration cap reached, 3 pipeline
error, 4 oracle tolerance breach.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from .errors import ProgramErrors, QiralError

EXIT_OK, EXIT_CHECK, EXIT_MAX_ITER, EXIT_PIPELINE, EXIT_ORACLE = 0, 1, 2, 3, 4

ORACLE_SOLVE_TOL = 1e-6
ORACLE_APPLY_TOL = 1e-12


def _dims(text: str) -> tuple[int, int, int, int]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lattice {text!r}; expected X,Y,Z,T") from None
    if len(dims) != 4:
        raise argparse.ArgumentTypeError("lattice needs four extents")
    return dims


def _algorithms(text: str) -> list[str]:
    return [a.strip() for a in text.split(",") if a.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="*", type=Path, help=".qir files after the prelude")
    common.add_argument("--algorithms", type=_algorithms, default=None,
                        help="comma-separated plan, outermost first, e.g. SCHUR,CGNR")
    common.add_argument("--lattice", type=_dims, default=(4, 4, 4, 4), metavar="X,Y,Z,T")
    common.add_argument("--kappa", type=float, default=0.15)
    common.add_argument("--mu", type=float, default=0.1)
    common.add_argument("--epsilon", type=float, default=1e-16,
                        help="threshold on the squared residual norm")
    common.add_argument("--max-iter", type=int, default=3072)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--loop-layout", choices=("linear", "nested"), default="linear")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--prelude", type=Path, action="append", default=[],
                        help="replace the shipped library (repeatable)")
    common.add_argument("--trace-rewrites", type=Path, default=None,
                        help="JSON-lines log of every rewrite step")
    common.add_argument("--dump-ir", type=Path, default=None, help="write LoopIR text here")
    common.add_argument("--gauge", type=Path, default=None, help="QGAUGE1 file (default: random)")
    common.add_argument("--rhs", type=Path, default=None, help="QVEC1 file for b (default: random)")

    p = argparse.ArgumentParser(prog="qiralc", description="QIRAL solver generator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="parse and typecheck")
    run = sub.add_parser("run", parents=[common], help="solve on the reference VM")
    run.add_argument("--report", type=Path, default=None, help="convergence CSV (default stdout)")
    run.add_argument("-o", "--output", type=Path, default=None, help="write x as a QVEC1 file")
    build = sub.add_parser("build", parents=[common], help="emit C (or LoopIR)")
    build.add_argument("--emit", choices=("c", "ir"), default="c")
    build.add_argument("-o", "--output", type=Path, default=None,
                       help="output stem; C goes to STEM.c next to the runtime files")
    sub.add_parser("oracle", parents=[common], help="cross-check against dense linear algebra")
    return p


def _err(msg) -> None:
    print(msg, file=sys.stderr)


def _fail(e: QiralError) -> None:
    if isinstance(e, ProgramErrors):
        for sub in e.errors:
            _err(f"error: {sub}")
    else:
        _err(f"error: {e}")


@contextlib.contextmanager
def _rewrite_log(path: Path | None):
    if path is None:
        yield None
        return
    from .rewrite import jsonl_tracer

    with open(path, "w", encoding="utf-8") as fh:
        yield jsonl_tracer(fh)


def _params(args):
    from .vm import RunParams

    return RunParams(kappa=args.kappa, mu=args.mu, epsilon=args.epsilon,
                     max_iter=args.max_iter, seed=args.seed)


def _compile(args, layout=None):
    from .lowering import dump_ir
    from .pipeline import compile_goal

    if not args.algorithms:
        raise QiralError("--algorithms is required")
    with _rewrite_log(args.trace_rewrites) as trace:
        compiled = compile_goal(args.lattice, args.algorithms, layout or args.loop_layout,
                                args.prelude, args.inputs, trace)
    if args.dump_ir is not None:
        args.dump_ir.write_text(dump_ir(compiled.lir), encoding="utf-8")
    return compiled


def _problem(args, lir):
    """Gauge field and input vectors: from files when given, else seeded random."""
    from .vm import geometry, random_gauge, random_vector, read_gauge, read_vector

    config = read_gauge(args.gauge) if args.gauge else random_gauge(args.lattice, args.seed)
    if tuple(config.dims) != tuple(args.lattice):
        raise QiralError(f"gauge file is {config.dims}, lattice is {args.lattice}")
    geo = geometry(config.dims)
    inputs = {}
    for k, name in enumerate(lir.inputs):
        n = len(geo.sites[lir.buffer(name).domain]) * 12
        if args.rhs is not None and k == 0:
            v = read_vector(args.rhs)
            if v.size != n:
                raise QiralError(f"{args.rhs} holds {v.size} entries, {name} needs {n}")
        else:
            v = random_vector(n, args.seed + k)
        inputs[name] = v
    return config, inputs


# subcommands -------------------------------------------------------------------


def cmd_check(args) -> int:
    from .algorithms import load_catalog
    from .pipeline import load_sources, typecheck

    try:
        unit = load_sources(args.lattice, args.prelude, args.inputs)
        typecheck(unit)
        if args.algorithms:
            catalog = load_catalog(unit)
            for name in args.algorithms:
                catalog[name]
    except QiralError as e:
        _fail(e)
        return EXIT_CHECK
    _err("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    from .vm import parallel_execute, write_vector

    compiled = _compile(args)
    config, inputs = _problem(args, compiled.lir)
    res = parallel_execute(compiled.lir, config, inputs, _params(args), threads=args.threads)
    lines = ["iteration,residual"] + [f"{i},{r:.17g}" for i, r in res.trace]
    text = "\n".join(lines) + "\n"
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.output is not None and res.x is not None:
        write_vector(args.output, res.x)
    counters = " ".join(f"{k}={v}" for k, v in res.counters.items())
    _err(f"iterations={res.iterations} {counters}")
    if res.max_iter_exceeded:
        _err(f"error: MaxIterExceeded: no convergence within {args.max_iter} iterations")
        return EXIT_MAX_ITER
    return EXIT_OK


def cmd_build(args) -> int:
    from .backend import emit, runtime_files
    from .lowering import dump_ir

    compiled = _compile(args)
    if args.emit == "ir":
        text = dump_ir(compiled.lir)
        if args.output is None:
            sys.stdout.write(text)
        else:
            args.output.with_suffix(".ir").write_text(text, encoding="utf-8")
        return EXIT_OK
    source = emit(compiled.lir, args.lattice)
    stem = args.output or Path("qiral_solver")
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".c").write_text(source, encoding="utf-8")
    for name, text in runtime_files().items():
        (stem.parent / name).write_text(text, encoding="utf-8")
    _err(f"wrote {stem.with_suffix('.c')}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import Env, check_rule_soundness, dense_solve, denote
    from .pipeline import apply_program, dirac_term
    from .vm import RunParams, execute, random_vector

    if not args.algorithms:
        args.algorithms = ["CGNR"]
    compiled = _compile(args)
    failures = 0
    checked = 0
    for rule in compiled.rules:
        if rule.kind == "definition":
            continue
        res = check_rule_soundness(rule, 20, seed=args.seed)
        checked += 1
        if not res.passed:
            failures += 1
            _err(f"unsound rule {rule.name}: {res.counterexample}")
    print(f"rules checked: {checked}, unsound: {failures}")

    config, inputs = _problem(args, compiled.lir)
    scalars = {"kappa": args.kappa, "mu": args.mu, "epsilon": args.epsilon}
    dirac = dirac_term(compiled.unit)
    m = denote(dirac, Env(gauge=config, scalars=scalars))

    apply_lir = apply_program(compiled.unit, dirac)
    apply_err = 0.0
    for k in range(20):
        v = random_vector(m.shape[1], args.seed + 1000 + k)
        y = execute(apply_lir, config, v, RunParams(kappa=args.kappa, mu=args.mu)).x
        ref = m @ v
        apply_err = max(apply_err, float(np.linalg.norm(y - ref) / np.linalg.norm(ref)))
    print(f"apply max relative error: {apply_err:.3e}")

    b = inputs[compiled.lir.inputs[0]]
    res = execute(compiled.lir, config, inputs, _params(args))
    ref = dense_solve(m, b)
    solve_err = float(np.linalg.norm(res.x - ref) / np.linalg.norm(ref))
    print(f"solve max relative error: {solve_err:.3e} ({res.iterations} iterations)")

    ok = not failures and apply_err <= ORACLE_APPLY_TOL and solve_err <= ORACLE_SOLVE_TOL
    if res.max_iter_exceeded:
        _err("warning: solver hit the iteration cap")
    if not ok:
        _err("error: oracle tolerance breached")
        return EXIT_ORACLE
    return EXIT_OK


COMMANDS = {"check": cmd_check, "run": cmd_run, "build": cmd_build, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        _err("error: --threads must be positive")
        return EXIT_PIPELINE
    try:
        return COMMANDS[args.command](args)
    except QiralError as e:
        _fail(e)
        return EXIT_PIPELINE
    except (OSError, ValueError) as e:
        _err(f"error: {e}")
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())

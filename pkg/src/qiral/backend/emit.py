"""C99 + OpenMP code generation from LoopIR.

The generated translation unit defines `qiral_solve` plus a few constants
read by the program skeleton in runtime/qiral_main.c.  Output depends only on
the LoopIR, the lattice extents and the bindings, so emitting twice gives the
same bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .. import ir
from ..errors import QiralError, ShapeMismatch, UnboundKernel
from ..lowering.loopir import (HopKernel, LibraryCall, LinComb, LoopIR, ParallelFor, Reduction,
                               ScalarAssign, SeqWhile, Spin)
from ..vm.geometry import check_dims

DOMAIN_C = {"L": "QR_L", "even": "QR_EVEN", "odd": "QR_ODD"}
RUNTIME_PARAMS = ("kappa", "mu", "epsilon")


# library bindings ---------------------------------------------------------------

_MATMUL = re.compile(r"^(\w+)=(\w+)\*(\w+)$")
_AXPBY = re.compile(r"^(\w+)=(\w+)\*(\w+)\+(\w+)\*(\w+)$")


@dataclass(frozen=True)
class LibraryBinding:
    """Maps a kernel shape onto an external whole-field routine.

    Two pattern shapes are understood: ``C = A * B`` (a site-local block
    matrix applied to every site) and ``Z = a * X + b * Y``.  `signature`
    lists the pattern's symbols in the callee's argument order; the extra
    role ``n`` passes the number of sites.
    """

    pattern: str
    callee: str
    signature: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "signature", tuple(self.signature))
        kind, roles = self.parsed()
        unknown = [r for r in self.signature if r not in roles and r != "n"]
        if unknown:
            raise ShapeMismatch(f"binding {self.callee}: signature names {unknown} do not "
                                f"occur in pattern {self.pattern!r}")
        if not re.fullmatch(r"[A-Za-z_]\w*", self.callee):
            raise QiralError(f"binding callee {self.callee!r} is not a C identifier")

    def parsed(self) -> tuple[str, dict[str, str]]:
        text = re.sub(r"\s+", "", self.pattern)
        if m := _AXPBY.match(text):
            out, a, x, b, y = m.groups()
            if out in (a, b):
                raise ShapeMismatch(f"pattern {self.pattern!r}: output used as a coefficient")
            return "axpby", {out: "out", a: "coef0", x: "in0", b: "coef1", y: "in1"}
        if m := _MATMUL.match(text):
            out, mat, src = m.groups()
            if mat in (out, src):
                raise ShapeMismatch(f"pattern {self.pattern!r}: matrix operand is also a vector")
            return "matmul", {out: "out", mat: "matrix", src: "in0"}
        raise QiralError(f"unsupported binding pattern {self.pattern!r}")

    def matches(self, k, lir: LoopIR) -> dict[str, object] | None:
        """Role -> operand description when `k` has this binding's shape."""
        kind, _ = self.parsed()
        local = {b.name for b in lir.locals}
        names = {n for n, _ in k.reads()} | set(k.writes()) if hasattr(k, "reads") else set()
        if names & local or len({lir.buffer(n).domain for n in names}) > 1:
            return None
        if kind == "matmul" and isinstance(k, HopKernel):
            if len(k.hops) != 1:
                return None
            leg = k.hops[0]
            if not leg.is_local or leg.link is not None or leg.parity is not None:
                return None
            return {"out": k.out, "matrix": leg.spins, "in0": k.src}
        if kind == "axpby" and isinstance(k, LinComb) and len(k.terms) == 2:
            (c0, x), (c1, y) = k.terms
            return {"out": k.out, "coef0": c0, "in0": x, "coef1": c1, "in1": y}
        return None

    def args(self, operands: dict[str, object]) -> tuple:
        _, roles = self.parsed()
        return tuple("n" if sym == "n" else (roles[sym], operands[roles[sym]])
                     for sym in self.signature)


def apply_bindings(lir: LoopIR, bindings) -> LoopIR:
    """Replace single-kernel loops matched by a binding with library calls."""
    bindings = list(bindings or ())
    if not bindings:
        return lir

    def visit(body):
        out = []
        for node in body:
            if isinstance(node, SeqWhile):
                node = replace(node, body=visit(node.body))
            elif isinstance(node, ParallelFor) and len(node.body) == 1:
                k = node.body[0]
                for b in bindings:
                    operands = b.matches(k, lir)
                    if operands is not None:
                        node = replace(node, body=(LibraryCall(b.callee, b.args(operands), k),))
                        break
            out.append(node)
        return tuple(out)

    return lir.with_body(visit(lir.body))


# scalar expressions ----------------------------------------------------------------


def _num(v: float) -> str:
    text = repr(float(v))
    if text in ("inf", "-inf", "nan"):
        raise QiralError(f"non-finite literal {text} in generated code")
    return text if any(ch in text for ch in ".e") else text + ".0"


def c_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return _num(z.real)
    return f"({_num(z.real)} + {_num(z.imag)} * I)"


def c_scalar(t: ir.Term) -> str:
    if isinstance(t, ir.ScalarLit):
        return c_complex(t.value)
    if isinstance(t, ir.SymScalar):
        return f"s_{t.name}"
    if isinstance(t, ir.ImaginaryUnit):
        return "I"
    if isinstance(t, ir.Add):
        return "(" + " + ".join(c_scalar(x) for x in t.terms) + ")"
    if isinstance(t, ir.Mul):
        return "(" + " * ".join(c_scalar(x) for x in t.terms) + ")"
    if isinstance(t, ir.ScalarMul):
        return f"({c_scalar(t.scalar)} * {c_scalar(t.a)})"
    if isinstance(t, ir.Sub):
        return f"({c_scalar(t.a)} - {c_scalar(t.b)})"
    if isinstance(t, ir.Neg):
        return f"(-{c_scalar(t.a)})"
    if isinstance(t, ir.Div):
        return f"({c_scalar(t.a)} / {c_scalar(t.b)})"
    if isinstance(t, ir.Inverse):
        return f"(1.0 / {c_scalar(t.a)})"
    if isinstance(t, (ir.Conj, ir.Dagger)):
        return f"conj({c_scalar(t.a)})"
    if isinstance(t, ir.Transpose):
        return c_scalar(t.a)
    raise QiralError(f"cannot emit scalar expression {type(t).__name__}")


def _scalar_names(t: ir.Term, acc: set) -> None:
    if isinstance(t, ir.SymScalar):
        acc.add(t.name)
        return
    for v in vars(t).values():
        if isinstance(v, ir.Term):
            _scalar_names(v, acc)
        elif isinstance(v, tuple):
            for x in v:
                if isinstance(x, ir.Term):
                    _scalar_names(x, acc)


# emitter -------------------------------------------------------------------------------


class _Writer:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def __call__(self, text: str = "") -> None:
        self.lines.append(("    " * self.depth + text) if text else "")

    def open(self, text: str) -> None:
        self(text + " {")
        self.depth += 1

    def block(self) -> None:
        self("{")
        self.depth += 1

    def close(self, tail: str = "") -> None:
        self.depth -= 1
        self("}" + tail)


class _Emitter:
    def __init__(self, lir: LoopIR, dims, bindings):
        self.lir = lir
        self.dims = check_dims(dims)
        self.bindings = {b.callee: b for b in bindings}
        self.locals = {b.name for b in lir.locals}
        self.spins: dict[Spin, int] = {}
        self.out = _Writer()
        self.loop_id = 0
        self.while_id = 0
        self.outer_loops = 0

    # naming ---------------------------------------------------------------------

    def buf(self, name: str) -> str:
        return f"l_{name}" if name in self.locals else f"v_{name}"

    def spin_table(self, m: Spin) -> str:
        if m not in self.spins:
            self.spins[m] = len(self.spins)
        return f"qr_spin_{self.spins[m]}"

    def at(self, name: str, site: str, loop: ParallelFor, offset=(0, 0, 0, 0)) -> str:
        """Pointer to the 12-entry block of `name` for the site displaced from s."""
        if name in self.locals:
            if any(offset):
                raise QiralError(f"local {name} read at a neighbouring site")
            return self.buf(name)
        dom = self.lir.buffer(name).domain
        if not any(offset) and dom == loop.domain:
            return f"{self.buf(name)} + 12 * i"
        g = site if not any(offset) else self.neighbour(site, offset)
        if dom == "L":
            return f"{self.buf(name)} + 12 * {g}"
        return f"{self.buf(name)} + 12 * geo->local[{DOMAIN_C[dom]}][{g}]"

    @staticmethod
    def neighbour(site: str, offset) -> str:
        nz = [(a, v) for a, v in enumerate(offset) if v]
        if len(nz) != 1 or abs(nz[0][1]) != 1:
            raise QiralError(f"offset {offset} is not a nearest-neighbour step")
        axis, v = nz[0]
        return f"geo->nbr[{2 * axis + (v < 0)}][{site}]"

    # top level --------------------------------------------------------------------

    def source(self) -> str:
        body = _Writer()
        self.out = body
        body.depth = 1
        self.nodes(self.lir.body)
        return self.assemble(body.lines)

    def assemble(self, body_lines) -> str:
        lir = self.lir
        w = _Writer()
        w("/* Generated by qiralc. Do not edit. */")
        w("#include <math.h>")
        w("#include <stdio.h>")
        w("#include <stdlib.h>")
        w("#include <string.h>")
        w("")
        w('#include "qiral_runtime.h"')
        w("")
        for k, v in zip("XYZT", self.dims):
            w(f"#define QR_L{k} {v}")
        w("")
        inputs = [b for b in lir.buffers if b.role == "input"]
        if lir.result is None:
            raise QiralError("program has no result vector")
        result_dom = lir.buffer(lir.result).domain
        w(f"const int qiral_num_inputs = {len(inputs)};")
        doms = ", ".join(DOMAIN_C[b.domain] for b in inputs) or "0"
        w(f"const int qiral_input_domains[] = {{{doms}}};")
        w(f"const int qiral_result_domain = {DOMAIN_C[result_dom]};")
        w(f"const int qiral_outer_loops = {max(self.outer_loops, 1)};")
        w("")
        for m, n in self.spins.items():
            vals = ", ".join(c_complex(v) for v in m.entries)
            w(f"static const qr_complex qr_spin_{n}[16] = {{{vals}}};")
        if self.spins:
            w("")
        w("int qiral_solve(const qr_geometry *geo, const qr_complex *links,")
        w("                const qr_complex *const *in, qr_complex *result, qr_params p,")
        w("                double *trace, long *iterations)")
        w("{")
        w.depth = 1
        w("if (geo->dims[0] != QR_LX || geo->dims[1] != QR_LY || geo->dims[2] != QR_LZ"
          " || geo->dims[3] != QR_LT) {")
        w('    fprintf(stderr, "gauge field does not match the compiled lattice\\n");')
        w("    return 3;")
        w("}")
        w("int rc = 0;")
        w("*iterations = 0;")
        for name in self.scalars():
            init = f"p.{name}" if name in RUNTIME_PARAMS else "0"
            w(f"qr_complex s_{name} = {init};")
        w("qr_complex *part = malloc(geo->volume * sizeof(qr_complex));")
        temps = []
        for k, b in enumerate(inputs):
            w(f"const qr_complex *v_{b.name} = in[{k}];")
        for b in lir.buffers:
            if b.role == "input":
                continue
            count = f"geo->count[{DOMAIN_C[b.domain]}]"
            if b.name == lir.result:
                w(f"qr_complex *v_{b.name} = result;")
                w(f"memset(result, 0, 12 * {count} * sizeof(qr_complex));")
            else:
                w(f"qr_complex *v_{b.name} = qr_alloc_field({count});")
                temps.append(b.name)
        w("")
        w.lines += body_lines
        w("")
        w("done:")
        for name in temps:
            w(f"free(v_{name});")
        w("free(part);")
        w("return rc;")
        w.depth = 0
        w("}")
        return "\n".join(w.lines) + "\n"

    def scalars(self) -> list[str]:
        names = set(self.lir.scalar_inputs)
        for name in self.lir.scalar_inputs:
            if name not in RUNTIME_PARAMS:
                raise QiralError(f"scalar input {name} has no runtime parameter; "
                                 f"the runtime supplies {', '.join(RUNTIME_PARAMS)}")

        def visit(body):
            for node in body:
                if isinstance(node, (ScalarAssign, Reduction)):
                    names.add(node.target)
                if isinstance(node, ScalarAssign):
                    _scalar_names(node.expr, names)
                elif isinstance(node, SeqWhile):
                    _scalar_names(node.cond.lhs, names)
                    _scalar_names(node.cond.rhs, names)
                    visit(node.body)
                elif isinstance(node, ParallelFor):
                    for k in node.body:
                        k = k.kernel if isinstance(k, LibraryCall) else k
                        if isinstance(k, HopKernel):
                            for leg in k.hops:
                                for c, _ in leg.spins:
                                    _scalar_names(c, names)
                        elif isinstance(k, LinComb):
                            for c, _ in k.terms:
                                _scalar_names(c, names)

        visit(self.lir.body)
        return sorted(names)

    # statements -----------------------------------------------------------------------

    def nodes(self, body, depth: int = 0) -> None:
        for node in body:
            if isinstance(node, ParallelFor):
                self.parallel(node)
            elif isinstance(node, Reduction):
                self.reduction(node)
            elif isinstance(node, ScalarAssign):
                self.out(f"s_{node.target} = {c_scalar(node.expr)};")
            elif isinstance(node, SeqWhile):
                self.loop(node, depth)
            else:
                raise UnboundKernel(f"no C translation for {type(node).__name__}")

    def cond(self, node: SeqWhile, n: int) -> None:
        o = self.out
        o(f"w{n} = creal({c_scalar(node.cond.lhs)});")
        o(f"r{n} = creal({c_scalar(node.cond.rhs)});")
        o.open(f"if (!isfinite(w{n}) || !isfinite(r{n}))")
        o('fprintf(stderr, "loop condition is not finite\\n");')
        o("rc = 3;")
        o("goto done;")
        o.close()
        o(f"go{n} = w{n} {node.cond.op} r{n};")

    def loop(self, node: SeqWhile, depth: int) -> None:
        o = self.out
        n = self.while_id
        self.while_id += 1
        if depth == 0:
            self.outer_loops += 1
        o.block()
        o(f"long n{n} = 0;")
        o(f"double w{n}, r{n};")
        o(f"int go{n};")
        self.cond(node, n)
        o.open(f"while (go{n})")
        o.open(f"if (n{n} >= p.max_iter)")
        o("rc = 2;")
        o("break;")
        o.close()
        self.nodes(node.body, depth + 1)
        o(f"n{n}++;")
        self.cond(node, n)
        if depth == 0:
            o(f"trace[(*iterations)++] = w{n};")
        o.close()
        o.close()

    def reduction(self, node: Reduction) -> None:
        o = self.out
        count = f"geo->count[{DOMAIN_C[node.domain]}]"
        o("#pragma omp parallel for")
        o(f"for (long i = 0; i < {count}; i++)")
        o(f"    part[i] = qr_dot12({self.buf(node.a)} + 12 * i, {self.buf(node.b)} + 12 * i);")
        o(f"s_{node.target} = qr_ordered_sum(part, {count});")

    # parallel loops ---------------------------------------------------------------------

    def parallel(self, loop: ParallelFor) -> None:
        o = self.out
        lid = self.loop_id
        self.loop_id += 1
        dom = DOMAIN_C[loop.domain]
        calls = [k for k in loop.body if isinstance(k, LibraryCall)]
        if calls:
            if len(loop.body) != 1:
                raise UnboundKernel("a library call must be the only kernel of its loop")
            self.library_call(calls[0], loop, lid)
            return
        o.block()
        private = [self.buf(p) if p in self.locals else p for p in loop.private]
        for name in private:
            o(f"qr_complex {name}[12];")
        setup = []
        for kid, k in enumerate(loop.body):
            self.prepare(k, lid, kid, setup)
        for line in setup:
            o(line)
        clause = f" private({', '.join(private)})" if private else ""
        if loop.layout == "nested":
            o(f"#pragma omp parallel for collapse(4){clause}")
            o("for (int t = 0; t < QR_LT; t++)")
            o("for (int z = 0; z < QR_LZ; z++)")
            o("for (int y = 0; y < QR_LY; y++)")
            o.open("for (int x = 0; x < QR_LX; x++)")
            o("const long s = x + (long)QR_LX * (y + (long)QR_LY * (z + (long)QR_LZ * t));")
            if loop.domain != "L":
                o(f"if (geo->parity[s] != {0 if loop.domain == 'even' else 1})")
                o("    continue;")
            o(f"const long i = geo->local[{dom}][s];")
        else:
            o(f"#pragma omp parallel for{clause}")
            o.open(f"for (long i = 0; i < geo->count[{dom}]; i++)")
            o(f"const long s = geo->sites[{dom}][i];")
        for kid, k in enumerate(loop.body):
            self.kernel(k, loop, lid, kid)
        o.close()
        o.close()

    def prepare(self, k, lid: int, kid: int, setup: list) -> None:
        """Host-side coefficient setup emitted before the loop."""
        if isinstance(k, HopKernel):
            for h, leg in enumerate(k.hops):
                name = f"sp{lid}_{kid}_{h}"
                setup.append(f"qr_complex {name}[16];")
                setup.append(f"qr_spin_clear({name});")
                for c, m in leg.spins:
                    setup.append(f"qr_spin_axpy({name}, {c_scalar(c)}, {self.spin_table(m)});")
        elif isinstance(k, LinComb):
            for j, (c, _) in enumerate(k.terms):
                setup.append(f"const qr_complex c{lid}_{kid}_{j} = {c_scalar(c)};")
        else:
            raise UnboundKernel(f"no C translation for kernel {type(k).__name__}")

    def kernel(self, k, loop: ParallelFor, lid: int, kid: int) -> None:
        o = self.out
        if isinstance(k, LinComb):
            dst = self.at(k.out, "s", loop)
            if not k.terms:
                o(f"qr_zero12({dst});")
                return
            o.block()
            o(f"qr_complex *dst = {dst};")
            srcs = []
            for j, (_, name) in enumerate(k.terms):
                o(f"const qr_complex *in{j} = {self.at(name, 's', loop)};")
                srcs.append(f"c{lid}_{kid}_{j} * in{j}[e]")
            o("for (int e = 0; e < 12; e++)")
            o(f"    dst[e] = {' + '.join(srcs)};")
            o.close()
            return
        if not isinstance(k, HopKernel):
            raise UnboundKernel(f"no C translation for kernel {type(k).__name__}")
        psi, chi, acc = f"psi{kid}", f"chi{kid}", f"acc{kid}"
        o(f"qr_zero12({acc});")
        for h, leg in enumerate(k.hops):
            guard = None
            if leg.parity is not None:
                guard = f"geo->parity[s] == {0 if leg.parity == 'even' else 1}"
                o.open(f"if ({guard})")
            o(f"qr_copy12({psi}, {self.at(k.src, 's', loop, leg.offset)});")
            o(f"qr_spin_mul({chi}, sp{lid}_{kid}_{h}, {psi});")
            if leg.link is None:
                o(f"qr_acc12({acc}, {chi});")
            else:
                ls = "s" if not any(leg.link.rel) else self.neighbour("s", leg.link.rel)
                o(f"qr_link_acc({acc}, links + 9 * ({ls} * 4 + {leg.link.axis}), "
                  f"{int(leg.link.dagger)}, {chi});")
            if guard:
                o.close()
        o(f"qr_copy12({self.at(k.out, 's', loop)}, {acc});")

    def library_call(self, call: LibraryCall, loop: ParallelFor, lid: int) -> None:
        o = self.out
        binding = self.bindings.get(call.callee)
        if binding is None:
            raise UnboundKernel(f"no binding installed for library routine {call.callee}")
        o.block()
        args = []
        for arg in call.args:
            if arg == "n":
                args.append(f"geo->count[{DOMAIN_C[loop.domain]}]")
                continue
            role, value = arg
            if role == "matrix":
                o(f"qr_complex sp{lid}[16], blk{lid}[144];")
                o(f"qr_spin_clear(sp{lid});")
                for c, m in value:
                    o(f"qr_spin_axpy(sp{lid}, {c_scalar(c)}, {self.spin_table(m)});")
                o(f"qr_spin_block(blk{lid}, sp{lid});")
                args.append(f"blk{lid}")
            elif role.startswith("coef"):
                args.append(c_scalar(value))
            else:
                args.append(self.buf(value))
        o(f"{call.callee}({', '.join(args)});")
        o.close()


def emit(lir: LoopIR, dims, bindings=()) -> str:
    """C source for `lir` on a lattice with extents `dims`."""
    bindings = tuple(bindings or ())
    lir = apply_bindings(lir, bindings)
    return _Emitter(lir, dims, bindings).source()


def runtime_files() -> dict[str, str]:
    """Runtime sources shipped with the package, by file name."""
    from importlib import resources

    base = resources.files("qiral.backend") / "runtime"
    return {name: (base / name).read_text(encoding="utf-8")
            for name in ("qiral_runtime.h", "qiral_runtime.c", "qiral_main.c")}


__all__ = ["LibraryBinding", "apply_bindings", "c_scalar", "emit", "runtime_files"]

"""Indented text rendering of LoopIR (the `--dump-ir` format)."""

from __future__ import annotations

from ..frontend.printer import format_term
from .loopir import (HopKernel, LibraryCall, LinComb, LoopIR, ParallelFor, Reduction,
                     ScalarAssign, ScalarWrite, SeqWhile)

_AXES = "xyzt"


def _off(off) -> str:
    parts = [f"{'+' if v > 0 else '-'}{_AXES[i]}" for i, v in enumerate(off) if v]
    return "".join(parts) or "0"


def _spin(m) -> str:
    rows = []
    for r in m.matrix:
        rows.append(" ".join(_num(v) for v in r))
    return "[" + "; ".join(rows) + "]"


def _num(v: complex) -> str:
    if v.imag == 0:
        return f"{v.real:g}"
    if v.real == 0:
        return f"{v.imag:g}i"
    return f"({v.real:g}{v.imag:+g}i)"


def _arg(a) -> str:
    if isinstance(a, str):
        return a
    role, value = a
    if isinstance(value, str):
        return value
    if role == "matrix":
        return "<site block>"
    return format_term(value)


def _kernel(k, pad: str) -> list[str]:
    if isinstance(k, LibraryCall):
        return [f"{pad}call {k.callee}({', '.join(_arg(a) for a in k.args)})"]
    if isinstance(k, LinComb):
        if not k.terms:
            return [f"{pad}{k.out}[s] = 0"]
        rhs = " + ".join(f"({format_term(c)}) * {b}[s]" for c, b in k.terms)
        return [f"{pad}{k.out}[s] = {rhs}"]
    if isinstance(k, HopKernel):
        lines = [f"{pad}{k.out}[s] = hop {k.src}"]
        for h in k.hops:
            link = "1"
            if h.link is not None:
                link = f"U{_AXES[h.link.axis]}{'^dag' if h.link.dagger else ''}[s{_off(h.link.rel)}]"
                link = link.replace("[s0]", "[s]")
            par = f" if {h.parity}(s)" if h.parity else ""
            lines.append(f"{pad}  leg {k.src}[s{_off(h.offset)}] link {link}{par}".replace("[s0]", "[s]"))
            for c, m in h.spins:
                lines.append(f"{pad}    ({format_term(c)}) {_spin(m)}")
        return lines
    if isinstance(k, ScalarWrite):
        return [f"{pad}{k.target} = {format_term(k.expr)}  # scalar write"]
    raise TypeError(type(k).__name__)


def _nodes(body, depth: int) -> list[str]:
    pad = "  " * depth
    out = []
    for node in body:
        if isinstance(node, ParallelFor):
            priv = f" private({', '.join(node.private)})" if node.private else ""
            out.append(f"{pad}parallel for s in {node.domain} [{node.layout}]{priv}")
            for k in node.body:
                out += _kernel(k, pad + "  ")
        elif isinstance(node, Reduction):
            out.append(f"{pad}{node.target} = reduce sum s in {node.domain}: "
                       f"<{node.a}[s] | {node.b}[s]>")
        elif isinstance(node, ScalarAssign):
            out.append(f"{pad}{node.target} = {format_term(node.expr)}")
        elif isinstance(node, SeqWhile):
            c = node.cond
            out.append(f"{pad}while ({format_term(c.lhs)} {c.op} {format_term(c.rhs)})")
            out += _nodes(node.body, depth + 1)
        else:
            raise TypeError(type(node).__name__)
    return out


def dump_ir(lir: LoopIR) -> str:
    lines = [f"loopir layout={lir.layout} result={lir.result}"]
    for b in lir.buffers:
        lines.append(f"buffer {b.name} : {b.domain} x {b.block} ({b.role})")
    for b in lir.locals:
        lines.append(f"local {b.name} : {b.domain} x {b.block}")
    if lir.scalar_inputs:
        lines.append(f"scalars {', '.join(lir.scalar_inputs)}")
    lines += _nodes(lir.body, 0)
    return "\n".join(lines) + "\n"

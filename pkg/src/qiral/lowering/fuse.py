"""Loop fusion and demotion of single-loop temporaries to per-iteration locals."""

from __future__ import annotations

from collections import Counter
from dataclasses import replace

from .loopir import LoopIR, ParallelFor, Reduction, SeqWhile, walk_nodes

ORIGIN = (0, 0, 0, 0)


def _reads(loop: ParallelFor) -> set:
    out = set()
    for k in loop.body:
        out |= k.reads()
    return out


def _writes(loop: ParallelFor) -> set:
    out = set()
    for k in loop.body:
        out |= k.writes()
    return out


def can_fuse(a: ParallelFor, b: ParallelFor) -> bool:
    """Exact test on the stencil offsets: only same-site dependences are allowed."""
    if a.domain != b.domain or a.layout != b.layout:
        return False
    wa, wb = _writes(a), _writes(b)
    for name, off in _reads(b):
        if name in wa and off != ORIGIN:
            return False
    for name, off in _reads(a):
        if name in wb and off != ORIGIN:
            return False
    return True


def fuse_loops(body) -> tuple:
    out: list = []
    for node in body:
        if isinstance(node, SeqWhile):
            node = replace(node, body=fuse_loops(node.body))
        if out and isinstance(node, ParallelFor) and isinstance(out[-1], ParallelFor) \
                and can_fuse(out[-1], node):
            prev = out.pop()
            node = replace(prev, body=prev.body + node.body)
        out.append(node)
    return tuple(out)


def _uses(body) -> Counter:
    """How many loop nodes mention each buffer (reads or writes)."""
    c: Counter = Counter()
    for node in walk_nodes(body):
        names = set()
        if isinstance(node, ParallelFor):
            for k in node.body:
                names |= {n for n, _ in k.reads()} | k.writes()
        elif isinstance(node, Reduction):
            names = {node.a, node.b}
        for n in names:
            c[n] += 1
    return c


def _demotable(loop: ParallelFor, temps: set, uses: Counter) -> set:
    written = _writes(loop)
    out = set()
    for name in written & temps:
        if uses[name] != 1:
            continue
        offs = {off for n, off in _reads(loop) if n == name}
        if offs <= {ORIGIN}:
            # must be written before it is read within the iteration
            first_w = next(i for i, k in enumerate(loop.body) if name in k.writes())
            first_r = next((i for i, k in enumerate(loop.body)
                            if any(n == name for n, _ in k.reads())), None)
            if first_r is None or first_r > first_w:
                out.add(name)
    return out


def promote(lir: LoopIR) -> LoopIR:
    temps = {b.name for b in lir.buffers if b.role == "temp"}
    uses = _uses(lir.body)
    demoted: set = set()

    def visit(body):
        res = []
        for node in body:
            if isinstance(node, SeqWhile):
                node = replace(node, body=visit(node.body))
            elif isinstance(node, ParallelFor):
                local = _demotable(node, temps, uses)
                demoted.update(local)
                node = replace(node, private=tuple(sorted(set(node.private) | local)))
            res.append(node)
        return tuple(res)

    body = visit(lir.body)
    keep = tuple(b for b in lir.buffers if b.name not in demoted)
    locals_ = tuple(replace(b, role="local") for b in lir.buffers if b.name in demoted)
    return replace(lir, buffers=keep, body=body, locals=lir.locals + locals_)


def fuse_and_promote(lir: LoopIR) -> LoopIR:
    return promote(replace(lir, body=fuse_loops(lir.body)))

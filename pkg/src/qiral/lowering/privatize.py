"""Private-variable sets for parallel loops, plus the race check."""

from __future__ import annotations

from dataclasses import replace

from ..errors import RaceDetected
from .loopir import HopKernel, LibraryCall, LoopIR, ParallelFor, ScalarWrite, SeqWhile


def gather_temps(loop: ParallelFor) -> list[str]:
    """Per-iteration spinor temporaries used by the hop kernels of a loop."""
    out = []
    for i, k in enumerate(loop.body):
        k = k.kernel if isinstance(k, LibraryCall) else k
        if isinstance(k, HopKernel):
            out += [f"psi{i}", f"chi{i}", f"acc{i}"]
    return out


def privatize(lir: LoopIR) -> LoopIR:
    shared = {b.name for b in lir.buffers}

    def visit(body):
        res = []
        for node in body:
            if isinstance(node, SeqWhile):
                node = replace(node, body=visit(node.body))
            elif isinstance(node, ParallelFor):
                for k in node.body:
                    if isinstance(k, ScalarWrite):
                        raise RaceDetected(
                            f"scalar {k.target} written inside a parallel loop over "
                            f"{node.domain} without a reduction")
                private = set(node.private) | set(gather_temps(node))
                bad = private & shared
                if bad:
                    raise RaceDetected(f"shared buffers listed private: {sorted(bad)}")
                node = replace(node, private=tuple(sorted(private)))
            res.append(node)
        return tuple(res)

    return replace(lir, body=visit(lir.body))

"""Lowering from statement programs to parallel LoopIR."""

from .dump import dump_ir
from .fuse import can_fuse, fuse_and_promote, fuse_loops, promote
from .loopir import (Buffer, Hop, HopKernel, LibraryCall, LinComb, LinkRef, LoopIR,
                     ParallelFor, Reduction, ScalarAssign, ScalarWrite, SeqWhile, Spin,
                     kernels, walk_nodes)
from .lower import LAYOUTS, lower
from .privatize import privatize


def compile_program(program, layout: str = "linear", defs=None, result=None,
                    optimize: bool = True) -> LoopIR:
    """lower, then fuse/promote and privatize."""
    lir = lower(program, layout, defs, result)
    if optimize:
        lir = fuse_and_promote(lir)
    return privatize(lir)


__all__ = ["Buffer", "Hop", "HopKernel", "LAYOUTS", "LibraryCall", "LinComb", "LinkRef",
           "LoopIR", "ParallelFor", "Reduction", "ScalarAssign", "ScalarWrite", "SeqWhile",
           "Spin", "can_fuse", "compile_program", "dump_ir", "fuse_and_promote", "fuse_loops",
           "kernels", "lower", "privatize", "promote", "walk_nodes"]

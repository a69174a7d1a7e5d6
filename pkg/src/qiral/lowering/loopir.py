"""Loop-level IR: parallel site loops plus host-side scalar code."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import ir

DOMAINS = ("L", "even", "odd")
BLOCK = 12  # complex numbers per site: colour-major, spin fastest


@dataclass(frozen=True)
class Buffer:
    name: str
    domain: str
    block: int = BLOCK
    role: str = "temp"  # input | output | state | temp

    def sites(self, dims) -> int:
        vol = int(np.prod(dims))
        return vol if self.domain == "L" else vol // 2


@dataclass(frozen=True)
class LinkRef:
    """Gauge link U(axis) fetched at site s + rel, optionally daggered."""

    axis: int
    dagger: bool
    rel: tuple[int, int, int, int]


@dataclass(frozen=True)
class Spin:
    """Hashable 4x4 complex spin matrix."""

    entries: tuple[complex, ...]

    @classmethod
    def of(cls, m) -> Spin:
        return cls(tuple(complex(v) for v in np.asarray(m, dtype=complex).ravel()))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries, dtype=complex).reshape(4, 4)


@dataclass(frozen=True)
class Hop:
    """One stencil leg: coefficient-weighted spin matrices times an optional link.

    Reads the source at site s + offset and only contributes where the output
    site has the required parity (None means every site).
    """

    offset: tuple[int, int, int, int]
    link: LinkRef | None
    parity: str | None
    spins: tuple[tuple[ir.Term, Spin], ...]

    @property
    def is_local(self) -> bool:
        return not any(self.offset)


# kernels ------------------------------------------------------------------


@dataclass(frozen=True)
class HopKernel:
    """out[s] = sum over legs of (U (x) spin) src[s + offset]."""

    out: str
    src: str
    hops: tuple[Hop, ...]

    def reads(self):
        return {(self.src, h.offset) for h in self.hops}

    def writes(self):
        return {self.out}


@dataclass(frozen=True)
class LinComb:
    """out[s] = sum_k coef_k * in_k[s]; no terms means zero-fill."""

    out: str
    terms: tuple[tuple[ir.Term, str], ...]

    def reads(self):
        return {(name, (0, 0, 0, 0)) for _, name in self.terms}

    def writes(self):
        return {self.out}


@dataclass(frozen=True)
class LibraryCall:
    """A kernel replaced by a call bound through the backend's binding rules."""

    callee: str
    args: tuple[str, ...]
    kernel: object

    def reads(self):
        return self.kernel.reads()

    def writes(self):
        return self.kernel.writes()


Kernel = HopKernel | LinComb | LibraryCall


# loop nodes -----------------------------------------------------------------


@dataclass(frozen=True)
class ParallelFor:
    domain: str
    body: tuple[Kernel, ...]
    private: tuple[str, ...] = ()
    var: str = "s"
    layout: str = "linear"


@dataclass(frozen=True)
class Reduction:
    """target = sum over sites of <a[s] | b[s]>, combined in ascending site order."""

    target: str
    a: str
    b: str
    domain: str
    var: str = "s"


@dataclass(frozen=True)
class ScalarAssign:
    target: str
    expr: ir.Term


@dataclass(frozen=True)
class ScalarWrite:
    """A scalar updated inside a parallel loop; only built by tests and by bugs."""

    target: str
    expr: ir.Term

    def reads(self):
        return set()

    def writes(self):
        return {self.target}


@dataclass(frozen=True)
class SeqWhile:
    cond: ir.Compare
    body: tuple
    outer: bool = True


LoopNode = ParallelFor | Reduction | ScalarAssign | SeqWhile


@dataclass(frozen=True)
class LoopIR:
    buffers: tuple[Buffer, ...]
    body: tuple
    scalar_inputs: tuple[str, ...] = ()
    result: str | None = None
    layout: str = "linear"
    locals: tuple[Buffer, ...] = field(default=())

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.buffers if b.role == "input")

    def buffer(self, name: str) -> Buffer:
        for b in (*self.buffers, *self.locals):
            if b.name == name:
                return b
        raise KeyError(name)

    def with_body(self, body, **changes) -> LoopIR:
        return replace(self, body=tuple(body), **changes)


def walk_nodes(body):
    """Every loop node, depth first, including those nested in while loops."""
    for node in body:
        yield node
        if isinstance(node, SeqWhile):
            yield from walk_nodes(node.body)


def kernels(body):
    for node in walk_nodes(body):
        if isinstance(node, ParallelFor):
            yield from node.body

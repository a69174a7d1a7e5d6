"""Reference interpreter for LoopIR."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import ir
from ..errors import NonFiniteValue, QiralError
from ..lowering.loopir import (HopKernel, LibraryCall, LinComb, LoopIR, ParallelFor, Reduction,
                               ScalarAssign, ScalarWrite, SeqWhile)
from .gauge import GaugeConfig
from .geometry import geometry
from .kernels import Kernels


@dataclass(frozen=True)
class RunParams:
    kappa: float = 0.15
    mu: float = 0.1
    epsilon: float = 1e-16
    max_iter: int = 3072
    seed: int = 42

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def scalars(self) -> dict[str, complex]:
        return {"kappa": self.kappa, "mu": self.mu, "epsilon": self.epsilon}


@dataclass
class RunResult:
    x: np.ndarray | None
    trace: list[tuple[int, float]]
    iterations: int
    max_iter_exceeded: bool
    counters: dict[str, int]
    buffers: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    scalars: dict[str, complex] = field(repr=False, default_factory=dict)


class MaxIterExceeded(QiralError):
    """Raised only on request; by default the run result carries a flag instead."""


def eval_scalar(t: ir.Term, env: dict[str, complex]) -> complex:
    if isinstance(t, ir.ScalarLit):
        return complex(t.value)
    if isinstance(t, ir.SymScalar):
        try:
            return complex(env[t.name])
        except KeyError:
            raise QiralError(f"scalar {t.name} has no value") from None
    if isinstance(t, ir.ImaginaryUnit):
        return 1j
    if isinstance(t, ir.Add):
        return sum((eval_scalar(x, env) for x in t.terms), 0j)
    if isinstance(t, ir.Mul):
        out = 1 + 0j
        for x in t.terms:
            out *= eval_scalar(x, env)
        return out
    if isinstance(t, ir.ScalarMul):
        return eval_scalar(t.scalar, env) * eval_scalar(t.a, env)
    if isinstance(t, ir.Sub):
        return eval_scalar(t.a, env) - eval_scalar(t.b, env)
    if isinstance(t, ir.Neg):
        return -eval_scalar(t.a, env)
    if isinstance(t, ir.Div):
        return eval_scalar(t.a, env) / eval_scalar(t.b, env)
    if isinstance(t, ir.Inverse):
        return 1 / eval_scalar(t.a, env)
    if isinstance(t, (ir.Conj, ir.Dagger)):
        return eval_scalar(t.a, env).conjugate()
    if isinstance(t, ir.Transpose):
        return eval_scalar(t.a, env)
    raise QiralError(f"not a host scalar expression: {type(t).__name__}")


def _domain_sites(geo, domain: str, layout: str) -> np.ndarray:
    if layout == "linear":
        return geo.sites[domain]
    # nested: walk t, z, y, x explicitly; yields the same x-fastest order
    lx, ly, lz, lt = geo.dims
    want = {"even": 0, "odd": 1}.get(domain)
    out = [x + lx * (y + ly * (z + lz * t))
           for t in range(lt) for z in range(lz) for y in range(ly) for x in range(lx)
           if want is None or (x + y + z + t) % 2 == want]
    return np.asarray(out, dtype=np.int64)


@dataclass
class _HopPlan:
    idx: np.ndarray
    lsite: np.ndarray
    laxis: np.ndarray
    ldag: np.ndarray
    neighbour_legs: int


class Machine:
    """Executes one LoopIR against a gauge configuration.

    `privatize=False` is a test hook: kernel-local temporaries are then shared
    between workers, which breaks results as soon as more than one worker runs.
    """

    def __init__(self, lir: LoopIR, config: GaugeConfig, threads: int = 1,
                 kernels: Kernels | None = None, privatize: bool = True):
        if threads < 1:
            raise ValueError("threads must be positive")
        self.lir = lir
        self.config = config
        self.geo = geometry(config.dims)
        self.links = np.ascontiguousarray(config.links, dtype=np.complex128)
        self.threads = threads
        self.k = kernels or Kernels()
        self.privatize = privatize
        self._plans: dict[int, _HopPlan] = {}
        self._sites: dict[tuple[str, str], np.ndarray] = {}
        self.counters = {"hop_kernels": 0, "hop_sites": 0, "neighbour_blocks": 0,
                         "lincomb_kernels": 0, "reductions": 0, "outer_iterations": 0}

    # setup -------------------------------------------------------------------

    def sites(self, domain: str, layout: str = "linear") -> np.ndarray:
        key = (domain, layout)
        if key not in self._sites:
            self._sites[key] = _domain_sites(self.geo, domain, layout)
        return self._sites[key]

    def plan(self, k: HopKernel, domain: str, layout: str) -> _HopPlan:
        key = id(k)
        if key in self._plans:
            return self._plans[key]
        out_sites = self.sites(domain, layout)
        in_dom = self.lir.buffer(k.src).domain
        legs = len(k.hops)
        idx = np.empty((legs, len(out_sites)), dtype=np.int64)
        lsite = np.zeros((legs, len(out_sites)), dtype=np.int64)
        laxis = np.full(legs, -1, dtype=np.int64)
        ldag = np.zeros(legs, dtype=np.bool_)
        for h, leg in enumerate(k.hops):
            j = self.geo.local[in_dom][self.geo.displaced(leg.offset)[out_sites]]
            if leg.parity is not None:
                want = 0 if leg.parity == "even" else 1
                j = np.where(self.geo.parity[out_sites] == want, j, -1)
            idx[h] = j
            if leg.link is not None:
                laxis[h] = leg.link.axis
                ldag[h] = leg.link.dagger
                lsite[h] = self.geo.displaced(leg.link.rel)[out_sites]
        plan = _HopPlan(idx, lsite, laxis, ldag, sum(1 for leg in k.hops if not leg.is_local))
        self._plans[key] = plan
        return plan

    # running -----------------------------------------------------------------

    def run(self, inputs: dict[str, np.ndarray], scalars: dict[str, complex],
            max_iter: int) -> RunResult:
        self.scalars = dict(scalars)
        self.bufs: dict[str, np.ndarray] = {}
        for b in self.lir.buffers:
            n = b.sites(self.config.dims)
            if b.role == "input":
                if b.name not in inputs:
                    raise QiralError(f"no value supplied for input vector {b.name}")
                v = np.asarray(inputs[b.name], dtype=np.complex128)
                if v.size != n * b.block:
                    raise QiralError(f"input {b.name} has {v.size} entries, expected "
                                     f"{n * b.block}")
                self.bufs[b.name] = v.reshape(n, b.block).copy()
            else:
                self.bufs[b.name] = np.zeros((n, b.block), dtype=np.complex128)
        self.trace: list[tuple[int, float]] = []
        self.iterations = 0
        self.exceeded = False
        self.max_iter = max_iter
        self.pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        try:
            self._body(self.lir.body, depth=0)
        finally:
            if self.pool is not None:
                self.pool.shutdown()
        x = None
        if self.lir.result is not None:
            x = self.bufs[self.lir.result].ravel().copy()
            if not np.all(np.isfinite(x)):
                raise NonFiniteValue(f"result {self.lir.result} contains NaN or Inf")
        return RunResult(x, self.trace, self.iterations, self.exceeded, dict(self.counters),
                         self.bufs, self.scalars)

    def _body(self, body, depth: int) -> None:
        for node in body:
            if isinstance(node, ParallelFor):
                self._parallel(node)
            elif isinstance(node, Reduction):
                self._reduce(node)
            elif isinstance(node, ScalarAssign):
                self.scalars[node.target] = eval_scalar(node.expr, self.scalars)
            elif isinstance(node, SeqWhile):
                self._while(node, depth)
            else:
                raise QiralError(f"unknown loop node {type(node).__name__}")

    def _cond(self, c: ir.Compare) -> tuple[bool, float]:
        a = eval_scalar(c.lhs, self.scalars)
        b = eval_scalar(c.rhs, self.scalars)
        if not (math.isfinite(a.real) and math.isfinite(b.real)):
            raise NonFiniteValue(f"loop condition is not finite ({a}, {b})")
        return (a.real > b.real if c.op == ">" else a.real < b.real), a.real

    def _while(self, node: SeqWhile, depth: int) -> None:
        go, value = self._cond(node.cond)
        n = 0
        while go:
            if n >= self.max_iter:
                self.exceeded = True
                break
            self._body(node.body, depth + 1)
            n += 1
            go, value = self._cond(node.cond)
            if depth == 0:
                self.trace.append((self.iterations + n, value))
        if depth == 0:
            self.iterations += n
            self.counters["outer_iterations"] += n

    def _chunks(self, n: int) -> list[tuple[int, int]]:
        w = min(self.threads, max(n, 1))
        bounds = [n * i // w for i in range(w + 1)]
        return [(bounds[i], bounds[i + 1]) for i in range(w)]

    def _parallel(self, loop: ParallelFor) -> None:
        n = len(self.sites(loop.domain, loop.layout))
        chunks = self._chunks(n)
        local_names = [b for b in loop.private if self._is_local(b)]
        if self.privatize:
            scratch = [{name: np.zeros((hi - lo, 12), dtype=np.complex128)
                        for name in local_names} for lo, hi in chunks]
        else:
            width = max(hi - lo for lo, hi in chunks)
            shared = {name: np.zeros((width, 12), dtype=np.complex128) for name in local_names}
            scratch = [shared] * len(chunks)
        for k in loop.body:
            self._count(k, loop, n)
            tasks = [(k, loop, lo, hi, scratch[w]) for w, (lo, hi) in enumerate(chunks)]
            if not self.privatize and len(chunks) > 1 and self._accumulates(k):
                self._shared_accumulator(k, loop, chunks, scratch)
            elif self.pool is None or not self.privatize:
                # the unprivatised hook runs workers in a fixed order so the
                # corruption it causes is reproducible
                for t in tasks:
                    self._kernel(*t)
            else:
                list(self.pool.map(lambda t: self._kernel(*t), tasks))

    @staticmethod
    def _accumulates(k) -> bool:
        k = k.kernel if isinstance(k, LibraryCall) else k
        return isinstance(k, HopKernel)

    def _shared_accumulator(self, k, loop, chunks, scratch) -> None:
        """Hook mode: every worker accumulates into one shared spinor scratch.

        All workers finish their accumulation phase before any of them stores
        the scratch to the output, so each chunk ends up holding whatever the
        last worker left behind.
        """
        k = k.kernel if isinstance(k, LibraryCall) else k
        width = max(hi - lo for lo, hi in chunks)
        acc = np.zeros((width, 12), dtype=np.complex128)
        alias = {"__acc__": acc}
        for w, (lo, hi) in enumerate(chunks):
            self._kernel(HopKernel("__acc__", k.src, k.hops), loop, lo, hi,
                         {**scratch[w], **alias}, plan_of=k)
        for w, (lo, hi) in enumerate(chunks):
            out, oshift = self._array(k.out, scratch[w], lo)
            out[lo - oshift:hi - oshift] = acc[:hi - lo]

    def _is_local(self, name: str) -> bool:
        return any(b.name == name for b in self.lir.locals)

    def _count(self, k, loop: ParallelFor, n: int) -> None:
        k = k.kernel if isinstance(k, LibraryCall) else k
        if isinstance(k, HopKernel):
            plan = self.plan(k, loop.domain, loop.layout)
            self.counters["hop_kernels"] += 1
            self.counters["hop_sites"] += n
            self.counters["neighbour_blocks"] += n * plan.neighbour_legs
        else:
            self.counters["lincomb_kernels"] += 1

    def _array(self, name: str, scratch: dict, lo: int):
        if name in scratch:
            return scratch[name], lo
        return self.bufs[name], 0

    def _kernel(self, k, loop: ParallelFor, lo: int, hi: int, scratch: dict,
                plan_of=None) -> None:
        if isinstance(k, LibraryCall):
            k = k.kernel
        out, oshift = self._array(k.out, scratch, lo)
        if isinstance(k, HopKernel):
            plan = self.plan(plan_of or k, loop.domain, loop.layout)
            src, sshift = self._array(k.src, scratch, lo)
            spin = np.stack([
                sum((eval_scalar(c, self.scalars) * m.matrix for c, m in leg.spins),
                    np.zeros((4, 4), dtype=np.complex128))
                for leg in k.hops])
            self.k.hop(out, oshift, src, sshift, plan.idx, plan.lsite, plan.laxis, plan.ldag,
                       spin, self.links, lo, hi)
        elif isinstance(k, LinComb):
            coefs, ins, shifts = [], [], []
            for c, name in k.terms:
                arr, sh = self._array(name, scratch, lo)
                coefs.append(eval_scalar(c, self.scalars))
                ins.append(arr)
                shifts.append(sh)
            self.k.lincomb(out, oshift, coefs, ins, shifts, lo, hi)
        elif isinstance(k, ScalarWrite):
            self.scalars[k.target] = eval_scalar(k.expr, self.scalars)
        else:
            raise QiralError(f"unknown kernel {type(k).__name__}")

    def _reduce(self, node: Reduction) -> None:
        a, b = self.bufs[node.a], self.bufs[node.b]
        n = a.shape[0]
        partial = np.zeros(n, dtype=np.complex128)
        chunks = self._chunks(n)
        if self.pool is None:
            for lo, hi in chunks:
                self.k.site_dot(a, 0, b, 0, partial, lo, hi)
        else:
            list(self.pool.map(lambda c: self.k.site_dot(a, 0, b, 0, partial, c[0], c[1]),
                               chunks))
        # partials are combined in ascending site order whatever the chunking
        self.scalars[node.target] = complex(self.k.ordered_sum(partial))
        self.counters["reductions"] += 1


def _inputs_for(lir: LoopIR, b) -> dict[str, np.ndarray]:
    if isinstance(b, dict):
        return b
    names = lir.inputs
    if len(names) != 1:
        raise QiralError(f"program has inputs {list(names)}; pass a dict")
    return {names[0]: b}


def execute(lir: LoopIR, config: GaugeConfig, b, params: RunParams,
            kernels: Kernels | None = None, extra_scalars: dict | None = None) -> RunResult:
    """Single-threaded run."""
    return parallel_execute(lir, config, b, params, threads=1, kernels=kernels,
                            extra_scalars=extra_scalars)


def parallel_execute(lir: LoopIR, config: GaugeConfig, b, params: RunParams,
                     threads: int = 1, kernels: Kernels | None = None,
                     privatize: bool = True, extra_scalars: dict | None = None) -> RunResult:
    m = Machine(lir, config, threads, kernels, privatize)
    scalars = {**params.scalars(), **(extra_scalars or {})}
    return m.run(_inputs_for(lir, b), scalars, params.max_iter)

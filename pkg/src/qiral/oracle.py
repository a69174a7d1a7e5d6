"""Dense-matrix semantics of terms, a direct solver and rule soundness checks.

Everything here materialises explicit complex arrays, so it is only meant for
tiny lattices; a size guard stops accidental blow-ups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ir
from .errors import SizeGuardExceeded, Singular, UnboundAtom
from .vm.gamma import GAMMA, GAMMA5
from .vm.gauge import GaugeConfig
from .vm.geometry import geometry, unit_vector

SIZE_GUARD = 10_000


@dataclass
class Env:
    """Values for the atoms a term may mention."""

    dims: tuple[int, int, int, int] | None = None
    gauge: GaugeConfig | None = None
    scalars: dict[str, complex] = field(default_factory=dict)
    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    sets: dict[str, int] = field(default_factory=dict)
    sites: dict[str, int] = field(default_factory=dict)
    guard: int = SIZE_GUARD

    def __post_init__(self):
        if self.dims is None and self.gauge is not None:
            self.dims = self.gauge.dims

    def lattice_dims(self, lat: ir.Lattice) -> tuple[int, ...]:
        dims = lat.dims or self.dims
        if dims is None:
            raise UnboundAtom(f"lattice {lat.name} has no extents")
        return dims

    def bind_site(self, name: str, site: int) -> Env:
        out = Env(self.dims, self.gauge, self.scalars, self.arrays, self.sets,
                  {**self.sites, name: site}, self.guard)
        return out


def cardinality(s: ir.IndexSet, env: Env) -> int:
    n = 1
    for a in s.atoms():
        if isinstance(a, ir.Lattice):
            n *= int(np.prod(env.lattice_dims(a)))
        elif isinstance(a, ir.Sublattice):
            n *= int(np.prod(env.lattice_dims(a.parent))) // 2
        elif isinstance(a, ir.Abstract):
            if a.name not in env.sets:
                raise UnboundAtom(f"index set {a.name} has no size")
            n *= env.sets[a.name]
        else:
            n *= a.cardinality
    return n


def domain_sites(s: ir.IndexSet, env: Env) -> np.ndarray:
    """Global site numbers enumerated by a lattice or sublattice."""
    if isinstance(s, ir.Lattice):
        return geometry(env.lattice_dims(s)).sites["L"]
    if isinstance(s, ir.Sublattice):
        return geometry(env.lattice_dims(s.parent)).sites[s.parity]
    raise UnboundAtom(f"cannot enumerate sites of {s}")


def _guard(n: int, env: Env, what) -> None:
    if n > env.guard:
        raise SizeGuardExceeded(f"{what}: {n} rows exceeds the dense limit {env.guard}")


class _Denoter:
    def __init__(self, env: Env):
        self.env = env

    def __call__(self, t: ir.Term, env: Env | None = None):
        env = env or self.env
        meth = getattr(self, "_" + type(t).__name__, None)
        if meth is None:
            raise UnboundAtom(f"no dense meaning for {type(t).__name__}")
        return meth(t, env)

    # scalars ---------------------------------------------------------------

    def _ScalarLit(self, t, env):
        return complex(t.value)

    def _ImaginaryUnit(self, t, env):
        return 1j

    def _SymScalar(self, t, env):
        if t.name not in env.scalars:
            raise UnboundAtom(f"scalar {t.name} is unbound")
        return complex(env.scalars[t.name])

    def _Div(self, t, env):
        return self(t.a, env) / self(t.b, env)

    def _Conj(self, t, env):
        return np.conj(self(t.a, env))

    def _InnerProduct(self, t, env):
        return complex(np.vdot(self(t.a, env), self(t.b, env)))

    # leaves ----------------------------------------------------------------

    def _Identity(self, t, env):
        n = cardinality(t.over, env)
        _guard(n, env, t.over)
        return np.eye(n, dtype=complex)

    def _Zero(self, t, env):
        rows = cardinality(t.rows, env)
        if t.cols is None:
            return np.zeros(rows, dtype=complex)
        return np.zeros((rows, cardinality(t.cols, env)), dtype=complex)

    def _Gamma(self, t, env):
        if not t.dir.is_const:
            raise UnboundAtom(f"direction {t.dir.name} is unbound")
        # the sign of a direction does not change the spin matrix
        return GAMMA[t.dir.name].copy()

    def _Gamma5(self, t, env):
        return GAMMA5.copy()

    def _Shift(self, t, env):
        lat = ir.lattice_of(t.lattice)
        geo = geometry(env.lattice_dims(lat))
        _guard(geo.volume, env, t)
        out = np.zeros((geo.volume, geo.volume), dtype=complex)
        out[np.arange(geo.volume), geo.displaced(unit_vector(t.dir))] = 1
        return out

    def _GaugeLink(self, t, env):
        if env.gauge is None:
            raise UnboundAtom("no gauge configuration bound")
        if t.site not in env.sites:
            raise UnboundAtom(f"site variable {t.site} is unbound")
        if not t.dir.is_const:
            raise UnboundAtom(f"direction {t.dir.name} is unbound")
        s = env.sites[t.site]
        axis = t.dir.axis
        if t.dir.sign > 0:
            return env.gauge.links[s, axis].copy()
        geo = geometry(env.gauge.dims)
        back = geo.displaced(unit_vector(t.dir))[s]
        return env.gauge.links[back, axis].conj().T.copy()

    def _Projection(self, t, env):
        geo = geometry(env.lattice_dims(t.lattice))
        keep = geo.sites[t.parity]
        out = np.zeros((len(keep), geo.volume), dtype=complex)
        out[np.arange(len(keep)), keep] = 1
        return out

    def _VectorSym(self, t, env):
        return self._lookup(t, env)

    def _MatrixSym(self, t, env):
        return self._lookup(t, env)

    def _lookup(self, t, env):
        if t.name in env.arrays:
            return np.asarray(env.arrays[t.name], dtype=complex)
        if t.name in env.scalars:
            return complex(env.scalars[t.name])
        raise UnboundAtom(f"{t.name} is unbound")

    # structure ---------------------------------------------------------------

    def _Add(self, t, env):
        vals = [self(x, env) for x in t.terms]
        out = vals[0]
        for v in vals[1:]:
            out = out + v
        return out

    def _Sub(self, t, env):
        return self(t.a, env) - self(t.b, env)

    def _Neg(self, t, env):
        return -self(t.a, env)

    def _Mul(self, t, env):
        out = None
        for x in t.terms:
            v = self(x, env)
            if out is None:
                out = v
            elif np.ndim(out) == 0 or np.ndim(v) == 0:
                out = out * v
            else:
                out = out @ v
        return out

    def _ScalarMul(self, t, env):
        return self(t.scalar, env) * self(t.a, env)

    def _Tensor(self, t, env):
        out = self(t.terms[0], env)
        for x in t.terms[1:]:
            out = np.kron(out, self(x, env))
        _guard(out.shape[0], env, "tensor product")
        return out

    def _DirectSum(self, t, env):
        blocks = [self(t.body, env.bind_site(t.binder, int(s)))
                  for s in domain_sites(t.domain, env)]
        r, c = blocks[0].shape
        _guard(r * len(blocks), env, "direct sum")
        out = np.zeros((r * len(blocks), c * len(blocks)), dtype=complex)
        for k, blk in enumerate(blocks):
            out[k * r:(k + 1) * r, k * c:(k + 1) * c] = blk
        return out

    def _IndexedSum(self, t, env):
        if not isinstance(t.domain, ir.Directions):
            raise UnboundAtom(f"indexed sum over {t.domain} is not supported")
        out = None
        for d in ir.DIRECTIONS:
            v = self(ir.substitute_dir(t.body, t.binder, ir.Dir(d)), env)
            out = v if out is None else out + v
        return out

    def _Transpose(self, t, env):
        v = self(t.a, env)
        return v if np.ndim(v) == 0 else v.T.copy()

    def _Dagger(self, t, env):
        v = self(t.a, env)
        return np.conj(v) if np.ndim(v) == 0 else v.conj().T.copy()

    def _Inverse(self, t, env):
        v = self(t.a, env)
        if np.ndim(v) == 0:
            return 1 / v
        return dense_inverse(v)

    def _SubVector(self, t, env):
        v = self(t.a, env)
        sub = ir.site_domain(t.over)
        if not isinstance(sub, ir.Sublattice):
            return v
        per_site = cardinality(t.over, env) // cardinality(sub, env)
        sites = domain_sites(sub, env)
        return v.reshape(-1, per_site)[sites].ravel()


def denote(t: ir.Term, env: Env | None = None):
    """Dense value of a closed term: complex, 1-D vector or 2-D matrix."""
    return _Denoter(env or Env())(t)


# ---------------------------------------------------------------------------
# direct solver
# ---------------------------------------------------------------------------

PIVOT_THRESHOLD = 1e-12


def _lu(m: np.ndarray):
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"need a square matrix, got {a.shape}")
    perm = np.arange(n)
    scale = max(np.abs(a).max(), 1e-300) if n else 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= PIVOT_THRESHOLD * scale:
            raise Singular(f"pivot {abs(a[p, k]):.3e} in column {k} below threshold")
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return a, perm


def _lu_solve(lu, perm, b):
    y = np.array(b, dtype=complex)[perm]
    n = lu.shape[0]
    for k in range(n):
        y[k + 1:] -= lu[k + 1:, k] * y[k]
    for k in range(n - 1, -1, -1):
        y[k] = (y[k] - lu[k, k + 1:] @ y[k + 1:]) / lu[k, k]
    return y


def dense_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve m x = b by Gaussian elimination with partial pivoting."""
    lu, perm = _lu(m)
    x = _lu_solve(lu, perm, b)
    # one step of iterative refinement tightens the residual for free
    x += _lu_solve(lu, perm, b - m @ x)
    return x


def dense_inverse(m: np.ndarray) -> np.ndarray:
    lu, perm = _lu(m)
    eye = np.eye(m.shape[0], dtype=complex)
    return np.stack([_lu_solve(lu, perm, eye[:, j]) for j in range(m.shape[0])], axis=1)


# ---------------------------------------------------------------------------
# rule soundness
# ---------------------------------------------------------------------------


@dataclass
class SoundnessResult:
    rule: str
    trials: int
    passed: bool
    counterexample: dict | None = None
    error: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


def _rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return np.inf
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def _sets_in(t: ir.Term) -> set[str]:
    from .rewrite.engine import _scalar_fields

    names = set()
    for n in ir.walk(t):
        for _, v in _scalar_fields(n):
            if isinstance(v, ir.IndexSet):
                names.update(a.name for a in v.atoms() if isinstance(a, ir.Abstract))
    return names


def _equation_instance(rule, rng, dims):
    """Random closed instance of an equation: (lhs, rhs, env)."""
    from .rewrite.engine import instantiate

    names = set()
    for side in (rule.lhs, rule.rhs):
        names |= _sets_in(side)
    for p in rule.params.values():
        for s in (getattr(p, "rows", None), getattr(p, "cols", None), getattr(p, "over", None)):
            if s is not None:
                names.update(a.name for a in s.atoms() if isinstance(a, ir.Abstract))
    σ: dict = {}
    for name in sorted(names):
        σ[("set", name)] = ir.Atomic(name, int(rng.integers(1, 4)))
    env = Env(dims=dims)
    for name, p in rule.params.items():
        p = instantiate(p, σ)
        σ[name] = p
        if isinstance(p, ir.MatrixSym):
            shape = (p.rows.cardinality, p.cols.cardinality)
            env.arrays[name] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            if p.rows == p.cols:
                # keep square matrices comfortably invertible
                env.arrays[name] += 3 * np.eye(shape[0])
        elif isinstance(p, ir.VectorSym):
            n = p.over.cardinality
            env.arrays[name] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        else:
            env.scalars[name] = complex(*rng.standard_normal(2))
    return instantiate(rule.lhs, σ), instantiate(rule.rhs, σ), env


def _builtin_instance(rule, rng, dims, gauge):
    from .rewrite import RuleSet
    from .rewrite.builtin import random_scalar_bindings
    from .rewrite.engine import Context, Normalizer
    from .shapes import ShapeEnv

    lattice = ir.Lattice("L", dims)
    term, arrays = rule.sampler(rng, lattice)
    ctx = Context(ShapeEnv(), Normalizer(RuleSet([rule])))
    out = rule.apply(term, ctx)
    env = Env(dims=dims, gauge=gauge, arrays=dict(arrays),
              scalars=random_scalar_bindings(rng))
    return term, out, env


def check_rule_soundness(rule, trials: int = 20, seed: int = 0,
                         dims=(2, 2, 2, 2), tol: float = 1e-12) -> SoundnessResult:
    """Compare both sides of a rule densely on random instances."""
    from .vm.gauge import random_gauge

    rng = np.random.default_rng(seed)
    gauge = random_gauge(dims, seed)
    worst = 0.0
    fired = 0
    for k in range(trials):
        if rule.lhs is not None and rule.rhs is not None:
            lhs, rhs, env = _equation_instance(rule, rng, dims)
            env.gauge = gauge
        elif rule.sampler is not None:
            lhs, rhs, env = _builtin_instance(rule, rng, dims, gauge)
            if rhs is None:
                # already in normal form for this rule; nothing to compare
                continue
        else:
            raise ValueError(f"rule {rule.name} has neither equation sides nor a sampler")
        fired += 1
        err = _rel_err(denote(lhs, env), denote(rhs, env))
        worst = max(worst, err)
        if not err <= tol:
            return SoundnessResult(rule.name, k + 1, False,
                                   {"lhs": lhs, "rhs": rhs, "error": err}, err)
    if not fired:
        return SoundnessResult(rule.name, trials, False, {"reason": "rule never fired"}, np.inf)
    return SoundnessResult(rule.name, trials, True, None, worst)


# ---------------------------------------------------------------------------
# dense program interpreter
# ---------------------------------------------------------------------------


def run_dense(program, env: Env, max_iter: int = 10_000):
    """Interpret a statement list with dense values; returns the final bindings."""
    state = Env(env.dims, env.gauge, dict(env.scalars), dict(env.arrays), dict(env.sets),
                dict(env.sites), env.guard)
    den = _Denoter(state)

    def cond(c: ir.Compare) -> bool:
        a, b = den(c.lhs).real, den(c.rhs).real
        return a > b if c.op == ">" else a < b

    def run(stmts):
        for st in stmts:
            if isinstance(st, ir.Seq):
                run(st.body)
            elif isinstance(st, ir.While):
                n = 0
                while cond(st.cond) and n < max_iter:
                    run(st.body)
                    n += 1
            elif isinstance(st, ir.Assign):
                v = den(st.rhs)
                if np.ndim(v) == 0:
                    state.scalars[st.lhs.name] = complex(v)
                else:
                    state.arrays[st.lhs.name] = v
            elif isinstance(st, ir.Decl):
                continue
            else:
                raise UnboundAtom(f"cannot interpret {type(st).__name__}")

    run(program)
    return state


def block_structure(m: np.ndarray, block: int = 12, tol: float = 0.0) -> np.ndarray:
    """Number of nonzero block columns in each block row."""
    n = m.shape[0] // block
    blocks = np.abs(m.reshape(n, block, n, block)).max(axis=(1, 3))
    return (blocks > tol).sum(axis=1)


__all__ = ["Env", "SIZE_GUARD", "SoundnessResult", "block_structure", "cardinality",
           "check_rule_soundness", "dense_inverse", "dense_solve", "denote", "domain_sites",
           "run_dense"]

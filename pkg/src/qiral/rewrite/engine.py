"""Matching and leftmost-innermost normalization over Terms.

Patterns are ordinary terms in which some nodes are pattern variables:
`PVar` nodes, `Abstract` index sets (bound to concrete index sets) and
directions whose name is listed among the rule's direction variables.
Matching is modulo associativity-commutativity of `Add` and associativity
of `Mul` and `Tensor`.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .. import ir
from ..errors import FuelExhausted, QiralError
from ..shapes import (DirVar, MatrixShape, ScalarShape, ShapeEnv, SiteVar, VectorShape,
                      infer_shape, shapes_agree, symbol_shape)

Subst = dict


# ---------------------------------------------------------------------------
# Index-set and direction matching
# ---------------------------------------------------------------------------


def _match_atoms(pat: tuple, subj: tuple, σ: Subst) -> Iterator[Subst]:
    """Match a sequence of pattern atoms against subject atoms.

    An `Abstract` pattern atom binds a non-empty contiguous run of subject atoms.
    """
    if not pat:
        if not subj:
            yield σ
        return
    head, rest = pat[0], pat[1:]
    if isinstance(head, ir.Abstract):
        key = ("set", head.name)
        if key in σ:
            bound = σ[key].atoms()
            if subj[:len(bound)] == bound:
                yield from _match_atoms(rest, subj[len(bound):], σ)
            return
        max_take = len(subj) - len(rest)
        for k in range(1, max_take + 1):
            σ2 = dict(σ)
            σ2[key] = ir.product(*subj[:k])
            yield from _match_atoms(rest, subj[k:], σ2)
        return
    if not subj:
        return
    if isinstance(head, ir.Sublattice) and isinstance(subj[0], ir.Sublattice):
        if head.parity != subj[0].parity:
            return
        yield from _match_atoms((head.parent,) + rest, (subj[0].parent,) + subj[1:], σ)
        return
    if head == subj[0]:
        yield from _match_atoms(rest, subj[1:], σ)


def match_set(p: ir.IndexSet, s: ir.IndexSet, σ: Subst) -> Iterator[Subst]:
    yield from _match_atoms(p.atoms(), s.atoms(), σ)


def _match_dir(p: ir.Dir, s: ir.Dir, σ: Subst, dirvars: frozenset) -> Subst | None:
    if p.name in dirvars:
        key = ("dir", p.name)
        value = ir.Dir(s.name, s.sign * p.sign)
        if key in σ:
            return σ if σ[key] == value else None
        σ = dict(σ)
        σ[key] = value
        return σ
    return σ if p == s else None


# ---------------------------------------------------------------------------
# Term matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pattern:
    term: ir.Term
    dirvars: frozenset = frozenset()
    params: dict = field(default_factory=dict, hash=False, compare=False)


def _is_var(t: ir.Term) -> bool:
    return isinstance(t, ir.PVar)


def _scalar_fields(t: ir.Term):
    for f in dataclasses.fields(t):
        if f.name == "loc":
            continue
        yield f.name, getattr(t, f.name)


def _match(p: ir.Term, s: ir.Term, σ: Subst, dv: frozenset) -> Iterator[Subst]:
    if isinstance(p, ir.PVar):
        if p.name in σ:
            if σ[p.name] == s:
                yield σ
            return
        σ2 = dict(σ)
        σ2[p.name] = s
        yield σ2
        return
    if type(p) is not type(s):
        return
    if isinstance(p, ir.Add):
        yield from _match_ac(p.terms, s.terms, σ, dv, ir.Add)
        return
    if isinstance(p, (ir.Mul, ir.Tensor)):
        yield from _match_assoc(p.terms, s.terms, σ, dv, type(p))
        return
    # compare non-term fields, threading set/direction bindings
    states = [σ]
    kids_p, kids_s = ir.children(p), ir.children(s)
    if len(kids_p) != len(kids_s):
        return
    term_field_names = {n for n, _ in ir._term_fields(type(p))}
    for name, pv in _scalar_fields(p):
        if name in term_field_names:
            continue
        sv = getattr(s, name)
        new_states = []
        for st in states:
            if isinstance(pv, ir.IndexSet):
                if isinstance(sv, ir.IndexSet):
                    new_states.extend(match_set(pv, sv, st))
            elif isinstance(pv, ir.Dir):
                r = _match_dir(pv, sv, st, dv)
                if r is not None:
                    new_states.append(r)
            elif pv == sv:
                new_states.append(st)
        states = new_states
        if not states:
            return
    for st in states:
        yield from _match_seq(kids_p, kids_s, st, dv)


def _match_seq(ps, ss, σ, dv) -> Iterator[Subst]:
    if not ps:
        yield σ
        return
    for σ2 in _match(ps[0], ss[0], σ, dv):
        yield from _match_seq(ps[1:], ss[1:], σ2, dv)


def _match_assoc(ps, ss, σ, dv, cls) -> Iterator[Subst]:
    """Each pattern element matches a contiguous, non-empty run of subject
    elements; runs longer than one may only be taken by a pattern variable."""
    if not ps:
        if not ss:
            yield σ
        return
    head, rest = ps[0], ps[1:]
    max_take = len(ss) - len(rest)
    if max_take < 1:
        return
    if _is_var(head):
        for k in range(1, max_take + 1):
            chunk = ss[0] if k == 1 else cls(tuple(ss[:k]))
            for σ2 in _match(head, chunk, σ, dv):
                yield from _match_assoc(rest, ss[k:], σ2, dv, cls)
    else:
        for σ2 in _match(head, ss[0], σ, dv):
            yield from _match_assoc(rest, ss[1:], σ2, dv, cls)


def _match_ac(ps, ss, σ, dv, cls) -> Iterator[Subst]:
    """Assign every subject operand to a pattern slot; every slot non-empty.

    Brute force over assignments, which is fine for the handful of operands
    rules deal with.
    """
    k, n = len(ps), len(ss)
    if n < k:
        return
    if n > 8:
        return
    seen = set()
    for assign in itertools.product(range(k), repeat=n):
        groups = [[] for _ in range(k)]
        for idx, slot in enumerate(assign):
            groups[slot].append(ss[idx])
        if any(not g for g in groups):
            continue
        if any(len(g) > 1 and not _is_var(ps[i]) for i, g in enumerate(groups)):
            continue
        key = tuple(tuple(g) for g in groups)
        if key in seen:
            continue
        seen.add(key)
        subjects = [g[0] if len(g) == 1 else cls(tuple(g)) for g in groups]
        yield from _match_seq(tuple(ps), tuple(subjects), σ, dv)


def _check_params(σ: Subst, params: dict, env: ShapeEnv) -> Iterator[Subst]:
    """Filter a substitution by the declared shapes of its pattern variables."""
    items = [(n, sym) for n, sym in params.items() if n in σ]

    def go(i, σ):
        if i == len(items):
            yield σ
            return
        name, sym = items[i]
        try:
            got = infer_shape(σ[name], env, strict=False)
        except QiralError:
            return
        want = symbol_shape(sym)
        if isinstance(want, ScalarShape):
            if isinstance(got, ScalarShape):
                yield from go(i + 1, σ)
        elif isinstance(want, VectorShape):
            if isinstance(got, VectorShape):
                for σ2 in match_set(want.over, got.over, σ):
                    yield from go(i + 1, σ2)
        elif isinstance(got, MatrixShape):
            for σ2 in match_set(want.rows, got.rows, σ):
                for σ3 in match_set(want.cols, got.cols, σ2):
                    yield from go(i + 1, σ3)

    yield from go(0, σ)


def match_pattern(pattern, subject: ir.Term, env: ShapeEnv | None = None) -> Subst | None:
    """First substitution σ with σ(pattern) == subject, or None.

    `pattern` is a Pattern or a bare term whose variables are PVar nodes.
    Works on terms and on Assign statements.
    """
    if not isinstance(pattern, Pattern):
        pattern = Pattern(pattern)
    for σ in iter_matches(pattern, subject, env):
        return σ
    return None


def iter_matches(pattern: Pattern, subject, env: ShapeEnv | None = None) -> Iterator[Subst]:
    env = env if env is not None else ShapeEnv()
    p, s = pattern.term, subject
    if isinstance(p, ir.Assign):
        if not isinstance(s, ir.Assign):
            return
        gen = (σ2 for σ in _match(p.lhs, s.lhs, {}, pattern.dirvars)
               for σ2 in _match(p.rhs, s.rhs, σ, pattern.dirvars))
    else:
        gen = _match(p, s, {}, pattern.dirvars)
    for σ in gen:
        yield from _check_params(σ, pattern.params, env)


def instantiate(t, σ: Subst):
    """Apply a substitution to a term (or Assign)."""
    if isinstance(t, ir.Statement):
        return ir.map_statement(t, lambda x: instantiate(x, σ))

    def set_sub(s: ir.IndexSet) -> ir.IndexSet:
        atoms = []
        changed = False
        for a in s.atoms():
            if isinstance(a, ir.Abstract) and ("set", a.name) in σ:
                atoms.extend(σ[("set", a.name)].atoms())
                changed = True
            else:
                atoms.append(a)
        return ir.product(*atoms) if changed else s

    def dir_sub(d: ir.Dir) -> ir.Dir:
        key = ("dir", d.name)
        if key in σ:
            v = σ[key]
            return ir.Dir(v.name, v.sign * d.sign)
        return d

    def fn(n: ir.Term) -> ir.Term:
        if isinstance(n, ir.PVar):
            return σ.get(n.name, n)
        changes = {}
        for name, v in _scalar_fields(n):
            if isinstance(v, ir.IndexSet):
                nv = set_sub(v)
                if nv is not v:
                    changes[name] = nv
            elif isinstance(v, ir.Dir):
                nv = dir_sub(v)
                if nv != v:
                    changes[name] = nv
        return dataclasses.replace(n, **changes) if changes else n

    return ir.map_bottom_up(t, fn)


def to_pattern(t, names, dirnames=()):
    """Turn the named symbols of a term/statement into PVar nodes."""
    names = set(names)

    def fn(n):
        if isinstance(n, (ir.SymScalar, ir.VectorSym, ir.MatrixSym)) and n.name in names:
            return ir.PVar(n.name, loc=n.loc)
        return n

    if isinstance(t, ir.Statement):
        return ir.map_statement(t, lambda x: ir.map_bottom_up(x, fn))
    return ir.map_bottom_up(t, fn)


# ---------------------------------------------------------------------------
# Rules and normalization
# ---------------------------------------------------------------------------


@dataclass
class Context:
    """Binder environment seen at the current position of the traversal."""

    env: ShapeEnv
    engine: "Normalizer"

    def shape(self, t: ir.Term):
        return infer_shape(t, self.env, strict=False)

    def try_shape(self, t: ir.Term):
        try:
            return self.shape(t)
        except QiralError:
            return None

    def is_scalar(self, t: ir.Term) -> bool:
        return isinstance(self.try_shape(t), ScalarShape)

    def is_matrix(self, t: ir.Term) -> bool:
        return isinstance(self.try_shape(t), MatrixShape)


@dataclass
class RewriteRule:
    """An equation/definition (pattern lhs -> rhs) or a builtin transformer.

    Builtins provide `fn(term, ctx) -> Term | None`.  `sampler(rng)` yields a
    closed instance `(lhs_term, oracle_bindings)` for soundness testing.
    """

    name: str
    lhs: ir.Term | None = None
    rhs: ir.Term | None = None
    condition: ir.Term | None = None
    kind: str = "equation"
    params: dict = field(default_factory=dict)
    dirvars: frozenset = frozenset()
    fn: Callable | None = None
    sampler: Callable | None = None
    extension: bool = True

    def __post_init__(self):
        if self.fn is None and self.lhs is None:
            raise ValueError(f"rule {self.name} needs a pattern or a function")
        self.pattern = None if self.lhs is None else Pattern(self.lhs, self.dirvars, self.params)
        if self.lhs is not None and self.rhs is not None:
            extra = _pvars(self.rhs) - _pvars(self.lhs)
            if extra:
                raise ValueError(f"rule {self.name}: rhs variables {sorted(extra)} unbound")

    def apply(self, t: ir.Term, ctx: Context) -> ir.Term | None:
        if self.fn is not None:
            return self.fn(t, ctx)
        p = self.lhs
        if self.extension and isinstance(p, (ir.Mul, ir.Tensor)) and type(t) is type(p):
            return self._apply_window(t, ctx)
        if self.extension and isinstance(p, ir.Add) and isinstance(t, ir.Add) \
                and len(t.terms) > len(p.terms):
            return self._apply_subset(t, ctx)
        return self._apply_whole(t, ctx)

    def _accept(self, σ, t, ctx) -> ir.Term | None:
        out = instantiate(self.rhs, σ)
        if self.condition is not None:
            cond = instantiate(self.condition, σ)
            if not ctx.engine.holds(cond, ctx):
                return None
        if not shapes_agree_safe(ctx, t, out):
            return None
        return out

    def _apply_whole(self, t, ctx):
        for σ in iter_matches(self.pattern, t, ctx.env):
            out = self._accept(σ, t, ctx)
            if out is not None:
                return out
        return None

    def _apply_window(self, t, ctx):
        cls = type(t)
        n, k = len(t.terms), len(self.lhs.terms)
        for width in range(k, n + 1):
            for i in range(0, n - width + 1):
                window = t.terms[i:i + width]
                sub = window[0] if width == 1 else cls(tuple(window))
                for σ in iter_matches(self.pattern, sub, ctx.env):
                    out = self._accept(σ, sub, ctx)
                    if out is not None:
                        if width == n:
                            return out
                        return _rebuild_assoc(cls, t.terms[:i] + (out,) + t.terms[i + width:])
        return None

    def _apply_subset(self, t, ctx):
        k = len(self.lhs.terms)
        for combo in itertools.combinations(range(len(t.terms)), k):
            sub = ir.Add(tuple(t.terms[i] for i in combo))
            for σ in iter_matches(self.pattern, sub, ctx.env):
                out = self._accept(σ, sub, ctx)
                if out is not None:
                    rest = [x for i, x in enumerate(t.terms) if i not in combo]
                    return _rebuild_assoc(ir.Add, (out, *rest))
        return None


def _rebuild_assoc(cls, terms):
    flat = []
    for x in terms:
        flat.extend(x.terms if isinstance(x, cls) else (x,))
    return flat[0] if len(flat) == 1 else cls(tuple(flat))


def shapes_agree_safe(ctx: Context, before: ir.Term, after: ir.Term) -> bool:
    try:
        return shapes_agree(ctx.shape(before), ctx.shape(after))
    except QiralError:
        return False


def _pvars(t) -> set[str]:
    return {n.name for n in ir.walk(t) if isinstance(n, ir.PVar)}


@dataclass
class RuleSet:
    rules: list[RewriteRule]
    strategy: str = "innermost"
    fuel: int = 100_000

    def __post_init__(self):
        if self.strategy not in ("innermost", "outermost"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.fuel < 1:
            raise ValueError("fuel must be positive")
        names = [r.name for r in self.rules]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate rule names: {sorted(dup)}")

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def rule(self, name: str) -> RewriteRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def extended(self, rules) -> RuleSet:
        return RuleSet(list(self.rules) + list(rules), self.strategy, self.fuel)


class Normalizer:
    """Applies a RuleSet until no rule fires anywhere.

    Leftmost-innermost: children are normalized first (left to right), then
    the first rule (in list order) that fires at the root is applied and the
    result normalized again.  Fuel bounds the total number of rewrites.
    """

    def __init__(self, rules: RuleSet, trace: Callable | None = None):
        self.rules = rules
        self.trace = trace
        self.steps = 0
        self._memo: dict = {}

    def holds(self, cond: ir.Term, ctx: Context) -> bool:
        from .requirements import check_predicate
        return check_predicate(cond, self, ctx)

    def _fire(self, t: ir.Term, ctx: Context) -> ir.Term | None:
        for rule in self.rules:
            out = rule.apply(t, ctx)
            if out is not None and out != t:
                self.steps += 1
                if self.steps > self.rules.fuel:
                    raise FuelExhausted(
                        f"more than {self.rules.fuel} rewrites; last rule {rule.name}")
                if self.trace is not None:
                    self.trace(rule.name, t, out)
                return out
        return None

    def normalize(self, t: ir.Term, env: ShapeEnv | None = None) -> ir.Term:
        env = env if env is not None else ShapeEnv()
        if self.rules.strategy == "outermost":
            return self._outermost(t, env)
        return self._innermost(t, env)

    def _binder_env(self, t, env):
        if isinstance(t, ir.DirectSum):
            return env.bind(t.binder, SiteVar(t.domain))
        if isinstance(t, ir.IndexedSum):
            kind = DirVar() if isinstance(t.domain, ir.Directions) else SiteVar(t.domain)
            return env.bind(t.binder, kind)
        return env

    def _innermost(self, t: ir.Term, env: ShapeEnv) -> ir.Term:
        key = (t, tuple(sorted((k, repr(v)) for k, v in env.items())))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        while True:
            kids = ir.children(t)
            if kids:
                inner = self._binder_env(t, env)
                new = tuple(self._innermost(k, inner) for k in kids)
                if any(a is not b for a, b in zip(new, kids)):
                    t = ir.rebuild(t, new)
            out = self._fire(t, Context(env, self))
            if out is None:
                break
            t = out
        self._memo[key] = t
        self._memo[(t, key[1])] = t
        return t

    def _outermost(self, t: ir.Term, env: ShapeEnv) -> ir.Term:
        while True:
            out = self._fire(t, Context(env, self))
            if out is not None:
                t = out
                continue
            kids = ir.children(t)
            if not kids:
                return t
            inner = self._binder_env(t, env)
            new = tuple(self._outermost(k, inner) for k in kids)
            if all(a is b for a, b in zip(new, kids)):
                return t
            t = ir.rebuild(t, new)


def normalize(t: ir.Term, rules: RuleSet, trace: Callable | None = None,
              env: ShapeEnv | None = None) -> ir.Term:
    """Normal form of `t` under `rules` (raises FuelExhausted)."""
    return Normalizer(rules, trace).normalize(t, env)


def jsonl_tracer(fh) -> Callable:
    """Trace callback writing one JSON object per rewrite."""
    from ..frontend.printer import format_term

    def trace(name, before, after):
        fh.write(json.dumps({"rule": name, "before": format_term(before),
                             "after": format_term(after)}) + "\n")

    return trace

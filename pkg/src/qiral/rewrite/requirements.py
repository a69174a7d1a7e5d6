"""Discharging `Require` predicates by normalization plus invertibility schemata."""

from __future__ import annotations

from dataclasses import dataclass

from .. import ir
from ..shapes import ShapeEnv
from . import scalars
from .builtin import twisted_parts


@dataclass(frozen=True)
class Proven:
    predicate: ir.Term
    normal_form: ir.Term

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Unprovable:
    message: str
    predicate: ir.Term
    normal_form: ir.Term | None

    def __bool__(self) -> bool:
        return False


_ALWAYS_INVERTIBLE = (ir.Identity, ir.Gamma, ir.Gamma5, ir.Shift, ir.GaugeLink)


def is_invertible(t: ir.Term) -> bool:
    """Schema-based invertibility of a normal form (sound, not complete)."""
    if isinstance(t, _ALWAYS_INVERTIBLE):
        return True
    if isinstance(t, ir.ScalarMul):
        return scalars.is_symbolically_nonzero(t.scalar) and is_invertible(t.a)
    if isinstance(t, ir.Add):
        parts = twisted_parts(t)
        if parts is None:
            return False
        _, alpha, beta = parts
        # alpha*I + beta*G with G^2 = I is singular only when alpha^2 = beta^2
        try:
            gap = scalars.to_poly(ir.Sub(ir.mul(alpha, alpha), ir.mul(beta, beta)))
        except ZeroDivisionError:
            return False
        return scalars.is_symbolically_nonzero(scalars.render(gap))
    if isinstance(t, ir.DirectSum):
        return is_invertible(t.body)
    if isinstance(t, (ir.Tensor, ir.Mul)):
        return all(is_invertible(x) for x in t.terms)
    if isinstance(t, (ir.Dagger, ir.Transpose, ir.Inverse)):
        return is_invertible(t.a)
    return False


def check_requirement(pred: ir.Term, rules, env: ShapeEnv | None = None):
    """Proven or Unprovable (the latter carries the stuck normal form)."""
    from .engine import normalize

    if not isinstance(pred, ir.Pred) or pred.name != "isInvertible":
        return Unprovable(f"unknown predicate {pred!r}", pred, None)
    nf = normalize(pred.args[0], rules, env=env)
    if isinstance(nf, ir.Zero):
        return Unprovable("argument normalizes to the zero matrix", pred, nf)
    if is_invertible(nf):
        return Proven(pred, nf)
    return Unprovable("normal form matches no invertibility schema", pred, nf)


def check_predicate(cond: ir.Term, normalizer, ctx) -> bool:
    """Truth of a rule side condition, used by conditional equations."""
    if isinstance(cond, ir.Pred) and cond.name == "isInvertible":
        nf = normalizer.normalize(cond.args[0], ctx.env)
        return is_invertible(nf)
    return False


__all__ = ["Proven", "Unprovable", "check_requirement", "check_predicate", "is_invertible"]

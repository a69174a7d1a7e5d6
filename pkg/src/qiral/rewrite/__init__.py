"""Equational rewriting: rule construction and the default rule set."""

from __future__ import annotations

from ..errors import ShapeMismatch
from ..shapes import ShapeEnv, infer_shape, shapes_agree, symbol_shape
from .builtin import builtin_rules, definition_rule
from .engine import (Normalizer, Pattern, RewriteRule, RuleSet, instantiate, iter_matches,
                     jsonl_tracer, match_pattern, normalize, to_pattern)
from .requirements import Proven, Unprovable, check_requirement, is_invertible

DEFAULT_FUEL = 100_000


def equation_rule(eq) -> RewriteRule:
    """Turn a parsed `equation` into a rule, checking that it preserves shape."""
    names = [p.name for p in eq.params]
    lhs = to_pattern(eq.lhs, names)
    rhs = to_pattern(eq.rhs, names)
    cond = to_pattern(eq.condition, names) if eq.condition is not None else None
    env = ShapeEnv({p.name: symbol_shape(p) for p in eq.params})
    ls = infer_shape(lhs, env, strict=False)
    rs = infer_shape(rhs, env, strict=False)
    if not shapes_agree(ls, rs):
        raise ShapeMismatch(f"equation {eq.name}: {ls} on the left, {rs} on the right", eq.loc)
    return RewriteRule(eq.name, lhs, rhs, cond, kind="equation",
                       params={p.name: p for p in eq.params})


def rules_from_unit(unit, include_builtins: bool = True, fuel: int = DEFAULT_FUEL,
                    strategy: str = "innermost") -> RuleSet:
    """Builtins, then one unfolding rule per `def`, then the unit's equations."""
    rules: list[RewriteRule] = []
    if include_builtins:
        rules.extend(builtin_rules())
    rules.extend(definition_rule(name, body) for name, body in unit.defs)
    rules.extend(equation_rule(eq) for eq in unit.equations)
    return RuleSet(rules, strategy=strategy, fuel=fuel)


__all__ = [
    "DEFAULT_FUEL", "Normalizer", "Pattern", "Proven", "RewriteRule", "RuleSet", "Unprovable",
    "builtin_rules", "check_requirement", "definition_rule", "equation_rule", "instantiate",
    "is_invertible", "iter_matches", "jsonl_tracer", "match_pattern", "normalize",
    "rules_from_unit", "to_pattern",
]

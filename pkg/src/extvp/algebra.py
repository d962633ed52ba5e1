"""Query algebra: triple patterns, graph pattern operators, filters.

The tree mirrors the query text: a ``Project`` sits directly above the
pattern body, with solution modifiers (order, distinct, slice) stacked
above it.  ``Join`` appears when a group mixes a pattern block with a
union or nested group; plain pattern sequences stay a single ``Bgp``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union as TUnion

from .terms import Term


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        if not self.name or self.name.startswith("?"):
            raise ValueError(f"bad variable name {self.name!r}")

    def __str__(self) -> str:
        return f"?{self.name}"


PatternTerm = TUnion[Var, Term]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm

    def positions(self) -> tuple[tuple[str, PatternTerm], ...]:
        return (("s", self.s), ("p", self.p), ("o", self.o))

    def vars(self) -> list[Var]:
        out: list[Var] = []
        for _, t in self.positions():
            if isinstance(t, Var) and t not in out:
                out.append(t)
        return out

    def bound_count(self) -> int:
        return sum(1 for _, t in self.positions() if isinstance(t, Term))


# -- filter expressions ---------------------------------------------------

Operand = TUnion[Var, Term]

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class Comparison:
    op: str
    left: Operand
    right: Operand

    def __post_init__(self) -> None:
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class Bound:
    var: Var


@dataclass(frozen=True, slots=True)
class And:
    parts: tuple["FilterExpr", ...]


@dataclass(frozen=True, slots=True)
class Or:
    parts: tuple["FilterExpr", ...]


@dataclass(frozen=True, slots=True)
class Not:
    inner: "FilterExpr"


FilterExpr = TUnion[Comparison, Bound, And, Or, Not]


def expr_vars(expr: FilterExpr) -> set[Var]:
    if isinstance(expr, Comparison):
        return {t for t in (expr.left, expr.right) if isinstance(t, Var)}
    if isinstance(expr, Bound):
        return {expr.var}
    if isinstance(expr, (And, Or)):
        out: set[Var] = set()
        for part in expr.parts:
            out |= expr_vars(part)
        return out
    return expr_vars(expr.inner)


def split_conjuncts(expr: FilterExpr) -> list[FilterExpr]:
    """Top-level AND parts, each movable independently."""
    if isinstance(expr, And):
        out: list[FilterExpr] = []
        for part in expr.parts:
            out.extend(split_conjuncts(part))
        return out
    return [expr]


def conjoin(parts: list[FilterExpr]) -> FilterExpr:
    if not parts:
        raise ValueError("empty conjunction")
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


# -- graph pattern operators ----------------------------------------------


@dataclass(frozen=True, slots=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True, slots=True)
class Join:
    left: "Algebra"
    right: "Algebra"


@dataclass(frozen=True, slots=True)
class Filter:
    expr: FilterExpr
    child: "Algebra"


@dataclass(frozen=True, slots=True)
class LeftJoin:
    child: "Algebra"
    optional: "Algebra"


@dataclass(frozen=True, slots=True)
class UnionOp:
    left: "Algebra"
    right: "Algebra"


@dataclass(frozen=True, slots=True)
class Project:
    vars: tuple[Var, ...]
    child: "Algebra"


@dataclass(frozen=True, slots=True)
class Distinct:
    child: "Algebra"


@dataclass(frozen=True, slots=True)
class OrderBy:
    # (variable, descending) in priority order
    keys: tuple[tuple[Var, bool], ...]
    child: "Algebra"


@dataclass(frozen=True, slots=True)
class Slice:
    offset: int
    limit: int | None
    child: "Algebra"


Algebra = TUnion[Bgp, Join, Filter, LeftJoin, UnionOp, Project, Distinct, OrderBy, Slice]


def algebra_vars(node: Algebra) -> list[Var]:
    """In-scope variables in first-appearance order."""
    if isinstance(node, Bgp):
        out: list[Var] = []
        for tp in node.patterns:
            for v in tp.vars():
                if v not in out:
                    out.append(v)
        return out
    if isinstance(node, (Join, UnionOp)):
        out = algebra_vars(node.left)
        for v in algebra_vars(node.right):
            if v not in out:
                out.append(v)
        return out
    if isinstance(node, LeftJoin):
        out = algebra_vars(node.child)
        for v in algebra_vars(node.optional):
            if v not in out:
                out.append(v)
        return out
    if isinstance(node, Project):
        return list(node.vars)
    return algebra_vars(node.child)


def certain_vars(node: Algebra) -> set[Var]:
    """Variables bound in every solution the node can produce."""
    if isinstance(node, Bgp):
        return set(algebra_vars(node))
    if isinstance(node, Join):
        return certain_vars(node.left) | certain_vars(node.right)
    if isinstance(node, UnionOp):
        return certain_vars(node.left) & certain_vars(node.right)
    if isinstance(node, LeftJoin):
        return certain_vars(node.child)
    if isinstance(node, Project):
        return certain_vars(node.child) & set(node.vars)
    return certain_vars(node.child)

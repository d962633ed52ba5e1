"""SPARQL text to algebra.

Grammar coverage: PREFIX declarations, SELECT with DISTINCT and explicit
variable lists or ``*``, basic graph patterns with predicate-object and
object lists, FILTER with comparisons, boolean connectives and bound(),
OPTIONAL, UNION, ORDER BY, LIMIT and OFFSET.  Everything else that is
recognizably SPARQL (aggregates, property paths, GRAPH, subqueries,
updates, ...) raises :class:`UnsupportedQueryError` naming the construct,
so callers can distinguish "not valid" from "valid but out of scope".

Literals in queries match data byte for byte (plus the numeric-literal
equivalence applied by comparisons), so a query literal must be spelled
the way it appears in the data, datatype suffix included.  Adjacent
pattern blocks separated only by filters evaluate as a single basic
graph pattern and are merged while folding the group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import (
    Algebra,
    And,
    Bgp,
    Bound,
    Comparison,
    Distinct,
    Filter,
    FilterExpr,
    Join,
    LeftJoin,
    Not,
    Or,
    OrderBy,
    PatternTerm,
    Project,
    Slice,
    TriplePattern,
    UnionOp,
    Var,
    algebra_vars,
    certain_vars,
    conjoin,
    expr_vars,
    split_conjuncts,
)
from .terms import Term

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


class QueryError(ValueError):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnsupportedQueryError(QueryError):
    def __init__(self, construct: str) -> None:
        super().__init__(f"unsupported SPARQL construct: {construct}")
        self.construct = construct


_UNSUPPORTED_KEYWORDS = {
    "ASK": "ASK query form",
    "CONSTRUCT": "CONSTRUCT query form",
    "DESCRIBE": "DESCRIBE query form",
    "INSERT": "SPARQL Update",
    "DELETE": "SPARQL Update",
    "GRAPH": "named graphs",
    "SERVICE": "federated queries",
    "MINUS": "MINUS",
    "EXISTS": "EXISTS",
    "VALUES": "VALUES",
    "BIND": "BIND",
    "GROUP": "aggregation",
    "HAVING": "aggregation",
    "REDUCED": "REDUCED",
    "FROM": "dataset clauses",
    "BASE": "BASE declarations",
    "AS": "projection expressions",
}

_PN_CHARS = r"[A-Za-z0-9_\-]"
_PN_BODY = rf"(?:[A-Za-z0-9_.\-]*{_PN_CHARS})?"

_TOKEN_RE = re.compile(
    rf"""
    (?P<WS>\s+|\#[^\n]*)
  | (?P<IRI><[^<>"{{}}|^`\\\x00-\x20]*>)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*"(?:\^\^<[^<>"{{}}|^`\\\x00-\x20]*>|@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?)
  | (?P<VAR>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<BLANK>_:[A-Za-z0-9_]+)
  | (?P<NUMBER>[+-]?\d+(?:\.\d+)?)
  | (?P<PNAME>(?:[A-Za-z_]{_PN_BODY})?:(?:[A-Za-z0-9_]{_PN_BODY})?)
  | (?P<IDENT>[A-Za-z][A-Za-z0-9_]*)
  | (?P<OP>&&|\|\||!=|<=|>=|[=<>!(){{}}.,;*/^+?|])
    """,
    re.VERBOSE,
)

_TERM_STARTS = ("VAR", "IRI", "PNAME", "BLANK", "STRING", "NUMBER")


@dataclass(frozen=True, slots=True)
class _Token:
    type: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind != "WS":
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}

    # -- token plumbing ---------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> QuerySyntaxError:
        tok = tok or self.peek()
        return QuerySyntaxError(message, tok.line, tok.col)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.type == "IDENT" and tok.value.upper() in words

    def take_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.next()
            return True
        return False

    def expect_keyword(self, word: str) -> None:
        if not self.take_keyword(word):
            raise self.error(f"expected {word}")

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.type == "OP" and tok.value in ops

    def expect_op(self, op: str) -> None:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}")
        self.next()

    def check_unsupported(self) -> None:
        tok = self.peek()
        if tok.type == "IDENT":
            construct = _UNSUPPORTED_KEYWORDS.get(tok.value.upper())
            if construct is not None:
                raise UnsupportedQueryError(construct)

    # -- terms ------------------------------------------------------------

    def expand_pname(self, value: str, tok: _Token) -> Term:
        prefix, _, local = value.partition(":")
        base = self.prefixes.get(prefix)
        if base is None:
            raise self.error(f"undeclared prefix {prefix!r}", tok)
        return Term.iri(base + local)

    def parse_var(self) -> Var:
        tok = self.next()
        if tok.type != "VAR":
            raise self.error("expected a variable", tok)
        return Var(tok.value[1:])

    def parse_pattern_term(self, position: str) -> PatternTerm:
        tok = self.peek()
        if tok.type == "VAR":
            self.next()
            return Var(tok.value[1:])
        if tok.type == "IRI":
            self.next()
            return Term.iri(tok.value[1:-1])
        if tok.type == "PNAME":
            self.next()
            return self.expand_pname(tok.value, tok)
        if tok.type == "IDENT" and tok.value == "a" and position == "p":
            self.next()
            return Term.iri(RDF_TYPE)
        if position == "p":
            self.check_unsupported()
            raise self.error("expected a predicate (IRI or variable)", tok)
        if tok.type == "STRING":
            self.next()
            return Term.literal(tok.value)
        if tok.type == "NUMBER":
            self.next()
            return Term.literal(f'"{tok.value}"')
        if tok.type == "BLANK":
            self.next()
            return Term.blank(tok.value[2:])
        if tok.type == "IDENT" and tok.value.upper() in ("TRUE", "FALSE"):
            self.next()
            return Term.literal(f'"{tok.value.lower()}"')
        self.check_unsupported()
        raise self.error("expected an RDF term or variable", tok)

    # -- query structure --------------------------------------------------

    def parse_query(self) -> Algebra:
        while self.at_keyword("PREFIX"):
            self.next()
            name_tok = self.next()
            if name_tok.type != "PNAME" or not name_tok.value.endswith(":"):
                raise self.error("expected a prefix name ending in ':'", name_tok)
            iri_tok = self.next()
            if iri_tok.type != "IRI":
                raise self.error("expected the prefix IRI", iri_tok)
            self.prefixes[name_tok.value[:-1]] = iri_tok.value[1:-1]

        self.check_unsupported()
        self.expect_keyword("SELECT")
        distinct = self.take_keyword("DISTINCT")
        self.check_unsupported()

        select_all = False
        select_vars: list[Var] = []
        if self.at_op("*"):
            self.next()
            select_all = True
        else:
            while self.peek().type == "VAR":
                var = self.parse_var()
                if var not in select_vars:
                    select_vars.append(var)
            if not select_vars:
                self.check_unsupported()
                raise self.error("expected '*' or at least one variable")

        if self.at_keyword("WHERE"):
            self.next()
        self.check_unsupported()
        body = self.parse_group()

        order_keys: list[tuple[Var, bool]] = []
        limit: int | None = None
        offset = 0
        if self.at_keyword("ORDER"):
            self.next()
            self.expect_keyword("BY")
            while True:
                if self.peek().type == "VAR":
                    order_keys.append((self.parse_var(), False))
                elif self.at_keyword("ASC", "DESC"):
                    desc = self.next().value.upper() == "DESC"
                    self.expect_op("(")
                    order_keys.append((self.parse_var(), desc))
                    self.expect_op(")")
                else:
                    break
            if not order_keys:
                raise self.error("ORDER BY needs at least one variable")
        while self.at_keyword("LIMIT", "OFFSET"):
            word = self.next().value.upper()
            tok = self.next()
            if tok.type != "NUMBER" or not tok.value.isdigit():
                raise self.error(f"{word} expects a non-negative integer", tok)
            if word == "LIMIT":
                limit = int(tok.value)
            else:
                offset = int(tok.value)

        self.check_unsupported()
        if self.peek().type != "EOF":
            raise self.error("trailing content after query")

        if select_all:
            select_vars = algebra_vars(body)
        tree: Algebra = Project(tuple(select_vars), body)
        if order_keys:
            tree = OrderBy(tuple(order_keys), tree)
        if distinct:
            tree = Distinct(tree)
        if limit is not None or offset:
            tree = Slice(offset, limit, tree)
        return tree

    def parse_group(self) -> Algebra:
        self.expect_op("{")
        acc: Algebra = Bgp(())
        filters: list[FilterExpr] = []

        def join_in(element: Algebra) -> None:
            nonlocal acc
            if isinstance(element, Bgp) and not element.patterns:
                return
            if isinstance(acc, Bgp) and not acc.patterns:
                acc = element
            elif isinstance(acc, Bgp) and isinstance(element, Bgp):
                acc = Bgp(acc.patterns + element.patterns)
            else:
                acc = Join(acc, element)

        while not self.at_op("}"):
            if self.peek().type == "EOF":
                raise self.error("unterminated group (missing '}')")
            if self.at_op("."):
                self.next()
                continue
            if self.at_keyword("FILTER"):
                self.next()
                filters.append(self.parse_constraint())
                continue
            if self.at_keyword("OPTIONAL"):
                self.next()
                acc = LeftJoin(acc, self.parse_group())
                continue
            if self.at_op("{"):
                join_in(self.parse_union_chain())
                continue
            self.check_unsupported()
            join_in(Bgp(tuple(self.parse_triples_block())))
        self.expect_op("}")

        if filters:
            return Filter(conjoin(filters), acc)
        return acc

    def parse_union_chain(self) -> Algebra:
        node = self.parse_group()
        while self.at_keyword("UNION"):
            self.next()
            node = UnionOp(node, self.parse_group())
        return node

    def parse_triples_block(self) -> list[TriplePattern]:
        patterns: list[TriplePattern] = []
        while True:
            s = self.parse_pattern_term("s")
            while True:
                p = self.parse_pattern_term("p")
                if self.at_op("/", "^", "|", "+", "?", "*"):
                    raise UnsupportedQueryError("property paths")
                while True:
                    o = self.parse_pattern_term("o")
                    patterns.append(TriplePattern(s, p, o))
                    if self.at_op(","):
                        self.next()
                        continue
                    break
                if self.at_op(";"):
                    self.next()
                    while self.at_op(";"):
                        self.next()
                    if self.at_op(".", "}"):
                        break
                    continue
                break
            if self.at_op("."):
                self.next()
                if self.peek().type in _TERM_STARTS:
                    continue
            break
        return patterns

    # -- filter expressions ----------------------------------------------

    def parse_constraint(self) -> FilterExpr:
        if self.at_op("("):
            return self.parse_bracketted()
        if self.at_keyword("BOUND"):
            return self.parse_bound_call()
        if self.at_op("!"):
            self.next()
            return Not(self.parse_unary())
        tok = self.peek()
        if tok.type == "IDENT":
            self.check_unsupported()
            raise UnsupportedQueryError(f"built-in function {tok.value}()")
        raise self.error("expected a bracketted expression or bound()")

    def parse_bracketted(self) -> FilterExpr:
        self.expect_op("(")
        expr = self.parse_or()
        self.expect_op(")")
        return expr

    def parse_or(self) -> FilterExpr:
        parts = [self.parse_and()]
        while self.at_op("||"):
            self.next()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and(self) -> FilterExpr:
        parts = [self.parse_unary()]
        while self.at_op("&&"):
            self.next()
            parts.append(self.parse_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_unary(self) -> FilterExpr:
        if self.at_op("!"):
            self.next()
            return Not(self.parse_unary())
        if self.at_op("("):
            return self.parse_bracketted()
        if self.at_keyword("BOUND"):
            return self.parse_bound_call()
        return self.parse_comparison()

    def parse_bound_call(self) -> FilterExpr:
        self.expect_keyword("BOUND")
        self.expect_op("(")
        var = self.parse_var()
        self.expect_op(")")
        return Bound(var)

    def parse_operand(self) -> PatternTerm:
        tok = self.peek()
        if tok.type == "IDENT" and tok.value.upper() not in ("TRUE", "FALSE"):
            self.check_unsupported()
            raise UnsupportedQueryError(f"built-in function {tok.value}()")
        return self.parse_pattern_term("o")

    def parse_comparison(self) -> FilterExpr:
        left = self.parse_operand()
        tok = self.peek()
        if tok.type == "OP" and tok.value in ("=", "!=", "<", "<=", ">", ">="):
            self.next()
            right = self.parse_operand()
            return Comparison(tok.value, left, right)
        raise self.error("expected a comparison operator")


def parse_query(text: str) -> Algebra:
    """Parse query text; raises on syntax errors and unsupported constructs."""
    return _Parser(text).parse_query()


# -- filter pushing -------------------------------------------------------


def _sink(expr: FilterExpr, node: Algebra) -> Algebra | None:
    """Place ``expr`` on the lowest node that binds all its variables.

    Returns the rewritten node, or ``None`` when the filter has to stay
    above ``node``.  Filters never cross into the optional side of a
    LeftJoin, and only move into a join side that binds every referenced
    variable in all of its solutions.
    """
    vars_needed = expr_vars(expr)
    if isinstance(node, Bgp):
        if vars_needed <= set(algebra_vars(node)):
            return Filter(expr, node)
        return None
    if isinstance(node, Filter):
        sunk = _sink(expr, node.child)
        if sunk is None:
            return None
        return Filter(node.expr, sunk)
    if isinstance(node, Join):
        if vars_needed <= certain_vars(node.left):
            sunk = _sink(expr, node.left) or Filter(expr, node.left)
            return Join(sunk, node.right)
        if vars_needed <= certain_vars(node.right):
            sunk = _sink(expr, node.right) or Filter(expr, node.right)
            return Join(node.left, sunk)
        return None
    if isinstance(node, LeftJoin):
        if vars_needed <= certain_vars(node.child):
            sunk = _sink(expr, node.child) or Filter(expr, node.child)
            return LeftJoin(sunk, node.optional)
        return None
    if isinstance(node, UnionOp):
        left_vars = set(algebra_vars(node.left))
        right_vars = set(algebra_vars(node.right))
        if vars_needed <= left_vars and vars_needed <= right_vars:
            left = _sink(expr, node.left) or Filter(expr, node.left)
            right = _sink(expr, node.right) or Filter(expr, node.right)
            return UnionOp(left, right)
        return None
    return None


def push_filters(node: Algebra) -> Algebra:
    """Move filter conjuncts to the lowest scope binding their variables.

    A pure rewrite of the algebra tree; results are unchanged.  Conjuncts
    travel independently, and whatever cannot move stays where it was.
    """
    if isinstance(node, Filter):
        child = push_filters(node.child)
        remaining: list[FilterExpr] = []
        for conjunct in split_conjuncts(node.expr):
            sunk = _sink(conjunct, child)
            if sunk is None:
                remaining.append(conjunct)
            else:
                child = sunk
        if remaining:
            return Filter(conjoin(remaining), child)
        return child
    if isinstance(node, Join):
        return Join(push_filters(node.left), push_filters(node.right))
    if isinstance(node, LeftJoin):
        return LeftJoin(push_filters(node.child), push_filters(node.optional))
    if isinstance(node, UnionOp):
        return UnionOp(push_filters(node.left), push_filters(node.right))
    if isinstance(node, Project):
        return Project(node.vars, push_filters(node.child))
    if isinstance(node, Distinct):
        return Distinct(push_filters(node.child))
    if isinstance(node, OrderBy):
        return OrderBy(node.keys, push_filters(node.child))
    if isinstance(node, Slice):
        return Slice(node.offset, node.limit, push_filters(node.child))
    return node


# -- pretty printing ------------------------------------------------------


def _format_term(t: PatternTerm) -> str:
    if isinstance(t, Var):
        return str(t)
    return t.n3()


def _format_expr(expr: FilterExpr) -> str:
    if isinstance(expr, Comparison):
        return f"{_format_term(expr.left)} {expr.op} {_format_term(expr.right)}"
    if isinstance(expr, Bound):
        return f"bound({expr.var})"
    if isinstance(expr, And):
        return " && ".join(f"({_format_expr(p)})" for p in expr.parts)
    if isinstance(expr, Or):
        return " || ".join(f"({_format_expr(p)})" for p in expr.parts)
    return f"!({_format_expr(expr.inner)})"


def _top_parts(expr: FilterExpr) -> tuple[FilterExpr, ...]:
    if isinstance(expr, And):
        return expr.parts
    return (expr,)


def _braced(node: Algebra, lines: list[str], indent: str) -> None:
    lines.append(f"{indent}{{")
    _group_lines(node, lines, indent + "  ")
    lines.append(f"{indent}}}")


def _group_lines(node: Algebra, lines: list[str], indent: str) -> None:
    if isinstance(node, Bgp):
        for tp in node.patterns:
            lines.append(
                f"{indent}{_format_term(tp.s)} {_format_term(tp.p)} {_format_term(tp.o)} ."
            )
        return
    if isinstance(node, Filter):
        _group_lines(node.child, lines, indent)
        for conjunct in _top_parts(node.expr):
            lines.append(f"{indent}FILTER({_format_expr(conjunct)})")
        return
    if isinstance(node, Join):
        # a Filter child keeps its own brace scope so its constraints do
        # not float up to this group on reparse
        if isinstance(node.left, Filter):
            _braced(node.left, lines, indent)
        else:
            _group_lines(node.left, lines, indent)
        if isinstance(node.right, UnionOp):
            _union_lines(node.right, lines, indent)
        else:
            _braced(node.right, lines, indent)
        return
    if isinstance(node, LeftJoin):
        if isinstance(node.child, Filter):
            _braced(node.child, lines, indent)
        else:
            _group_lines(node.child, lines, indent)
        lines.append(f"{indent}OPTIONAL {{")
        _group_lines(node.optional, lines, indent + "  ")
        lines.append(f"{indent}}}")
        return
    if isinstance(node, UnionOp):
        _union_lines(node, lines, indent)
        return
    raise ValueError(f"unexpected node inside a group: {type(node).__name__}")


def _union_lines(node: UnionOp, lines: list[str], indent: str) -> None:
    left = node.left
    if isinstance(left, UnionOp):
        _union_lines(left, lines, indent)
    else:
        lines.append(f"{indent}{{")
        _group_lines(left, lines, indent + "  ")
        lines.append(f"{indent}}}")
    lines.append(f"{indent}UNION")
    lines.append(f"{indent}{{")
    _group_lines(node.right, lines, indent + "  ")
    lines.append(f"{indent}}}")


def format_query(tree: Algebra) -> str:
    """Render the algebra back to query text that reparses to the same tree."""
    limit: int | None = None
    offset = 0
    distinct = False
    order_keys: tuple[tuple[Var, bool], ...] = ()

    node = tree
    if isinstance(node, Slice):
        limit, offset = node.limit, node.offset
        node = node.child
    if isinstance(node, Distinct):
        distinct = True
        node = node.child
    if isinstance(node, OrderBy):
        order_keys = node.keys
        node = node.child
    if not isinstance(node, Project):
        raise ValueError("expected a Project beneath the solution modifiers")

    head = "SELECT "
    if distinct:
        head += "DISTINCT "
    head += " ".join(str(v) for v in node.vars) if node.vars else "*"
    lines = [head, "WHERE {"]
    _group_lines(node.child, lines, "  ")
    lines.append("}")
    if order_keys:
        rendered = " ".join(f"DESC({v})" if desc else str(v) for v, desc in order_keys)
        lines.append(f"ORDER BY {rendered}")
    if limit is not None:
        lines.append(f"LIMIT {limit}")
    if offset:
        lines.append(f"OFFSET {offset}")
    return "\n".join(lines) + "\n"

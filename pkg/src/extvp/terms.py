"""RDF terms, triples and the id dictionary.

Terms are immutable values identified by kind plus lexical form, compared
byte for byte.  The dictionary assigns dense integer ids in first-appearance
order so that everything downstream (tables, plans, the executor) works on
plain ints and only touches lexical forms at the edges.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple


class TermKind(enum.Enum):
    IRI = "iri"
    LITERAL = "literal"
    BLANK = "blank"


@dataclass(frozen=True, slots=True)
class Term:
    """A single RDF term.

    The lexical form is stored verbatim:

    * IRI: the text between the angle brackets,
    * literal: the full quoted token including any datatype or language
      suffix, e.g. ``"42"^^<http://www.w3.org/2001/XMLSchema#integer>``,
    * blank node: the label without the ``_:`` prefix.

    No value-space normalization happens here; two terms are equal exactly
    when kind and lexical form are byte-equal.
    """

    kind: TermKind
    lexical: str

    def __post_init__(self) -> None:
        if self.kind in (TermKind.IRI, TermKind.BLANK) and not self.lexical:
            raise ValueError(f"empty lexical form for {self.kind.value} term")
        if self.kind is TermKind.LITERAL and not self.lexical.startswith('"'):
            raise ValueError("literal lexical form must carry its quotes")

    @staticmethod
    def iri(text: str) -> "Term":
        return Term(TermKind.IRI, text)

    @staticmethod
    def literal(token: str) -> "Term":
        """Build a literal from its full quoted token, suffix included."""
        return Term(TermKind.LITERAL, token)

    @staticmethod
    def blank(label: str) -> "Term":
        return Term(TermKind.BLANK, label)

    def n3(self) -> str:
        """Render the term the way it appears in a triples file."""
        if self.kind is TermKind.IRI:
            return f"<{self.lexical}>"
        if self.kind is TermKind.BLANK:
            return f"_:{self.lexical}"
        return self.lexical


class Triple(NamedTuple):
    """A dictionary-encoded triple."""

    s: int
    p: int
    o: int


class Dictionary:
    """Bidirectional term <-> id map with dense ids starting at 0."""

    def __init__(self) -> None:
        self._terms: list[Term] = []
        self._index: dict[Term, int] = {}

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: Term) -> bool:
        return term in self._index

    def encode(self, term: Term) -> int:
        """Return the id for ``term``, assigning the next free one if new."""
        tid = self._index.get(term)
        if tid is None:
            tid = len(self._terms)
            self._terms.append(term)
            self._index[term] = tid
        return tid

    def lookup(self, term: Term) -> int | None:
        """Like :meth:`encode` but never assigns; ``None`` when absent."""
        return self._index.get(term)

    def decode(self, tid: int) -> Term:
        if 0 <= tid < len(self._terms):
            return self._terms[tid]
        raise LookupError(f"unknown term id {tid}")

    def terms(self) -> Iterator[tuple[int, Term]]:
        return enumerate(self._terms)


@dataclass
class Graph:
    """An encoded triple set plus its dictionary.

    Duplicate input triples are collapsed; ``triples`` preserves the
    first-appearance order of the surviving triples.
    """

    dictionary: Dictionary
    triples: list[Triple]
    predicates: list[int]

    @property
    def n(self) -> int:
        return len(self.triples)

    @property
    def k(self) -> int:
        return len(self.predicates)

    @classmethod
    def from_terms(cls, spo: Iterable[tuple[Term, Term, Term]]) -> "Graph":
        d = Dictionary()
        triples: list[Triple] = []
        seen: set[Triple] = set()
        predicates: list[int] = []
        pred_seen: set[int] = set()
        for s, p, o in spo:
            t = Triple(d.encode(s), d.encode(p), d.encode(o))
            if t in seen:
                continue
            seen.add(t)
            triples.append(t)
            if t.p not in pred_seen:
                pred_seen.add(t.p)
                predicates.append(t.p)
        return cls(d, triples, predicates)

    def predicate_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {p: 0 for p in self.predicates}
        for t in self.triples:
            sizes[t.p] += 1
        return sizes

"""Table kinds, keys and the in-memory row containers.

Five kinds of table exist in a store: the full triples table ``TT``, one
``VP`` table per predicate holding that predicate's (subject, object)
pairs, and the three families of precomputed semi-join reductions ``SS``,
``OS`` and ``SO`` keyed by an ordered predicate pair.  An object-object
family is deliberately not represented: object overlap is dominated by
shared literals and its reductions are rarely selective.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .terms import Dictionary, Triple


class TableKind(enum.IntEnum):
    TT = 0
    VP = 1
    SS = 2
    OS = 3
    SO = 4

    @property
    def is_correlation(self) -> bool:
        return self in (TableKind.SS, TableKind.OS, TableKind.SO)


CORRELATION_KINDS = (TableKind.SS, TableKind.OS, TableKind.SO)


@dataclass(frozen=True, slots=True)
class TableKey:
    """Identity of one table: kind plus zero, one or two predicate ids."""

    kind: TableKind
    p1: int | None = None
    p2: int | None = None

    def __post_init__(self) -> None:
        if self.kind is TableKind.TT:
            if self.p1 is not None or self.p2 is not None:
                raise ValueError("TT key carries no predicates")
        elif self.kind is TableKind.VP:
            if self.p1 is None or self.p2 is not None:
                raise ValueError("VP key carries exactly one predicate")
        else:
            if self.p1 is None or self.p2 is None:
                raise ValueError(f"{self.kind.name} key needs two predicates")
            if self.kind is TableKind.SS and self.p1 == self.p2:
                raise ValueError("SS over a single predicate is the VP table itself")

    @staticmethod
    def tt() -> "TableKey":
        return TableKey(TableKind.TT)

    @staticmethod
    def vp(p: int) -> "TableKey":
        return TableKey(TableKind.VP, p)

    @staticmethod
    def correlation(kind: TableKind, p1: int, p2: int) -> "TableKey":
        if not kind.is_correlation:
            raise ValueError(f"{kind.name} is not a correlation kind")
        return TableKey(kind, p1, p2)

    def render(self, dictionary: Dictionary | None = None) -> str:
        """Human-readable form for reports and plan explanations."""
        def name(p: int) -> str:
            if dictionary is None:
                return str(p)
            return dictionary.decode(p).lexical

        if self.kind is TableKind.TT:
            return "TT"
        if self.kind is TableKind.VP:
            return f"VP({name(self.p1)})"
        return f"{self.kind.name}({name(self.p1)}|{name(self.p2)})"


def _canonical_pairs(rows: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    return sorted(set(rows))


@dataclass
class PairTable:
    """Sorted, duplicate-free (subject, object) rows of one two-column table."""

    rows: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def build(cls, rows: Iterable[tuple[int, int]]) -> "PairTable":
        return cls(_canonical_pairs(rows))

    @property
    def count(self) -> int:
        return len(self.rows)

    def is_canonical(self) -> bool:
        return all(a < b for a, b in zip(self.rows, self.rows[1:]))

    def subjects(self) -> set[int]:
        return {s for s, _ in self.rows}

    def objects(self) -> set[int]:
        return {o for _, o in self.rows}


@dataclass
class TripleTable:
    """Sorted, duplicate-free (s, p, o) rows of the full triples table."""

    rows: list[Triple] = field(default_factory=list)

    @classmethod
    def build(cls, rows: Iterable[Triple]) -> "TripleTable":
        return cls(sorted(set(rows)))

    @property
    def count(self) -> int:
        return len(self.rows)

    def is_canonical(self) -> bool:
        return all(a < b for a, b in zip(self.rows, self.rows[1:]))

"""Per-table statistics and the manifest that persists them.

Every table carries a selectivity factor: the fraction of the base VP
table's rows that survive the semi-join reduction, kept as an exact
rational so thresholds compare without float noise.  VP tables have
factor 1 by definition; TT records 1 as a placeholder since no base
table exists for it.  Reduction entries exist for every examined ordered
predicate pair, including empty ones (factor 0) and those equal to their
VP table (factor 1), whether or not a file was materialized.  That makes
the catalog the single place the planner needs to consult.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from .storage import Store, escape_field, unescape_field
from .tables import PairTable, TableKey, TableKind, TripleTable
from .terms import Dictionary, Term


class CatalogError(Exception):
    pass


class DuplicateEntryError(CatalogError):
    pass


@dataclass(frozen=True, slots=True)
class TableStats:
    key: TableKey
    tuple_count: int
    sf: Fraction
    materialized: bool

    def __post_init__(self) -> None:
        if self.tuple_count < 0:
            raise ValueError("negative tuple count")
        if not 0 <= self.sf <= 1:
            raise ValueError(f"selectivity factor {self.sf} outside [0, 1]")


@dataclass
class Catalog:
    """All statistics of one store, keyed by table identity."""

    n: int = 0
    k: int = 0
    threshold: Fraction | None = None
    _stats: dict[TableKey, TableStats] = field(default_factory=dict)

    def add(self, stats: TableStats) -> None:
        if stats.key in self._stats:
            raise DuplicateEntryError(f"{stats.key.render()}: stats already recorded")
        self._stats[stats.key] = stats

    def get(self, key: TableKey) -> TableStats | None:
        """Raw access: the recorded entry or ``None``."""
        return self._stats.get(key)

    def vp_size(self, p: int) -> int:
        entry = self._stats.get(TableKey.vp(p))
        if entry is None:
            raise CatalogError(f"no VP table recorded for predicate id {p}")
        return entry.tuple_count

    def lookup(self, key: TableKey) -> TableStats:
        """Entry for ``key``, synthesizing the fallback for unexamined pairs.

        A correlation key that was never examined (its kind disabled during
        the build, or no reduction build ran) behaves like its VP table:
        factor 1, not materialized.  An unknown predicate id raises.
        """
        entry = self._stats.get(key)
        if entry is not None:
            return entry
        if key.kind.is_correlation:
            base = self.vp_size(key.p1)
            if self._stats.get(TableKey.vp(key.p2)) is None:
                raise CatalogError(f"no VP table recorded for predicate id {key.p2}")
            return TableStats(key, base, Fraction(1), False)
        raise CatalogError(f"{key.render()}: no stats recorded")

    def entries(self) -> Iterator[TableStats]:
        def order(key: TableKey) -> tuple[int, int, int]:
            return (key.kind.value, key.p1 or 0, key.p2 or 0)

        for key in sorted(self._stats, key=order):
            yield self._stats[key]

    def correlation_entries(self) -> Iterator[TableStats]:
        return (e for e in self.entries() if e.key.kind.is_correlation)

    def materialized_keys(self) -> list[TableKey]:
        return [e.key for e in self.entries() if e.materialized]

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path, dictionary: Dictionary) -> None:
        def iri(p: int | None) -> str:
            return "" if p is None else escape_field(dictionary.decode(p).lexical)

        lines = []
        for e in self.entries():
            lines.append(
                "\t".join(
                    (
                        e.key.kind.name,
                        iri(e.key.p1),
                        iri(e.key.p2),
                        str(e.tuple_count),
                        str(e.sf.numerator),
                        str(e.sf.denominator),
                        "1" if e.materialized else "0",
                    )
                )
            )
        Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    @classmethod
    def load(
        cls,
        path: str | Path,
        dictionary: Dictionary,
        n: int = 0,
        k: int = 0,
        threshold: Fraction | None = None,
    ) -> "Catalog":
        cat = cls(n=n, k=k, threshold=threshold)
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 7:
                raise CatalogError(f"{path}:{lineno}: expected 7 fields")
            kind_name, p1_iri, p2_iri, count, num, den, mat = parts
            try:
                kind = TableKind[kind_name]
            except KeyError:
                raise CatalogError(f"{path}:{lineno}: unknown table kind {kind_name!r}")

            def pred(token: str) -> int | None:
                if not token:
                    return None
                tid = dictionary.lookup(Term.iri(unescape_field(token)))
                if tid is None:
                    raise CatalogError(
                        f"{path}:{lineno}: predicate {token!r} not in dictionary"
                    )
                return tid

            key = TableKey(kind, pred(p1_iri), pred(p2_iri))
            cat.add(TableStats(key, int(count), Fraction(int(num), int(den)), mat == "1"))
        return cat


def write_table(
    store: Store,
    catalog: Catalog,
    key: TableKey,
    table: PairTable | TripleTable,
    sf: Fraction | None = None,
) -> TableStats:
    """Write one table and record its statistics.

    An empty table is recorded (factor 0) without creating a file.  The
    selectivity factor defaults to 1 for TT/VP and to count over the base
    VP size for reductions; pass ``sf`` to override when the table is a
    threshold-filtered reduction that stays unmaterialized.
    """
    if not table.is_canonical():
        raise ValueError(f"{key.render()}: rows not sorted and duplicate-free")
    if sf is None:
        if key.kind.is_correlation:
            base = catalog.vp_size(key.p1)
            sf = Fraction(table.count, base) if base else Fraction(0)
        else:
            sf = Fraction(1)
    materialized = table.count > 0
    if materialized:
        if isinstance(table, TripleTable):
            store.write_triples(table)
        else:
            store.write_pairs(key, table)
    stats = TableStats(key, table.count, sf, materialized)
    catalog.add(stats)
    return stats


def read_table(store: Store, key: TableKey) -> PairTable | TripleTable:
    if key.kind is TableKind.TT:
        return store.read_triples()
    return store.read_pairs(key)

"""Vertical partitioning and semi-join reduction builds.

``build_vp`` splits the triples table into one two-column table per
predicate.  ``build_extvp`` then precomputes, for ordered predicate pairs,
the subset of a VP table that can survive a join with another predicate's
table: subject-subject, object-subject and subject-object overlaps (the
object-object family is intentionally skipped, see :mod:`.tables`).

Each reduction's selectivity factor is recorded exactly; only factors
strictly below the configured threshold are materialized as files.  Empty
reductions and those equal to their VP table are recorded as statistics
only, which is what lets the planner short-circuit provably empty joins
and skip useless candidates without touching the disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .catalog import Catalog, TableStats, write_table
from .storage import Store
from .tables import CORRELATION_KINDS, PairTable, TableKey, TableKind, TripleTable
from .terms import Graph


@dataclass
class BuildConfig:
    """Reduction build settings.

    The threshold is exclusive: a reduction is materialized when
    ``0 < sf < threshold``.  At the default of 1 everything non-empty and
    smaller than its VP table is stored; factor-1 tables never are, since
    the VP table itself already answers those scans.
    """

    threshold: Fraction = Fraction(1)
    compute_ss: bool = True
    compute_os: bool = True
    compute_so: bool = True

    def __post_init__(self) -> None:
        self.threshold = Fraction(self.threshold)
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold {self.threshold} outside (0, 1]")

    def enabled_kinds(self) -> list[TableKind]:
        flags = {
            TableKind.SS: self.compute_ss,
            TableKind.OS: self.compute_os,
            TableKind.SO: self.compute_so,
        }
        return [kind for kind in CORRELATION_KINDS if flags[kind]]


@dataclass
class BuildReport:
    pairs_examined: int = 0
    materialized: int = 0
    empty: int = 0
    equal_vp: int = 0
    above_threshold: int = 0
    materialized_tuples: int = 0
    elapsed_s: float = 0.0

    def summary(self) -> str:
        return (
            f"{self.pairs_examined} pairs examined: "
            f"{self.materialized} materialized ({self.materialized_tuples} tuples), "
            f"{self.empty} empty, {self.equal_vp} equal to VP, "
            f"{self.above_threshold} above threshold "
            f"[{self.elapsed_s:.2f}s]"
        )


class VpIndex:
    """Per-predicate pair tables plus their subject and object sets.

    The column sets are built once and shared by correlation discovery and
    every reduction over the same predicate, which keeps the build linear
    in the data per examined pair.
    """

    def __init__(self, graph: Graph) -> None:
        rows: dict[int, list[tuple[int, int]]] = {p: [] for p in graph.predicates}
        for t in graph.triples:
            rows[t.p].append((t.s, t.o))
        self.predicates = list(graph.predicates)
        self.tables = {p: PairTable.build(r) for p, r in rows.items()}
        self.subjects = {p: t.subjects() for p, t in self.tables.items()}
        self.objects = {p: t.objects() for p, t in self.tables.items()}


def build_vp(graph: Graph, store: Store) -> Catalog:
    """Write TT plus one VP table per predicate; returns the seeded catalog."""
    catalog = Catalog(n=graph.n, k=graph.k)
    write_table(store, catalog, TableKey.tt(), TripleTable.build(graph.triples))
    index = VpIndex(graph)
    for p in sorted(index.predicates):
        write_table(store, catalog, TableKey.vp(p), index.tables[p])
    return catalog


def _filter_columns(kind: TableKind) -> tuple[str, str]:
    # which column of the reduced table is matched against which column
    # of the reducing table
    return {
        TableKind.SS: ("s", "s"),
        TableKind.OS: ("o", "s"),
        TableKind.SO: ("s", "o"),
    }[kind]


def semi_join_reduce(left: PairTable, right: PairTable, kind: TableKind) -> PairTable:
    """Rows of ``left`` that have a join partner in ``right``.

    ``kind`` names the matched columns: SS keeps left rows whose subject
    appears among right's subjects, OS matches left objects against right
    subjects, SO matches left subjects against right objects.  The result
    is a subset of ``left`` and inherits its canonical order.
    """
    left_col, right_col = _filter_columns(kind)
    keys = right.subjects() if right_col == "s" else right.objects()
    if left_col == "s":
        rows = [row for row in left.rows if row[0] in keys]
    else:
        rows = [row for row in left.rows if row[1] in keys]
    return PairTable(rows)


def _correlated(index: VpIndex, kind: TableKind, p1: int, p2: int) -> bool:
    left_col, right_col = _filter_columns(kind)
    left = index.subjects[p1] if left_col == "s" else index.objects[p1]
    right = index.subjects[p2] if right_col == "s" else index.objects[p2]
    return not left.isdisjoint(right)


def discover_correlations(graph: Graph, kind: TableKind, p: int) -> set[int]:
    """Predicates whose table keeps at least one row when reduced by ``p``.

    Answers, from the VP tables alone, which reductions of the given kind
    against predicate ``p`` are worth computing; every predicate outside
    the result is guaranteed an empty reduction.
    """
    if not kind.is_correlation:
        raise ValueError(f"{kind.name} is not a correlation kind")
    index = VpIndex(graph)
    if p not in index.tables:
        raise ValueError(f"predicate id {p} has no VP table")
    return {
        q
        for q in index.predicates
        if not (kind is TableKind.SS and q == p) and _correlated(index, kind, q, p)
    }


def build_extvp(graph: Graph, store: Store, config: BuildConfig) -> Catalog:
    """Compute and store the reduction tables for every enabled kind.

    Pairs run in a fixed order (kind, then both predicate ids ascending)
    so repeated builds produce identical stores.  Returns a catalog that
    also contains the TT and VP entries; the caller persists it.
    """
    catalog = build_vp(graph, store)
    catalog.threshold = config.threshold
    index = VpIndex(graph)
    preds = sorted(index.predicates)

    for kind in config.enabled_kinds():
        for p1 in preds:
            base = index.tables[p1]
            for p2 in preds:
                if kind is TableKind.SS and p1 == p2:
                    continue
                key = TableKey.correlation(kind, p1, p2)
                if not _correlated(index, kind, p1, p2):
                    # pruned pair: the reduction is provably empty
                    catalog.add(TableStats(key, 0, Fraction(0), False))
                    continue
                reduced = semi_join_reduce(base, index.tables[p2], kind)
                sf = Fraction(reduced.count, base.count)
                if 0 < sf < config.threshold:
                    write_table(store, catalog, key, reduced)
                else:
                    catalog.add(TableStats(key, reduced.count, sf, False))

    return catalog


def estimate_extvp_upper_bound(k: int, n: int | Fraction) -> Fraction:
    """Worst-case total tuple count over all reduction tables.

    Per predicate pair each family can at most duplicate the smaller VP
    table; summed over (3k - 1) effective directions this bounds the whole
    reduction layer by (3k - 1) * n / 2 tuples.
    """
    if k < 0:
        raise ValueError("negative predicate count")
    if n < 0:
        raise ValueError("negative triple count")
    if k == 0:
        return Fraction(0)
    return Fraction(3 * k - 1) * Fraction(n) / 2


def summarize(catalog: Catalog) -> BuildReport:
    """Reconstruct build counts from a loaded catalog."""
    report = BuildReport()
    for e in catalog.correlation_entries():
        report.pairs_examined += 1
        if e.materialized:
            report.materialized += 1
            report.materialized_tuples += e.tuple_count
        elif e.sf == 0:
            report.empty += 1
        elif e.sf == 1:
            report.equal_vp += 1
        else:
            report.above_threshold += 1
    return report

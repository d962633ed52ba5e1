"""On-disk store layout and binary table files.

A store is a directory::

    <db>/
        meta.json       build metadata (counts, threshold, timestamp)
        dict.tsv        id <TAB> kind <TAB> escaped lexical form
        manifest.tsv    per-table statistics, written by the catalog
        tables/*.evp    binary table files
        lock            present only while a writer is active

Table files share one header: magic ``EVP1``, a kind byte (0=TT, 1=VP,
2=SS, 3=OS, 4=SO), ``p1`` and ``p2`` as little-endian u64 (``2**64 - 1``
when absent), then the row count as u64.  Rows follow as little-endian
u64 pairs (subject, object); TT rows are u64 triples.  Stores are written
by exactly one writer at a time and are immutable afterwards, so readers
never need the lock.
"""

from __future__ import annotations

import json
import os
import struct
import sys
from array import array
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .tables import PairTable, TableKey, TableKind, TripleTable
from .terms import Dictionary, Term, TermKind, Triple

MAGIC = b"EVP1"
NO_PREDICATE = 2**64 - 1
_HEADER = struct.Struct("<4sBQQQ")

_KIND_TOKENS = {
    TermKind.IRI: "iri",
    TermKind.LITERAL: "literal",
    TermKind.BLANK: "blank",
}
_TOKEN_KINDS = {v: k for k, v in _KIND_TOKENS.items()}


class StoreError(Exception):
    pass


class MissingStoreError(StoreError):
    pass


class MissingTableError(StoreError):
    pass


class CorruptTableError(StoreError):
    pass


class StoreLockedError(StoreError):
    pass


def escape_field(text: str) -> str:
    return (
        text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
    )


def unescape_field(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _file_stem(key: TableKey) -> str:
    if key.kind is TableKind.TT:
        return "tt"
    if key.kind is TableKind.VP:
        return f"vp_{key.p1}"
    return f"{key.kind.name.lower()}_{key.p1}_{key.p2}"


def _write_u64s(fh, values: array) -> None:
    if sys.byteorder == "big":
        values = array("Q", values)
        values.byteswap()
    values.tofile(fh)


def _read_u64s(fh, count: int, path: Path) -> array:
    values = array("Q")
    try:
        values.fromfile(fh, count)
    except EOFError:
        raise CorruptTableError(f"{path}: truncated row payload")
    if sys.byteorder == "big":
        values.byteswap()
    return values


class Store:
    """Handle on one store directory."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    @property
    def meta_path(self) -> Path:
        return self.root / "meta.json"

    @property
    def dict_path(self) -> Path:
        return self.root / "dict.tsv"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.tsv"

    @property
    def tables_dir(self) -> Path:
        return self.root / "tables"

    @classmethod
    def create(cls, root: str | Path) -> "Store":
        store = cls(Path(root))
        store.tables_dir.mkdir(parents=True, exist_ok=True)
        if not store.meta_path.exists():
            store.write_meta({"format": 1})
        return store

    @classmethod
    def open(cls, root: str | Path) -> "Store":
        store = cls(Path(root))
        if not store.meta_path.exists():
            raise MissingStoreError(f"{root}: not a store (no meta.json)")
        return store

    @contextmanager
    def lock(self) -> Iterator[None]:
        """Exclusive writer lock; readers of a finished store skip it."""
        path = self.root / "lock"
        self.root.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLockedError(
                f"{self.root}: another writer holds the lock "
                "(remove the lock file if that writer is gone)"
            )
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield
        finally:
            try:
                path.unlink()
            except FileNotFoundError:
                pass

    # -- metadata ---------------------------------------------------------

    def write_meta(self, meta: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.meta_path.write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def read_meta(self) -> dict:
        try:
            return json.loads(self.meta_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MissingStoreError(f"{self.root}: not a store (no meta.json)")

    def update_meta(self, **fields) -> dict:
        meta = self.read_meta()
        meta.update(fields)
        self.write_meta(meta)
        return meta

    # -- dictionary -------------------------------------------------------

    def write_dictionary(self, dictionary: Dictionary) -> None:
        lines = [
            f"{tid}\t{_KIND_TOKENS[term.kind]}\t{escape_field(term.lexical)}"
            for tid, term in dictionary.terms()
        ]
        self.dict_path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    def read_dictionary(self) -> Dictionary:
        d = Dictionary()
        try:
            text = self.dict_path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise MissingStoreError(f"{self.root}: store has no dictionary")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise CorruptTableError(f"{self.dict_path}:{lineno}: bad record")
            tid, kind_token, lexical = parts
            try:
                kind = _TOKEN_KINDS[kind_token]
            except KeyError:
                raise CorruptTableError(
                    f"{self.dict_path}:{lineno}: unknown term kind {kind_token!r}"
                )
            assigned = d.encode(Term(kind, unescape_field(lexical)))
            if assigned != int(tid):
                raise CorruptTableError(
                    f"{self.dict_path}:{lineno}: ids not dense (got {tid}, expected {assigned})"
                )
        return d

    # -- table files ------------------------------------------------------

    def table_path(self, key: TableKey) -> Path:
        return self.tables_dir / f"{_file_stem(key)}.evp"

    def has_table(self, key: TableKey) -> bool:
        return self.table_path(key).exists()

    def _write_header(self, fh, key: TableKey, count: int) -> None:
        p1 = NO_PREDICATE if key.p1 is None else key.p1
        p2 = NO_PREDICATE if key.p2 is None else key.p2
        fh.write(_HEADER.pack(MAGIC, key.kind.value, p1, p2, count))

    def _read_header(self, fh, key: TableKey, path: Path) -> int:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise CorruptTableError(f"{path}: short header")
        magic, kind, p1, p2, count = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise CorruptTableError(f"{path}: bad magic {magic!r}")
        want_p1 = NO_PREDICATE if key.p1 is None else key.p1
        want_p2 = NO_PREDICATE if key.p2 is None else key.p2
        if kind != key.kind.value or p1 != want_p1 or p2 != want_p2:
            raise CorruptTableError(
                f"{path}: header identifies a different table "
                f"(kind={kind} p1={p1} p2={p2})"
            )
        return count

    def write_pairs(self, key: TableKey, table: PairTable) -> None:
        if key.kind is TableKind.TT:
            raise ValueError("TT rows are triples; use write_triples")
        self.tables_dir.mkdir(parents=True, exist_ok=True)
        payload = array("Q")
        for s, o in table.rows:
            payload.append(s)
            payload.append(o)
        with open(self.table_path(key), "wb") as fh:
            self._write_header(fh, key, table.count)
            _write_u64s(fh, payload)

    def read_pairs(self, key: TableKey) -> PairTable:
        path = self.table_path(key)
        try:
            fh = open(path, "rb")
        except FileNotFoundError:
            raise MissingTableError(f"{key.render()}: table file not present")
        with fh:
            count = self._read_header(fh, key, path)
            payload = _read_u64s(fh, 2 * count, path)
            if fh.read(1):
                raise CorruptTableError(f"{path}: trailing bytes after rows")
        rows = list(zip(payload[0::2], payload[1::2]))
        return PairTable([(int(s), int(o)) for s, o in rows])

    def write_triples(self, table: TripleTable) -> None:
        self.tables_dir.mkdir(parents=True, exist_ok=True)
        key = TableKey.tt()
        payload = array("Q")
        for s, p, o in table.rows:
            payload.append(s)
            payload.append(p)
            payload.append(o)
        with open(self.table_path(key), "wb") as fh:
            self._write_header(fh, key, table.count)
            _write_u64s(fh, payload)

    def read_triples(self) -> TripleTable:
        key = TableKey.tt()
        path = self.table_path(key)
        try:
            fh = open(path, "rb")
        except FileNotFoundError:
            raise MissingTableError("TT: table file not present")
        with fh:
            count = self._read_header(fh, key, path)
            payload = _read_u64s(fh, 3 * count, path)
            if fh.read(1):
                raise CorruptTableError(f"{path}: trailing bytes after rows")
        rows = [
            Triple(int(payload[i]), int(payload[i + 1]), int(payload[i + 2]))
            for i in range(0, len(payload), 3)
        ]
        return TripleTable(rows)

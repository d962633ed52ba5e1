"""Line-oriented N-Triples reader and writer.

Covers the subset used for data exchange: IRIs in angle brackets, blank
node labels, quoted literals with optional ``^^<datatype>`` or ``@lang``
suffix, one triple per line terminated by ``.``, full-line ``#`` comments.
Escape sequences inside literals are kept in their source form; the lexical
form round-trips byte for byte.
"""

from __future__ import annotations

import io
from typing import Iterable, TextIO

from .terms import Graph, Term, TermKind


class NTriplesError(ValueError):
    """Syntax error in a triples file; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _scan_term(line: str, pos: int, lineno: int) -> tuple[Term, int]:
    c = line[pos]
    if c == "<":
        end = line.find(">", pos + 1)
        if end < 0:
            raise NTriplesError(lineno, "unclosed IRI bracket")
        text = line[pos + 1 : end]
        if not text:
            raise NTriplesError(lineno, "empty IRI")
        return Term.iri(text), end + 1
    if c == "_":
        if not line.startswith("_:", pos):
            raise NTriplesError(lineno, "malformed blank node label")
        end = pos + 2
        while end < len(line) and not line[end].isspace():
            end += 1
        label = line[pos + 2 : end]
        if not label:
            raise NTriplesError(lineno, "empty blank node label")
        return Term.blank(label), end
    if c == '"':
        end = pos + 1
        while end < len(line):
            if line[end] == "\\":
                end += 2
                continue
            if line[end] == '"':
                break
            end += 1
        if end >= len(line):
            raise NTriplesError(lineno, "unterminated literal")
        end += 1
        # optional datatype or language tag, kept as part of the token
        if line.startswith("^^<", end):
            close = line.find(">", end + 3)
            if close < 0:
                raise NTriplesError(lineno, "unclosed datatype IRI")
            end = close + 1
        elif line.startswith("@", end):
            tag_end = end + 1
            while tag_end < len(line) and (line[tag_end].isalnum() or line[tag_end] == "-"):
                tag_end += 1
            if tag_end == end + 1:
                raise NTriplesError(lineno, "empty language tag")
            end = tag_end
        return Term.literal(line[pos:end]), end
    raise NTriplesError(lineno, f"unexpected character {c!r}")


def _parse_line(line: str, lineno: int) -> tuple[Term, Term, Term] | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None

    # Fast path for the common case: no literals, whitespace separated,
    # standalone terminating dot.
    if '"' not in stripped:
        parts = stripped.split()
        if len(parts) == 4 and parts[3] == ".":
            try:
                s, i1 = _scan_term(parts[0], 0, lineno)
                p, i2 = _scan_term(parts[1], 0, lineno)
                o, i3 = _scan_term(parts[2], 0, lineno)
            except NTriplesError:
                pass
            else:
                if i1 == len(parts[0]) and i2 == len(parts[1]) and i3 == len(parts[2]):
                    return _check_positions(s, p, o, lineno)

    terms: list[Term] = []
    pos = 0
    n = len(stripped)
    while True:
        while pos < n and stripped[pos].isspace():
            pos += 1
        if pos >= n:
            raise NTriplesError(lineno, "missing '.' terminator")
        if stripped[pos] == ".":
            pos += 1
            break
        if len(terms) == 3:
            raise NTriplesError(lineno, "expected '.' after object")
        term, pos = _scan_term(stripped, pos, lineno)
        terms.append(term)
    rest = stripped[pos:].strip()
    if rest and not rest.startswith("#"):
        raise NTriplesError(lineno, f"trailing content after '.': {rest!r}")
    if len(terms) != 3:
        raise NTriplesError(lineno, f"expected 3 terms, found {len(terms)}")
    return _check_positions(terms[0], terms[1], terms[2], lineno)


def _check_positions(s: Term, p: Term, o: Term, lineno: int) -> tuple[Term, Term, Term]:
    if s.kind is TermKind.LITERAL:
        raise NTriplesError(lineno, "literal in subject position")
    if p.kind is not TermKind.IRI:
        raise NTriplesError(lineno, "predicate must be an IRI")
    return s, p, o


def iter_ntriples(source: str | bytes | TextIO) -> Iterable[tuple[Term, Term, Term]]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    for lineno, line in enumerate(source, start=1):
        parsed = _parse_line(line, lineno)
        if parsed is not None:
            yield parsed


def parse_ntriples(source: str | bytes | TextIO) -> Graph:
    """Parse a triples document into an encoded :class:`Graph`.

    Aborts with :class:`NTriplesError` on the first malformed line.
    """
    return Graph.from_terms(iter_ntriples(source))


def serialize_ntriples(graph: Graph) -> str:
    """Write the graph back out, one triple per line, insertion order."""
    d = graph.dictionary
    lines = [
        f"{d.decode(t.s).n3()} {d.decode(t.p).n3()} {d.decode(t.o).n3()} ."
        for t in graph.triples
    ]
    return "".join(line + "\n" for line in lines)

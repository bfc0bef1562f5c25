"""Reader and writer for the Turtle subset used by graph fixtures and dumps.

Supported syntax:

* ``@prefix pfx: <iri> .`` declarations
* one statement per ``subject predicate object .`` group (may span lines)
* iris in angle brackets or as prefixed names
* double-quoted literals with backslash escapes and an optional
  ``^^<datatype>`` / ``^^pfx:local`` suffix
* ``#`` comments outside quoted strings

Deliberately absent: blank nodes, language tags, predicate/object lists
and ``@base``. Anything outside the subset raises ``TurtleParseError``
with a 1-based line and column.
"""

from __future__ import annotations

from .errors import TurtleParseError
from .terms import Iri, Literal, Triple, triple_key
from .vocab import KGMAS_NS, XSD_NS

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r",
            "b": "\b", "f": "\f"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}

_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyz"
                  "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.")


class _Scanner:
    """Character cursor with line and column tracking."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, message: str) -> TurtleParseError:
        return TurtleParseError(message, self.line, self.col)

    def skip_space(self):
        while not self.eof():
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == "#":
                while not self.eof() and self.peek() != "\n":
                    self.advance()
            else:
                return

    def expect(self, ch: str):
        if self.eof() or self.peek() != ch:
            found = repr(self.peek()) if not self.eof() else "end of input"
            raise self.error(f"expected {ch!r}, found {found}")
        self.advance()


def _read_iri_ref(sc: _Scanner) -> Iri:
    sc.expect("<")
    chars = []
    while True:
        if sc.eof():
            raise sc.error("unterminated iri")
        ch = sc.advance()
        if ch == ">":
            break
        if ch in "\n\r":
            raise sc.error("newline inside iri")
        chars.append(ch)
    value = "".join(chars)
    if not value:
        raise sc.error("empty iri")
    return Iri(value)


def _read_name(sc: _Scanner) -> str:
    chars = []
    while not sc.eof() and sc.peek() in _NAME_CHARS:
        chars.append(sc.advance())
    return "".join(chars)


def _read_prefixed(sc: _Scanner, prefixes: dict[str, str]) -> Iri:
    start_line, start_col = sc.line, sc.col
    prefix = _read_name(sc)
    if sc.eof() or sc.peek() != ":":
        raise TurtleParseError(f"expected ':' after prefix {prefix!r}",
                               sc.line, sc.col)
    sc.advance()
    local = _read_name(sc)
    # a trailing dot belongs to the statement, not the name
    if local.endswith("."):
        local = local[:-1]
        sc.pos -= 1
        sc.col -= 1
    if prefix not in prefixes:
        raise TurtleParseError(f"undeclared prefix {prefix!r}",
                               start_line, start_col)
    return Iri(prefixes[prefix] + local)


def _read_literal(sc: _Scanner, prefixes: dict[str, str]) -> Literal:
    sc.expect('"')
    chars = []
    while True:
        if sc.eof():
            raise sc.error("unterminated literal")
        ch = sc.advance()
        if ch == '"':
            break
        if ch == "\\":
            if sc.eof():
                raise sc.error("dangling escape")
            esc = sc.advance()
            if esc in _ESCAPES:
                chars.append(_ESCAPES[esc])
            elif esc == "u" or esc == "U":
                width = 4 if esc == "u" else 8
                digits = "".join(sc.advance() for _ in range(width) if not sc.eof())
                if len(digits) != width or any(d not in "0123456789abcdefABCDEF"
                                               for d in digits):
                    raise sc.error(f"bad \\{esc} escape")
                chars.append(chr(int(digits, 16)))
            else:
                raise sc.error(f"unknown escape \\{esc}")
        else:
            chars.append(ch)
    lexical = "".join(chars)
    if sc.peek() == "@":
        raise sc.error("language tags are not supported")
    datatype = None
    if sc.peek() == "^":
        sc.advance()
        sc.expect("^")
        if sc.peek() == "<":
            datatype = _read_iri_ref(sc)
        else:
            datatype = _read_prefixed(sc, prefixes)
    return Literal(lexical, datatype)


def _read_subject_or_predicate(sc: _Scanner, prefixes: dict[str, str],
                               position: str) -> Iri:
    ch = sc.peek()
    if ch == "<":
        return _read_iri_ref(sc)
    if ch == "_":
        raise sc.error("blank nodes are not supported")
    if ch == '"':
        raise sc.error(f"literal not allowed in {position} position")
    if ch in _NAME_CHARS:
        return _read_prefixed(sc, prefixes)
    raise sc.error(f"expected iri in {position} position, found {ch!r}")


def _read_object(sc: _Scanner, prefixes: dict[str, str]):
    ch = sc.peek()
    if ch == '"':
        return _read_literal(sc, prefixes)
    if ch == "_":
        raise sc.error("blank nodes are not supported")
    if ch == "<" or ch in _NAME_CHARS:
        return _read_subject_or_predicate(sc, prefixes, "object")
    raise sc.error(f"expected term in object position, found {ch!r}")


def _read_prefix_decl(sc: _Scanner, prefixes: dict[str, str]):
    for expected in "@prefix":
        if sc.eof() or sc.peek() != expected:
            raise sc.error("malformed @prefix directive")
        sc.advance()
    sc.skip_space()
    prefix = _read_name(sc)
    sc.expect(":")
    sc.skip_space()
    iri = _read_iri_ref(sc)
    sc.skip_space()
    sc.expect(".")
    prefixes[prefix] = iri.value


def parse_turtle(text: str) -> list[Triple]:
    """Parse a document into triples, in document order.

    The whole document is parsed before anything is returned, so a
    syntax error never yields partial results.
    """
    sc = _Scanner(text)
    prefixes: dict[str, str] = {}
    triples: list[Triple] = []
    while True:
        sc.skip_space()
        if sc.eof():
            return triples
        if sc.peek() == "@":
            _read_prefix_decl(sc, prefixes)
            continue
        subject = _read_subject_or_predicate(sc, prefixes, "subject")
        sc.skip_space()
        predicate = _read_subject_or_predicate(sc, prefixes, "predicate")
        sc.skip_space()
        obj = _read_object(sc, prefixes)
        sc.skip_space()
        if sc.eof() or sc.peek() == ";" or sc.peek() == ",":
            raise sc.error("predicate/object lists are not supported"
                           if not sc.eof() else "statement missing final '.'")
        sc.expect(".")
        triples.append(Triple(subject, predicate, obj))


_DUMP_PREFIXES = (("kgmas", KGMAS_NS), ("xsd", XSD_NS))


def _pn_safe(local: str) -> bool:
    return (local != "" and not local.endswith(".")
            and all(c in _NAME_CHARS for c in local))


def _render_iri(iri: Iri) -> str:
    for prefix, ns in _DUMP_PREFIXES:
        if iri.value.startswith(ns):
            local = iri.value[len(ns):]
            if _pn_safe(local):
                return f"{prefix}:{local}"
    return f"<{iri.value}>"


def _render_literal(lit: Literal) -> str:
    body = "".join(_UNESCAPES.get(c, c) if ord(c) >= 0x20 or c in _UNESCAPES
                   else f"\\u{ord(c):04x}" for c in lit.lexical)
    rendered = f'"{body}"'
    if lit.datatype is not None:
        rendered += f"^^{_render_iri(lit.datatype)}"
    return rendered


def _render_term(term) -> str:
    return _render_iri(term) if isinstance(term, Iri) else _render_literal(term)


def serialize_turtle(triples) -> str:
    """Render triples as a canonical document.

    Prefix declarations always appear, even for an empty graph, and
    statements are sorted by (subject, predicate, object) so equal
    graphs serialize to byte-equal documents.
    """
    lines = [f"@prefix {prefix}: <{ns}> ." for prefix, ns in _DUMP_PREFIXES]
    lines.append("")
    for triple in sorted(set(triples), key=triple_key):
        lines.append(f"{_render_term(triple.subject)} "
                     f"{_render_term(triple.predicate)} "
                     f"{_render_term(triple.object)} .")
    return "\n".join(lines) + "\n"

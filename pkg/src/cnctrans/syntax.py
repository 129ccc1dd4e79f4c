"""Generic syntax trees and the grammar-interpreting parser.

One `Parser` engine handles every grammar: the ADL, derived transformation
languages, or anything else described by a GrammarSpec.  Interpretation
follows PEG rules: interface alternatives are tried in declaration order,
lists are greedy, and an optional slot is retried as absent when the rest
of its production fails.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from typing import Any, Iterator

from .errors import ParseError
from .grammar import (
    Choice,
    GrammarSpec,
    ListOf,
    NonterminalRef,
    Optional,
    Terminal,
    TokenRef,
    is_word,
)

_WS = re.compile(r"(?:\s+|//[^\n]*|/\*.*?\*/)*", re.DOTALL)
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN_RES = {
    "Name": _WORD,
    "Ident": _WORD,
    "Int": re.compile(r"[+-]?[0-9]+"),
    "String": re.compile(r'"(?:\\.|[^"\\\n])*"'),
    "QualifiedName": re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*"),
    "Var": re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*"),
}


@dataclass(frozen=True)
class Span:
    file: str
    start: int
    end: int
    line: int

    def __str__(self):
        return f"{self.file}:{self.line}"


class AstNode:
    """Immutable syntax tree node.

    `fields` maps each label of the node's production to a child node, a
    tuple of values, a token value (str or int), or None when absent.
    Equality and hashing are structural and ignore spans.
    """

    __slots__ = ("nonterminal", "_fields", "span", "_hash")

    def __init__(self, nonterminal: str, fields=(), span: Span | None = None):
        items = fields.items() if isinstance(fields, dict) else fields
        object.__setattr__(self, "nonterminal", nonterminal)
        object.__setattr__(
            self, "_fields", tuple((k, tuple(v) if isinstance(v, list) else v) for k, v in items)
        )
        object.__setattr__(self, "span", span)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("AstNode is immutable")

    @property
    def fields(self) -> dict[str, Any]:
        return dict(self._fields)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._fields)

    def items(self):
        return self._fields

    def __getitem__(self, label):
        for k, v in self._fields:
            if k == label:
                return v
        raise KeyError(label)

    def get(self, label, default=None):
        for k, v in self._fields:
            if k == label:
                return v
        return default

    def replace(self, **changes) -> "AstNode":
        """Copy with some fields changed; the span is kept."""
        unknown = set(changes) - set(self.labels)
        if unknown:
            raise KeyError(f"{self.nonterminal} has no field(s) {sorted(unknown)}")
        return AstNode(
            self.nonterminal,
            [(k, changes.get(k, v)) for k, v in self._fields],
            self.span,
        )

    def children(self) -> Iterator["AstNode"]:
        for _, v in self._fields:
            if isinstance(v, AstNode):
                yield v
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, AstNode):
                        yield x

    def walk(self) -> Iterator["AstNode"]:
        """Preorder traversal (document order for parsed trees)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children())))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def strip(self) -> "AstNode":
        """Deep copy without spans."""
        def conv(v):
            if isinstance(v, AstNode):
                return v.strip()
            if isinstance(v, tuple):
                return tuple(conv(x) for x in v)
            return v

        return AstNode(self.nonterminal, [(k, conv(v)) for k, v in self._fields])

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, AstNode):
            return NotImplemented
        return (
            self.nonterminal == other.nonterminal
            and hash(self) == hash(other)
            and self._fields == other._fields
        )

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.nonterminal, self._fields)))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._fields)
        return f"{self.nonterminal}({inner})"


_FAIL = object()


class Parser:
    """Packrat interpreter for a GrammarSpec over one input text."""

    def __init__(self, grammar: GrammarSpec, text: str, filename: str = "<input>"):
        self.g = grammar
        self.text = text
        self.filename = filename
        self.keywords = grammar.reserved_keywords
        self._memo: dict[tuple[str, int], Any] = {}
        self._skip: dict[int, int] = {}
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
        self.fail_pos = -1
        self.expected: list[str] = []

    # -- diagnostics

    def position(self, offset: int) -> tuple[int, int]:
        i = bisect.bisect_right(self._line_starts, offset) - 1
        return i + 1, offset - self._line_starts[i] + 1

    def _expect(self, pos: int, what: str):
        if pos > self.fail_pos:
            self.fail_pos = pos
            self.expected = [what]
        elif pos == self.fail_pos and what not in self.expected:
            self.expected.append(what)

    def error(self) -> ParseError:
        pos = max(self.fail_pos, 0)
        line, col = self.position(pos)
        if pos >= len(self.text):
            found = "end of input"
        else:
            m = _WORD.match(self.text, pos)
            found = repr(m.group() if m else self.text[pos])
        exp = self.expected or ["end of input"]
        lead = "expected " + (exp[0] if len(exp) == 1 else "one of " + ", ".join(exp))
        return ParseError(f"syntax error: {lead}, found {found}", self.filename, line, col, exp)

    # -- lexical level

    def skip(self, pos: int) -> int:
        end = self._skip.get(pos)
        if end is None:
            end = _WS.match(self.text, pos).end()
            self._skip[pos] = end
        return end

    def terminal(self, text: str, pos: int):
        p = self.skip(pos)
        if self.text.startswith(text, p):
            end = p + len(text)
            if not (is_word(text) and end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_")):
                return end
        self._expect(p, '"' + text + '"')
        return None

    def token(self, kind: str, pos: int):
        p = self.skip(pos)
        m = _TOKEN_RES[kind].match(self.text, p)
        if m is not None:
            raw = m.group()
            end = m.end()
            if kind == "Name" and raw in self.keywords:
                m = None
            elif kind == "QualifiedName" and any(seg in self.keywords for seg in raw.split(".")):
                m = None
        if m is None:
            self._expect(p, kind)
            return _FAIL
        if kind == "Int":
            return int(raw), end
        if kind == "String":
            return re.sub(r"\\(.)", r"\1", raw[1:-1]), end
        return raw, end

    # -- syntactic level

    def atom(self, elem, pos: int):
        """Parse one non-wrapped element; returns (value, end) or _FAIL."""
        if isinstance(elem, Terminal):
            end = self.terminal(elem.text, pos)
            return _FAIL if end is None else (elem.text, end)
        if isinstance(elem, TokenRef):
            return self.token(elem.kind, pos)
        if isinstance(elem, Choice):
            for option in elem.options:
                end = self.terminal(option, pos)
                if end is not None:
                    return option, end
            return _FAIL
        return self.nonterminal(elem.target, pos)

    def list_of(self, elem: ListOf, pos: int):
        items = []
        r = self.atom(elem.element, pos)
        while r is not _FAIL:
            value, end = r
            if end == pos and items:
                break
            items.append(value)
            pos = end
            if elem.separator is not None:
                after_sep = self.terminal(elem.separator, pos)
                if after_sep is None:
                    break
                r = self.atom(elem.element, after_sep)
            else:
                r = self.atom(elem.element, pos)
        if len(items) < elem.min_count:
            return _FAIL
        return tuple(items), pos

    def sequence(self, body, i: int, pos: int, acc: list):
        while i < len(body):
            elem = body[i]
            if isinstance(elem, Optional):
                r = self.atom(elem.element, pos)
                if r is not _FAIL:
                    value, end = r
                    label = elem.label
                    tail = self.sequence(
                        body, i + 1, end, acc + ([(label, value)] if label else [])
                    )
                    if tail is not None:
                        return tail
                if elem.label:
                    acc = acc + [(elem.label, None)]
                i += 1
                continue
            if isinstance(elem, ListOf):
                r = self.list_of(elem, pos)
            else:
                r = self.atom(elem, pos)
            if r is _FAIL:
                return None
            value, pos = r
            if not isinstance(elem, Terminal):
                acc = acc + [(elem.label, value)]
            i += 1
        return pos, acc

    def nonterminal(self, name: str, pos: int):
        key = (name, pos)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._memo[key] = _FAIL  # blocks left recursion
        result = _FAIL
        if self.g.is_interface(name):
            for alt in self.g.interfaces[name]:
                result = self.nonterminal(alt, pos)
                if result is not _FAIL:
                    break
        else:
            prod = self.g.production(name)
            start = self.skip(pos)
            r = self.sequence(prod.body, 0, pos, [])
            if r is not None:
                end, fields = r
                line, _ = self.position(start)
                node = AstNode(name, fields, Span(self.filename, start, end, line))
                result = (node, end)
        self._memo[key] = result
        return result

    def parse(self, start: str) -> AstNode:
        r = self.nonterminal(start, 0)
        if r is not _FAIL:
            node, end = r
            end = self.skip(end)
            if end == len(self.text):
                return node
            self._expect(end, "end of input")
        raise self.error()


def parse_model(g: GrammarSpec, start: str | None, text: str, filename: str = "<input>") -> AstNode:
    """Parse `text` as a `start` (default: the grammar's start symbol)."""
    start = start or g.start_symbol
    if not g.defines(start):
        raise KeyError(f"{start!r} is not defined in grammar {g.name}")
    text = text.replace("\r\n", "\n")
    return Parser(g, text, filename).parse(start)

"""Grammar-driven pretty-printer.

Layout is derived from the terminals alone: `{` opens an indented block,
`}` closes it on its own line, and `;` ends a line.  That gives one member
declaration per line for any brace-and-semicolon language.
"""

from __future__ import annotations

from .errors import MalformedNodeError
from .grammar import Choice, GrammarSpec, ListOf, NonterminalRef, Optional, Terminal, TokenRef
from .syntax import AstNode, _TOKEN_RES

INDENT = "  "
_NO_SPACE_BEFORE = {";", ",", ")", "."}
_NO_SPACE_AFTER = {"(", "."}


def _token_text(kind: str, value, where: str) -> str:
    if kind == "Int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise MalformedNodeError(f"{where}: expected an integer, got {value!r}")
        return str(value)
    if not isinstance(value, str):
        raise MalformedNodeError(f"{where}: expected a {kind} token, got {value!r}")
    if kind == "String":
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if not _TOKEN_RES[kind].fullmatch(value):
        raise MalformedNodeError(f"{where}: {value!r} is not a valid {kind}")
    return value


class _Emitter:
    def __init__(self, g: GrammarSpec):
        self.g = g
        self.tokens: list[str] = []

    def node(self, node: AstNode, expected: str):
        if not isinstance(node, AstNode):
            raise MalformedNodeError(f"expected a {expected} node, got {node!r}")
        if not self.g.has_production(node.nonterminal):
            raise MalformedNodeError(f"{node.nonterminal} is not a production of {self.g.name}")
        if not self.g.implements(node.nonterminal, expected):
            raise MalformedNodeError(f"{node.nonterminal} cannot stand where {expected} is expected")
        prod = self.g.production(node.nonterminal)
        if node.labels != prod.labels:
            raise MalformedNodeError(
                f"{node.nonterminal} has fields {list(node.labels)}, production needs {list(prod.labels)}"
            )
        for elem in prod.body:
            if isinstance(elem, Terminal):
                self.tokens.append(elem.text)
                continue
            value = node[elem.label]
            where = f"{node.nonterminal}.{elem.label}"
            if isinstance(elem, Optional):
                if value is None:
                    continue
                self.atom(elem.element, value, where)
            elif isinstance(elem, ListOf):
                if not isinstance(value, tuple):
                    raise MalformedNodeError(f"{where}: expected a list, got {value!r}")
                if len(value) < elem.min_count:
                    raise MalformedNodeError(f"{where}: needs at least {elem.min_count} item(s)")
                for i, item in enumerate(value):
                    if i and elem.separator is not None:
                        self.tokens.append(elem.separator)
                    self.atom(elem.element, item, where)
            else:
                if value is None:
                    raise MalformedNodeError(f"{where}: mandatory field is missing")
                self.atom(elem, value, where)

    def atom(self, elem, value, where):
        if isinstance(elem, Terminal):
            self.tokens.append(elem.text)
        elif isinstance(elem, TokenRef):
            self.tokens.append(_token_text(elem.kind, value, where))
        elif isinstance(elem, Choice):
            if value not in elem.options:
                raise MalformedNodeError(f"{where}: {value!r} is not one of {elem.options}")
            self.tokens.append(value)
        elif isinstance(elem, NonterminalRef):
            self.node(value, elem.target)


def _layout(tokens: list[str]) -> str:
    lines: list[str] = []
    depth = 0
    cur = ""

    def flush():
        nonlocal cur
        if cur:
            lines.append(INDENT * depth + cur)
        cur = ""

    prev = None
    for tok in tokens:
        if tok == "}":
            flush()
            depth = max(depth - 1, 0)
            cur = "}"
            flush()
            prev = None
            continue
        if cur and prev not in _NO_SPACE_AFTER and tok not in _NO_SPACE_BEFORE:
            cur += " "
        cur += tok
        prev = tok
        if tok == "{":
            flush()
            depth += 1
            prev = None
        elif tok == ";":
            flush()
            prev = None
    flush()
    return "\n".join(lines) + "\n" if lines else ""


def pretty_print(g: GrammarSpec, node: AstNode, expected: str | None = None) -> str:
    """Render `node` as text that parses back to a structurally equal tree."""
    em = _Emitter(g)
    em.node(node, expected or node.nonterminal)
    return _layout(em.tokens)

"""Grammar descriptions as data, plus the `.mcg` reader and writer.

A `.mcg` file looks like::

    grammar Name {
      Prod = "kw" label:Other items:Item* ";" ;
      Items = names:Name+ % "," ;
      Dir = dir:("in" | "out") ;
      interface Other = A | B ;
    }

Productions are sequences of quoted terminals, labeled references to
nonterminals or built-in tokens, single-level `?`, `*` and `+` suffixes
(lists may carry a `% "sep"` separator) and parenthesized keyword choices.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Union

from .errors import GrammarError

TOKEN_KINDS = ("Name", "Int", "String", "QualifiedName", "Var", "Ident")

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def is_word(text: str) -> bool:
    return IDENT_RE.match(text) is not None


@dataclass(frozen=True)
class Terminal:
    text: str


@dataclass(frozen=True)
class NonterminalRef:
    target: str
    label: str


@dataclass(frozen=True)
class TokenRef:
    kind: str
    label: str


@dataclass(frozen=True)
class Choice:
    """One of several keyword/symbol terminals, kept as a token field."""

    options: tuple[str, ...]
    label: str


@dataclass(frozen=True)
class ListOf:
    element: Union[NonterminalRef, TokenRef, Choice]
    min_count: int = 0
    separator: str | None = None

    @property
    def label(self) -> str:
        return self.element.label


@dataclass(frozen=True)
class Optional:
    element: Union[Terminal, NonterminalRef, TokenRef, Choice]

    @property
    def label(self) -> str | None:
        return getattr(self.element, "label", None)


RhsElement = Union[Terminal, NonterminalRef, TokenRef, Choice, ListOf, Optional]


def element_label(elem: RhsElement) -> str | None:
    return getattr(elem, "label", None)


def element_atom(elem: RhsElement):
    """Strip a List/Optional wrapper."""
    if isinstance(elem, (ListOf, Optional)):
        return elem.element
    return elem


@dataclass(frozen=True)
class Production:
    lhs: str
    body: tuple[RhsElement, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl in map(element_label, self.body) if lbl is not None)

    def slot(self, label: str) -> RhsElement:
        for elem in self.body:
            if element_label(elem) == label:
                return elem
        raise KeyError(f"{self.lhs} has no field {label!r}")


@dataclass(frozen=True)
class GrammarSpec:
    name: str
    productions: tuple[Production, ...]
    interfaces: dict[str, tuple[str, ...]] = field(default_factory=dict)
    start_symbol: str = ""
    reserved_keywords: frozenset[str] = frozenset()

    __hash__ = None  # interfaces is a dict

    @cached_property
    def _by_name(self) -> dict[str, Production]:
        return {p.lhs: p for p in self.productions}

    def production(self, name: str) -> Production:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"no production named {name!r} in grammar {self.name}") from None

    def has_production(self, name: str) -> bool:
        return name in self._by_name

    def is_interface(self, name: str) -> bool:
        return name in self.interfaces

    def defines(self, name: str) -> bool:
        return name in self._by_name or name in self.interfaces

    @property
    def nonterminals(self) -> list[str]:
        return [p.lhs for p in self.productions] + list(self.interfaces)

    @cached_property
    def _concrete(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, tuple[str, ...]] = {}

        def walk(name, seen):
            if name in self._by_name:
                return [name]
            if name in seen:
                return []
            acc = []
            for alt in self.interfaces.get(name, ()):
                for c in walk(alt, seen | {name}):
                    if c not in acc:
                        acc.append(c)
            return acc

        for name in self.nonterminals:
            out[name] = tuple(walk(name, frozenset()))
        return out

    def implementors(self, name: str) -> tuple[str, ...]:
        """Concrete productions reachable from `name`, in ordered-choice order."""
        return self._concrete.get(name, ())

    def implements(self, concrete: str, type_name: str) -> bool:
        return concrete in self.implementors(type_name)

    def related(self, a: str, b: str) -> bool:
        """True if some concrete production implements both types."""
        return bool(set(self.implementors(a)) & set(self.implementors(b)))

    def nullable(self) -> set[str]:
        """Nonterminals that can derive the empty string."""
        result: set[str] = set()

        def elem_nullable(elem):
            if isinstance(elem, Optional):
                return True
            if isinstance(elem, ListOf):
                return elem.min_count == 0 or elem_nullable(elem.element)
            if isinstance(elem, NonterminalRef):
                return elem.target in result
            return False

        changed = True
        while changed:
            changed = False
            for p in self.productions:
                if p.lhs not in result and all(elem_nullable(e) for e in p.body):
                    result.add(p.lhs)
                    changed = True
            for name, alts in self.interfaces.items():
                if name not in result and any(a in result for a in alts):
                    result.add(name)
                    changed = True
        return result

    def check(self) -> None:
        """Raise GrammarError unless the grammar is self-consistent."""
        seen: set[str] = set()
        for name in self.nonterminals:
            if name in seen:
                raise GrammarError(f"nonterminal {name} defined more than once")
            if name in TOKEN_KINDS:
                raise GrammarError(f"nonterminal {name} shadows a built-in token")
            seen.add(name)
        undefined = []

        def need(name):
            if name not in seen and name not in undefined:
                undefined.append(name)

        for p in self.productions:
            labels = p.labels
            dupes = sorted({lbl for lbl in labels if labels.count(lbl) > 1})
            if dupes:
                raise GrammarError(f"duplicate field label(s) {', '.join(dupes)} in {p.lhs}")
            for elem in p.body:
                atom = element_atom(elem)
                if isinstance(atom, NonterminalRef):
                    need(atom.target)
        for name, alts in self.interfaces.items():
            if not alts:
                raise GrammarError(f"interface {name} has no alternatives")
            for alt in alts:
                need(alt)
        if undefined:
            raise GrammarError(f"undefined nonterminal(s): {', '.join(undefined)}")
        if self.start_symbol not in seen:
            raise GrammarError(f"start symbol {self.start_symbol!r} is not defined")


def collect_keywords(productions: Iterable[Production]) -> frozenset[str]:
    words = set()
    for p in productions:
        for elem in p.body:
            atom = element_atom(elem)
            if isinstance(atom, Terminal) and is_word(atom.text):
                words.add(atom.text)
            elif isinstance(atom, Choice):
                words.update(o for o in atom.options if is_word(o))
    return frozenset(words)


def make_grammar(name, productions, interfaces, start=None, check=True) -> GrammarSpec:
    productions = tuple(productions)
    interfaces = {k: tuple(v) for k, v in interfaces.items()}
    if start is None:
        start = productions[0].lhs if productions else next(iter(interfaces), "")
    g = GrammarSpec(name, productions, interfaces, start, collect_keywords(productions))
    if check:
        g.check()
    return g


# -- .mcg reader ----------------------------------------------------------

_MCG_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}=;|:?*+%()])
    """,
    re.VERBOSE | re.DOTALL,
)


def _unquote(lit: str) -> str:
    return re.sub(r"\\(.)", r"\1", lit[1:-1])


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _McgReader:
    def __init__(self, text: str):
        self.toks = []
        pos, line, col_base = 0, 1, 0
        while pos < len(text):
            m = _MCG_TOKEN.match(text, pos)
            if m is None:
                raise GrammarError(f"unexpected character {text[pos]!r}", line, pos - col_base + 1)
            kind = m.lastgroup
            if kind != "ws":
                self.toks.append((kind, m.group(), line, pos - col_base + 1))
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                col_base = m.start() + chunk.rindex("\n") + 1
            pos = m.end()
        self.toks.append(("eof", "", line, pos - col_base + 1))
        self.i = 0

    def peek(self, offset=0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def fail(self, what):
        kind, value, line, col = self.peek()
        found = "end of input" if kind == "eof" else repr(value)
        raise GrammarError(f"expected {what}, found {found}", line, col)

    def take(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            self.fail(repr(value) if value is not None else kind)
        self.i += 1
        return tok[1]

    def at(self, kind, value=None, offset=0):
        tok = self.peek(offset)
        return tok[0] == kind and (value is None or tok[1] == value)

    def grammar(self):
        self.take("name", "grammar")
        name = self.take("name")
        self.take("punct", "{")
        productions, interfaces = [], {}
        first = None
        while not self.at("punct", "}"):
            if self.at("name", "interface") and self.at("name", offset=1) and not self.at("punct", "=", 1):
                self.i += 1
                lhs = self.take("name")
                self.take("punct", "=")
                alts = [self.take("name")]
                while self.at("punct", "|"):
                    self.i += 1
                    alts.append(self.take("name"))
                self.take("punct", ";")
                if lhs in interfaces:
                    raise GrammarError(f"interface {lhs} defined more than once")
                interfaces[lhs] = tuple(alts)
            else:
                lhs = self.take("name")
                self.take("punct", "=")
                body = []
                while not self.at("punct", ";"):
                    body.append(self.element())
                self.take("punct", ";")
                productions.append(Production(lhs, tuple(body)))
            first = first or lhs
        self.take("punct", "}")
        self.take("eof")
        return name, productions, interfaces, first

    def element(self):
        label = None
        if self.at("name") and self.at("punct", ":", 1):
            label = self.take("name")
            self.i += 1
        kind, value, line, col = self.peek()
        if kind == "string":
            self.i += 1
            if label is not None:
                raise GrammarError("terminals cannot carry a label", line, col)
            atom = Terminal(_unquote(value))
        elif kind == "name":
            self.i += 1
            lbl = label or value[0].lower() + value[1:]
            atom = TokenRef(value, lbl) if value in TOKEN_KINDS else NonterminalRef(value, lbl)
        elif kind == "punct" and value == "(":
            self.i += 1
            options = [_unquote(self.take("string"))]
            while self.at("punct", "|"):
                self.i += 1
                options.append(_unquote(self.take("string")))
            self.take("punct", ")")
            if label is None:
                raise GrammarError("a keyword choice needs a label", line, col)
            atom = Choice(tuple(options), label)
        else:
            self.fail("a grammar element")
        if self.at("punct", "?"):
            self.i += 1
            return Optional(atom)
        if self.at("punct", "*") or self.at("punct", "+"):
            _, op, line, col = self.peek()
            self.i += 1
            if isinstance(atom, Terminal):
                raise GrammarError("terminals cannot be repeated", line, col)
            sep = None
            if self.at("punct", "%"):
                self.i += 1
                sep = _unquote(self.take("string"))
            return ListOf(atom, 1 if op == "+" else 0, sep)
        return atom


def parse_grammar(text: str, check: bool = True) -> GrammarSpec:
    """Read `.mcg` text into a GrammarSpec."""
    text = text.replace("\r\n", "\n")
    name, productions, interfaces, first = _McgReader(text).grammar()
    if first is None:
        raise GrammarError(f"grammar {name} is empty")
    return make_grammar(name, productions, interfaces, start=first, check=check)


# -- .mcg writer ----------------------------------------------------------

def _emit_atom(atom) -> str:
    if isinstance(atom, Terminal):
        return _quote(atom.text)
    if isinstance(atom, Choice):
        return f"{atom.label}:(" + " | ".join(_quote(o) for o in atom.options) + ")"
    target = atom.target if isinstance(atom, NonterminalRef) else atom.kind
    return f"{atom.label}:{target}"


def _emit_element(elem) -> str:
    if isinstance(elem, Optional):
        return _emit_atom(elem.element) + "?"
    if isinstance(elem, ListOf):
        out = _emit_atom(elem.element) + ("+" if elem.min_count else "*")
        if elem.separator is not None:
            out += " % " + _quote(elem.separator)
        return out
    return _emit_atom(elem)


def emit_grammar_file(g: GrammarSpec) -> str:
    """Render a GrammarSpec as `.mcg` text; the start symbol comes first."""
    lines = [f"grammar {g.name} {{"]

    def prod_line(p):
        body = " ".join(_emit_element(e) for e in p.body)
        return f"  {p.lhs} = {body} ;" if body else f"  {p.lhs} = ;"

    def iface_line(name):
        return f"  interface {name} = " + " | ".join(g.interfaces[name]) + " ;"

    if g.is_interface(g.start_symbol):
        lines.append(iface_line(g.start_symbol))
    for p in sorted(g.productions, key=lambda p: p.lhs != g.start_symbol):
        lines.append(prod_line(p))
    for name in g.interfaces:
        if name != g.start_symbol:
            lines.append(iface_line(name))
    lines.append("}")
    return "\n".join(lines) + "\n"

"""What the transformation engine needs to know about a base language."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

from .errors import EvaluationError
from .grammar import Choice, GrammarSpec, ListOf, Optional, TokenRef, element_atom
from .syntax import AstNode


def accessor_name(label: str) -> str:
    return "get" + label[:1].upper() + label[1:]


class AccessorTable:
    """Maps (nonterminal, method name) to a function over AstNode."""

    def __init__(self, grammar: GrammarSpec):
        self.grammar = grammar
        self._table: dict[tuple[str, str], Callable[[AstNode], object]] = {}

    @classmethod
    def derive(cls, grammar: GrammarSpec) -> "AccessorTable":
        """One getter per token-valued field of every production."""
        table = cls(grammar)
        for prod in grammar.productions:
            for elem in prod.body:
                atom = element_atom(elem)
                if not isinstance(atom, (TokenRef, Choice)):
                    continue
                table.add(prod.lhs, accessor_name(atom.label), _field_getter(atom.label, elem))
        return table

    def add(self, nonterminal: str, method: str, fn: Callable[[AstNode], object]) -> None:
        self._table[(nonterminal, method)] = fn

    def lookup(self, nonterminal: str, method: str):
        return self._table.get((nonterminal, method))

    def methods(self, nonterminal: str) -> list[str]:
        return sorted(m for nt, m in self._table if nt == nonterminal)

    def resolves(self, type_name: str, method: str) -> bool:
        """True if every production implementing `type_name` has `method`."""
        impls = self.grammar.implementors(type_name)
        return bool(impls) and all((nt, method) in self._table for nt in impls)

    def call(self, node: AstNode, method: str):
        fn = self.lookup(node.nonterminal, method)
        if fn is None:
            raise EvaluationError(f"{node.nonterminal} has no accessor {method}()")
        return fn(node)


def _field_getter(label, elem):
    if isinstance(elem, ListOf):
        return lambda node: tuple(node[label])

    def get(node):
        value = node[label]
        if value is None and isinstance(elem, Optional):
            raise EvaluationError(f"{node.nonterminal}.{label} is absent")
        return value

    return get


def _identity(model: AstNode) -> AstNode:
    return model


@dataclass(eq=False)
class Language:
    """A base grammar plus its language-specific hooks.

    `empty_aliases` maps a pattern nonterminal to (alias nonterminal,
    pattern name field, alias names field): a pattern of that nonterminal
    written with no sub-elements also matches alias nodes, comparing its
    name field against any entry of the alias's names list.

    `normalize_pattern` applies the model normalization to compiled
    pattern elements; it receives the top-level elements and a callable
    producing fresh pattern ids.
    """

    grammar: GrammarSpec
    accessors: AccessorTable
    normalize: Callable[[AstNode], AstNode] = _identity
    check: Callable | None = None
    empty_aliases: Mapping[str, tuple[str, str, str]] = field(default_factory=dict)
    normalize_pattern: Callable = lambda elems, new_pid: elems

    @classmethod
    def generic(cls, grammar: GrammarSpec) -> "Language":
        return cls(grammar, AccessorTable.derive(grammar))

    @cached_property
    def dstl(self) -> GrammarSpec:
        from .derive import derive_transformation_grammar

        return derive_transformation_grammar(self.grammar)

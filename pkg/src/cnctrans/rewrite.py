"""Applying matched rules: instantiation, edits, and loop application."""

from __future__ import annotations

from .errors import CapExceededError, MalformedNodeError, RewriteError, StaleMatchError
from .grammar import ListOf, NonterminalRef, Optional
from .language import Language
from .matching import Match, find_matches
from .printer import pretty_print
from .rules import Anon, Concrete, Create, Delete, Lit, QName, Replace, Rule, Var, VarBlack, VarWhite
from .syntax import AstNode

DEFAULT_CAP = 10000
_GONE = object()


def _name_value(ref, match: Match):
    if isinstance(ref, Lit):
        return ref.text
    if isinstance(ref, Anon):
        raise RewriteError("the anonymous variable $_ cannot be instantiated")
    try:
        return match.value(ref.name)
    except KeyError:
        raise RewriteError(f"unbound variable {ref.name}") from None


def _inst_value(v, match: Match):
    if isinstance(v, tuple):
        out = []
        for item in v:
            value = _inst_value(item, match)
            # a name-list value fills a list position item by item
            if isinstance(value, tuple) and not isinstance(item, tuple):
                out.extend(value)
            else:
                out.append(value)
        return tuple(out)
    if isinstance(v, (Lit, Var, Anon)):
        value = _name_value(v, match)
        if isinstance(value, AstNode):
            raise RewriteError(f"{v.name} is a model element and cannot fill a name position")
        return value
    if isinstance(v, QName):
        parts = [_name_value(p, match) for p in v.parts]
        if not all(isinstance(p, str) for p in parts):
            raise RewriteError("qualified names need string segments")
        return ".".join(parts)
    if isinstance(v, Concrete):
        return instantiate(v, match)
    if isinstance(v, VarBlack):
        node = match.value(v.var)
        return node.strip()
    if isinstance(v, VarWhite):
        return instantiate(v.body, match)
    return v


def instantiate(template: Concrete, match: Match) -> AstNode:
    """Fresh, span-less node for a right-hand side element."""
    return AstNode(template.nonterminal, [(k, _inst_value(v, match)) for k, v in template.fields])


def _root_field(lang: Language, nonterminal: str) -> str:
    g = lang.grammar
    for elem in g.production(g.start_symbol).body:
        if isinstance(elem, ListOf) and isinstance(elem.element, NonterminalRef):
            if g.implements(nonterminal, elem.element.target):
                return elem.label
    raise RewriteError(f"a {nonterminal} cannot be created at the model root")


def _violates(lang: Language, node: AstNode) -> bool:
    """True when a deletion left a mandatory field of `node` empty."""
    for elem in lang.grammar.production(node.nonterminal).body:
        label = getattr(elem, "label", None)
        if label is None or isinstance(elem, Optional):
            continue
        v = node.get(label)
        if isinstance(elem, ListOf):
            if elem.min_count and not v:
                return True
        elif v is None:
            return True
    return False


def apply_match(rule: Rule, match: Match, model: AstNode, lang: Language) -> tuple[AstNode, bool]:
    """Apply the rule's edits for one match; returns (new model, changed)."""
    present = {id(n) for n in model.walk()}
    for node in match.env.corr.values():
        if id(node) not in present:
            raise StaleMatchError(f"rule {rule.name}: match refers to a node no longer in the model")

    appends: dict[tuple[int, str], list] = {}
    deletes: set[int] = set()
    replaces: dict[int, AstNode] = {}
    for edit in rule.rhs_delta:
        if isinstance(edit, Create):
            new = _checked(lang, instantiate(edit.template, match), rule)
            if edit.owner is None:
                owner, fld = model, _root_field(lang, new.nonterminal)
            else:
                owner, fld = match.env.corr[edit.owner], edit.field
            appends.setdefault((id(owner), fld), []).append(new)
        elif isinstance(edit, Delete):
            deletes.add(id(match.env.corr[edit.target]))
        elif isinstance(edit, Replace):
            target = match.env.corr[edit.target]
            replaces[id(target)] = _checked(lang, instantiate(edit.template, match), rule)

    def rebuild(node: AstNode):
        if id(node) in deletes:
            return _GONE
        if id(node) in replaces:
            return replaces[id(node)]
        changes = {}
        for label, v in node.items():
            extra = appends.get((id(node), label), ())
            if isinstance(v, tuple):
                items = []
                for x in v:
                    nx = rebuild(x) if isinstance(x, AstNode) else x
                    if nx is not _GONE:
                        items.append(nx)
                for new in extra:
                    if new not in items:
                        items.append(new)
                nv = tuple(items)
                if len(nv) != len(v) or any(a is not b for a, b in zip(nv, v)):
                    changes[label] = nv
            elif isinstance(v, AstNode):
                nv = rebuild(v)
                if nv is _GONE:
                    changes[label] = None
                elif nv is not v:
                    changes[label] = nv
                if extra and not (nv is not _GONE and nv == extra[0]):
                    raise RewriteError(f"rule {rule.name}: {node.nonterminal}.{label} is already occupied")
            elif extra:
                if v is not None:
                    raise RewriteError(f"rule {rule.name}: {node.nonterminal}.{label} is already occupied")
                changes[label] = extra[0]
        if not changes:
            return node
        out = node.replace(**changes)
        return _GONE if _violates(lang, out) else out

    new_model = rebuild(model)
    if new_model is _GONE:
        raise RewriteError(f"rule {rule.name}: the edit would remove the whole model")
    new_model = lang.normalize(new_model)
    return new_model, new_model != model


def _checked(lang: Language, node: AstNode, rule: Rule) -> AstNode:
    try:
        pretty_print(lang.grammar, node)
    except MalformedNodeError as exc:
        raise RewriteError(f"rule {rule.name}: created element is malformed: {exc}") from exc
    return node


def apply_once(rule: Rule, model: AstNode, lang: Language, on_apply=None) -> tuple[AstNode, int]:
    """Apply the first changing match, if any; returns (model, 0 or 1)."""
    for match in find_matches(rule, model, lang):
        new, changed = apply_match(rule, match, model, lang)
        if changed:
            if on_apply is not None:
                on_apply(rule, match, model)
            return new, 1
    return model, 0


def apply_rule_loop(rule: Rule, model: AstNode, lang: Language, cap: int = DEFAULT_CAP, on_apply=None):
    """Apply `rule` until no match changes the model; returns (model, applications)."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    applications = 0
    while True:
        for match in find_matches(rule, model, lang):
            new, changed = apply_match(rule, match, model, lang)
            if changed:
                break
        else:
            return model, applications
        if applications >= cap:
            raise CapExceededError(rule.name, cap)
        if on_apply is not None:
            on_apply(rule, match, model)
        model = new
        applications += 1

"""Derive a transformation language grammar from a base grammar.

For each base nonterminal N the derived grammar defines::

    N_Pat      N's body, with references X -> X_Elem, Name -> NamePat,
               QualifiedName -> QNamePat; a trailing ";" becomes optional and
               a Name slot directly followed by another Name slot may be left
               out (the later slot is the element's own name)
    N_Elem     interface N_Repl | N_Neg | N_VarWhite | N_VarBlack | N_Pat
    N_VarBlack type:Name var:Var ";"
    N_VarWhite type:Name var:Var "[[" body:N_Pat "]]"
    N_Neg      "not" "[[" body:AnyPat "]]" ";"?
    N_Repl     "[[" left:N_Pat? ":-" right:N_Pat? "]]" ";"?

plus the rule/module layer below, with TopElem ranging over every N_Elem.
"""

from __future__ import annotations

from .errors import DerivationError
from .grammar import (
    Choice,
    GrammarSpec,
    ListOf,
    NonterminalRef,
    Optional,
    Production,
    Terminal,
    TokenRef,
    make_grammar,
    parse_grammar,
)

SUFFIXES = ("_Pat", "_Elem", "_VarBlack", "_VarWhite", "_Neg", "_Repl")
RESERVED_WORDS = ("not", "where", "module", "transformation", "loop")
RESERVED_SYMBOLS = (":-", "[[", "]]")

LAYER = r"""
grammar Layer {
  Module = "module" name:Ident "{" methods:Method* "}" ;
  interface Method = TrafoMethod | InstrMethod ;
  TrafoMethod = "transformation" name:Ident "(" ")" "{" rule:TransformationRule "}" ;
  InstrMethod = name:Ident "(" ")" "{" stmts:Stmt* "}" ;
  interface Stmt = LoopStmt | CallStmt ;
  LoopStmt = "loop" name:Ident "(" ")" ";" ;
  CallStmt = name:Ident "(" ")" ";" ;

  TransformationRule = elems:TopElem+ where:WhereBlock? ;
  WhereBlock = "where" "{" assignments:Assignment* constraint:Expr? "}" ;
  Assignment = var:Var "=" value:Expr ";"? ;

  Expr = operands:AndExpr+ % "||" ;
  AndExpr = operands:NotExpr+ % "&&" ;
  interface NotExpr = Negation | Comparison ;
  Negation = "!" operand:NotExpr ;
  Comparison = left:Postfix tail:CmpTail? ;
  CmpTail = op:("==" | "!=" | "<=" | ">=" | "<" | ">") right:Postfix ;
  Postfix = primary:Primary calls:Call* ;
  Call = "." method:Ident "(" args:Expr* % "," ")" ;
  interface Primary = VarRef | StrLit | IntLit | ParenExpr ;
  VarRef = var:Var ;
  StrLit = value:String ;
  IntLit = value:Int ;
  ParenExpr = "(" expr:Expr ")" ;

  interface NamePat = NameVar | NameLit ;
  NameVar = var:Var ;
  NameLit = value:Name ;
  QNamePat = segments:NamePat+ % "." ;
}
"""

_layer_cache: GrammarSpec | None = None


def layer_grammar() -> GrammarSpec:
    global _layer_cache
    if _layer_cache is None:
        _layer_cache = parse_grammar(LAYER, check=False)
    return _layer_cache


def base_name(derived: str) -> tuple[str, str]:
    """Split `ComponentDef_Pat` into ("ComponentDef", "_Pat")."""
    for suffix in SUFFIXES:
        if derived.endswith(suffix):
            return derived[: -len(suffix)], suffix
    return derived, ""


def _check_collisions(base: GrammarSpec) -> None:
    clashes = sorted(base.reserved_keywords & set(RESERVED_WORDS))
    symbols = set()
    for p in base.productions:
        for elem in p.body:
            atom = elem.element if isinstance(elem, (ListOf, Optional)) else elem
            if isinstance(atom, Terminal):
                symbols.add(atom.text)
            elif isinstance(atom, Choice):
                symbols.update(atom.options)
            if isinstance(elem, ListOf) and elem.separator:
                symbols.add(elem.separator)
    clashes += sorted(symbols & set(RESERVED_SYMBOLS))
    if clashes:
        raise DerivationError(
            "base grammar keyword(s) collide with the transformation language: "
            + ", ".join(repr(c) for c in clashes)
        )
    layer = layer_grammar()
    taken = set(layer.nonterminals) | {"TopElem", "AnyPat"}
    bad = sorted(n for n in base.nonterminals if n in taken or base_name(n)[1])
    if bad:
        raise DerivationError(f"base nonterminal name(s) collide with derived names: {', '.join(bad)}")
    empty = sorted(base.nullable())
    if empty:
        raise DerivationError(
            "productions without mandatory concrete syntax cannot be pattern elements: " + ", ".join(empty)
        )


def _pattern_atom(atom):
    if isinstance(atom, NonterminalRef):
        return NonterminalRef(atom.target + "_Elem", atom.label)
    if isinstance(atom, TokenRef) and atom.kind == "Name":
        return NonterminalRef("NamePat", atom.label)
    if isinstance(atom, TokenRef) and atom.kind == "QualifiedName":
        return NonterminalRef("QNamePat", atom.label)
    return atom


def _is_name_slot(elem) -> bool:
    atom = elem.element if isinstance(elem, ListOf) else elem
    return isinstance(atom, TokenRef) and atom.kind == "Name"


def pattern_production(prod: Production) -> Production:
    body = []
    n = len(prod.body)
    for i, elem in enumerate(prod.body):
        if isinstance(elem, Terminal):
            new = Optional(elem) if i == n - 1 and elem.text == ";" else elem
        elif isinstance(elem, ListOf):
            new = ListOf(_pattern_atom(elem.element), elem.min_count, elem.separator)
        elif isinstance(elem, Optional):
            new = Optional(_pattern_atom(elem.element))
        else:
            new = _pattern_atom(elem)
            if (
                isinstance(elem, TokenRef)
                and elem.kind == "Name"
                and i + 1 < n
                and _is_name_slot(prod.body[i + 1])
            ):
                new = Optional(new)
        body.append(new)
    return Production(prod.lhs + "_Pat", tuple(body))


def _operator_productions(n: str) -> list[Production]:
    pat = n + "_Pat"
    return [
        Production(n + "_VarBlack", (TokenRef("Name", "type"), TokenRef("Var", "var"), Terminal(";"))),
        Production(
            n + "_VarWhite",
            (TokenRef("Name", "type"), TokenRef("Var", "var"), Terminal("[["),
             NonterminalRef(pat, "body"), Terminal("]]")),
        ),
        Production(
            n + "_Neg",
            (Terminal("not"), Terminal("[["), NonterminalRef("AnyPat", "body"), Terminal("]]"),
             Optional(Terminal(";"))),
        ),
        Production(
            n + "_Repl",
            (Terminal("[["), Optional(NonterminalRef(pat, "left")), Terminal(":-"),
             Optional(NonterminalRef(pat, "right")), Terminal("]]"), Optional(Terminal(";"))),
        ),
    ]


def derive_transformation_grammar(base: GrammarSpec) -> GrammarSpec:
    """Build the transformation-module grammar for `base`."""
    _check_collisions(base)
    layer = layer_grammar()
    concrete = [p.lhs for p in base.productions]
    order = [n for n in base.nonterminals if n != base.start_symbol] + [base.start_symbol]
    concrete_order = [n for n in order if n in concrete]

    productions = list(layer.productions)
    interfaces = dict(layer.interfaces)
    for prod in base.productions:
        productions.append(pattern_production(prod))
    for name in base.nonterminals:
        if base.is_interface(name):
            interfaces[name + "_Pat"] = tuple(a + "_Pat" for a in base.interfaces[name])
        productions.extend(_operator_productions(name))
        interfaces[name + "_Elem"] = tuple(
            name + s for s in ("_Repl", "_Neg", "_VarWhite", "_VarBlack", "_Pat")
        )
    interfaces["TopElem"] = tuple(n + "_Elem" for n in order)
    interfaces["AnyPat"] = tuple(n + "_Pat" for n in concrete_order)
    try:
        return make_grammar(base.name + "Tr", productions, interfaces, start="Module")
    except Exception as exc:  # pragma: no cover - derivation is total on checked inputs
        raise DerivationError(f"derived grammar is inconsistent: {exc}") from exc


import pytest

from cnctrans.adl import cnc_grammar, cnc_grammar_text
from cnctrans.errors import GrammarError
from cnctrans.grammar import (
    Choice,
    ListOf,
    NonterminalRef,
    Optional,
    Terminal,
    TokenRef,
    emit_grammar_file,
    parse_grammar,
)


def test_minimal_grammar():
    g = parse_grammar('grammar T { A = "a" ; }')
    assert [p.lhs for p in g.productions] == ["A"]
    assert g.start_symbol == "A"
    assert g.reserved_keywords == {"a"}


def test_undefined_nonterminal_is_named():
    with pytest.raises(GrammarError, match="B"):
        parse_grammar("grammar T { A = B ; }")


def test_syntax_error_has_position():
    with pytest.raises(GrammarError) as info:
        parse_grammar('grammar T {\n  A = "a" \n')
    assert info.value.line is not None and info.value.column is not None


def test_duplicate_labels_rejected():
    with pytest.raises(GrammarError, match="duplicate field label"):
        parse_grammar("grammar T { A = x:Name x:Name ; }")


def test_empty_interface_or_missing_start_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("grammar T { interface A = ; }")


def test_shipped_cnc_grammar_productions():
    g = cnc_grammar()
    concrete = {p.lhs for p in g.productions}
    assert {
        "Model", "ComponentDef", "PortSection", "PortDecl", "SubcomponentDecl", "Connector",
        "TrustLevel", "PortAccess", "ComponentAccess", "IdentityLink",
    } <= concrete
    assert g.interfaces["Access"] == ("PortAccess", "ComponentAccess")
    assert g.start_symbol == "Model"
    assert {"component", "port", "connect", "trustlevel", "access", "identity", "in", "out"} <= g.reserved_keywords


def test_element_kinds_parsed():
    g = parse_grammar(
        'grammar T { A = "k" n:Name xs:B* % "," d:("in" | "out") o:C? q:QualifiedName ; '
        'B = v:Int ; C = s:String ; }'
    )
    body = g.production("A").body
    assert isinstance(body[0], Terminal)
    assert isinstance(body[1], TokenRef) and body[1].kind == "Name"
    assert isinstance(body[2], ListOf) and body[2].separator == "," and body[2].min_count == 0
    assert isinstance(body[3], Choice) and body[3].options == ("in", "out")
    assert isinstance(body[4], Optional) and isinstance(body[4].element, NonterminalRef)
    assert body[5].kind == "QualifiedName"


def test_interfaces_and_implementors():
    g = cnc_grammar()
    assert g.implements("PortAccess", "Access")
    assert g.implements("ComponentAccess", "Element")
    assert not g.implements("PortDecl", "Element")
    assert g.implementors("SecArcComponent") == ("ComponentDef",)


def test_emit_round_trip():
    g = cnc_grammar()
    again = parse_grammar(emit_grammar_file(g))
    assert again.productions == g.productions
    assert again.interfaces == g.interfaces
    assert again.start_symbol == g.start_symbol


def test_crlf_grammar_accepted():
    g = parse_grammar(cnc_grammar_text().replace("\n", "\r\n"))
    assert g.productions == cnc_grammar().productions

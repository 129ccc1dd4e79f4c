import re

import pytest

from cnctrans.errors import CompileError
from cnctrans.rules import (
    ANON,
    BoolOp,
    Call,
    Cmp,
    Concat,
    Concrete,
    Create,
    Delete,
    Lit,
    Loop,
    MethodCall,
    Neg,
    QName,
    Replace,
    Repl,
    StrLit,
    Var,
    VarBlack,
    VarRef,
    VarWhite,
    load_module,
    load_rule,
    merge,
)

from conftest import MODULES, read_module


def _strip_pids(x):
    """Pattern structure with pids replaced by None, for shape comparisons."""
    if isinstance(x, tuple):
        return tuple(_strip_pids(i) for i in x)
    if isinstance(x, Concrete):
        return ("C", x.nonterminal, tuple((k, _strip_pids(v)) for k, v in x.fields))
    if isinstance(x, Repl):
        return ("R", _strip_pids(x.left), _strip_pids(x.right))
    if isinstance(x, Neg):
        return ("N", _strip_pids(x.body))
    if isinstance(x, VarBlack):
        return ("B", x.type, x.var)
    if isinstance(x, VarWhite):
        return ("W", x.type, x.var, _strip_pids(x.body))
    return x


def test_add_monitoring_module(lang):
    m = read_module("AddMonitoring")
    assert m.instr_methods == {"main": (Loop("addPorts"), Loop("addMonitor"), Loop("connect"))}
    assert list(m.trafo_methods) == ["addPorts", "addMonitor", "connect"]


def test_add_ports_rule():
    r = read_module("AddMonitoring").trafo_methods["addPorts"]
    out_sp_state = ("C", "PortDecl", (("direction", "out"), ("type", Var("$sp")), ("name", Lit("state"))))
    assert _strip_pids(r.top_elems) == (
        ("C", "ComponentDef", (
            ("name", Var("$name")),
            ("elements", (
                ("C", "PortSection", (("ports", (("R", None, out_sp_state),)),)),
                ("N", ("C", "PortDecl", (("direction", "out"), ("type", ANON), ("name", Lit("state"))))),
            )),
        )),
    )
    assert r.where_assignments == (("$sp", Concat(VarRef("$name"), StrLit("State"))),)
    assert r.constraint is None


def test_access_port_rule():
    r = read_module("ClientAuth").trafo_methods["accessPort"]
    kinds = [type(t).__name__ for t in r.top_elems]
    assert kinds == ["VarWhite", "Concrete", "VarWhite"]
    assert r.top_elems[0].type == "SecArcComponent" and r.top_elems[0].var == "$C"
    assert r.top_elems[1].get("source") == QName((Var("$client"), ANON))
    assert r.where_assignments == (("$policy", MethodCall(VarRef("$A"), "getPolicy")),)
    assert r.constraint == Cmp(
        "<", MethodCall(VarRef("$C"), "getTrustlevel"), MethodCall(VarRef("$S"), "getTrustlevel")
    )
    assert r.elem_vars == {"$C": "SecArcComponent", "$A": "Access", "$S": "SecArcComponent"}


def test_guarded_constraint():
    r = read_module("AddMonitoringGuarded").trafo_methods["connect"]
    assert r.constraint == BoolOp("!", (Cmp("==", VarRef("$name"), StrLit("monitor")),))


def test_decompose_create_in_component():
    r = read_module("AddMonitoring").trafo_methods["addMonitor"]
    creates = [e for e in r.rhs_delta if isinstance(e, Create)]
    assert len(creates) == 2 and len(r.rhs_delta) == 2
    owner = r.top_elems[0].pid
    assert all(c.owner == owner and c.field == "elements" for c in creates)
    assert _strip_pids(creates[0].template) == (
        "C", "SubcomponentDecl", (("type", Var("$type")), ("names", (Lit("monitor"),)))
    )
    assert len(r.nacs) == 1 and r.nacs[0].owner == owner
    # creation-only items are not part of the left-hand side
    (comp,) = r.lhs
    assert [e.nonterminal for e in comp.get("elements")] == ["ComponentDef"]


def test_decompose_delete_and_replace(lang):
    d = load_rule(lang, "component $c { port [[ out p state :- ]]; }")
    (edit,) = d.rhs_delta
    assert isinstance(edit, Delete)
    assert d.lhs[0].get("elements")[0].get("ports")[0].pid == edit.target
    r = load_rule(lang, "component $c { port [[ out A x :- out B x ]]; }")
    (edit,) = r.rhs_delta
    assert isinstance(edit, Replace)
    assert edit.template.get("type") == Lit("B")


@pytest.mark.parametrize("name", ["AddMonitoring", "ClientAuth", "AddMonitoringGuarded", "GrowPorts", "AddTrust"])
def test_decompose_is_lossless(name):
    for rule in read_module(name).trafo_methods.values():
        assert merge(rule.parts) == rule.top_elems


def test_merge_lossless_for_mixed_rule(lang):
    r = load_rule(
        lang,
        "not [[ component $_ { trustlevel 3; } ]] "
        "component $c { [[ :- trustlevel 1; ]] port [[ in int a :- ]], in int b, [[ :- out int z ]]; "
        "not [[ access (r); ]] [[ connect a -> b; :- connect b -> a; ]] }",
    )
    assert merge(r.parts) == r.top_elems
    assert len(r.nacs) == 2 and len(r.rhs_delta) == 4


def _corpus_assignments(text):
    return list(re.finditer(r"\$\w+ = [^;}]*;?", text))


@pytest.mark.parametrize("name", ["AddMonitoring", "ClientAuth"])
def test_corpus_compiles_and_each_deleted_assignment_is_reported(lang, name):
    text = (MODULES / f"{name}.mtr").read_text()
    load_module(lang, text)
    found = _corpus_assignments(text)
    assert found
    for m in found:
        var = m.group(0).split()[0]
        mutated = text[: m.start()] + text[m.end():]
        with pytest.raises(CompileError) as info:
            load_module(lang, mutated)
        msg = str(info.value)
        assert msg.count("unbound variable") == 1 and var in msg


@pytest.mark.parametrize(
    "text, message",
    [
        ("module M { main() { x(); } }", "undefined method x"),
        ("module M { helper() { } }", "no main"),
        ("module M { main() { loop h(); } h() { } }", "loop needs a transformation method"),
        ("module M { main() { a(); } a() { b(); } b() { a(); } }", "recursive"),
        ("module M { main() { } main() { } }", "defined twice"),
        (
            "module M { main() { } transformation t() { component $c { [[ :- port in int $x; ]] } } }",
            "unbound variable $x",
        ),
        (
            "module M { main() { } transformation t() { component $c { [[ :- port in int $_; ]] } } }",
            "anonymous",
        ),
        (
            "module M { main() { } transformation t() { component $c {} where { $c.getFoo() == 1 } } }",
            "",
        ),
        (
            "module M { main() { } transformation t() { ComponentDef $c; where { $c.getFoo() == 1 } } }",
            "unknown accessor getFoo",
        ),
        (
            "module M { main() { } transformation t() { Access $a; where { $a.getPort() == \"x\" } } }",
            "unknown accessor getPort",
        ),
        (
            "module M { main() { } transformation t() { Bogus $a; } }",
            "unknown element type Bogus",
        ),
        (
            "module M { main() { } transformation t() { component $c { PortDecl $p; } } }",
            "cannot stand where Element",
        ),
        (
            "module M { main() { } transformation t() { Access $a [[ component $c {} ]] } }",
            "not a Access",
        ),
        (
            "module M { main() { } transformation t() { component $c {} where { $c = \"x\"; } } }",
            "already bound",
        ),
        (
            "module M { main() { } transformation t() { component $c { [[ :- ]] } } }",
            "at least one side",
        ),
        (
            "module M { main() { } transformation t() { component $c { not [[ port [[ :- in int x ]]; ]] } } }",
            "cannot be nested",
        ),
        (
            "module M { main() { } transformation t() { component $c { trustlevel $t; } } }",
            "",
        ),
        (
            "module M { main() { } transformation t() { component $n { not [[ out int $q ]] } "
            "where { $q = $n.concat(\"x\"); } } }",
            "used in a negative element",
        ),
        (
            "module M { main() { } transformation t() { component $n {} where { $x = $n.concat(1); } } }",
            "concat() needs string operands",
        ),
        (
            "module M { main() { } transformation t() { [[ :- port in int x; ]] } }",
            "model root",
        ),
    ],
)
def test_compile_errors(lang, text, message):
    from cnctrans.errors import ParseError

    with pytest.raises((CompileError, ParseError)) as info:
        load_module(lang, text)
    assert message in str(info.value)


def test_template_fields_must_be_complete(lang):
    with pytest.raises(CompileError, match="lacks its mandatory type"):
        load_module(lang, "module M { main() { } transformation t() { component $c { [[ :- port in x; ]] } } }")


def test_calls_and_inline_instruction_methods(lang):
    m = load_module(
        lang,
        "module M { main() { setup(); loop t(); } setup() { t(); } "
        "transformation t() { component $c {} } }",
    )
    assert m.instr_methods["main"] == (Call("setup"), Loop("t"))
    assert m.instr_methods["setup"] == (Call("t"),)


def test_var_order_is_first_occurrence(lang):
    r = load_rule(lang, 'component $b { component $t $a; } where { $z = $a.concat("q"); }')
    assert r.var_order == ("$b", "$t", "$a", "$z")

from cnctrans.modexec import run_module
from cnctrans.rules import load_module

from conftest import MODELS, model_from_text, read_model, read_module


def test_add_monitoring_report(lang):
    out, report = run_module(read_module("AddMonitoring"), read_model(MODELS / "remote.arc"), lang)
    assert [(s.statement, s.applications) for s in report.per_statement] == [
        ("loop addPorts()", 2), ("loop addMonitor()", 1), ("loop connect()", 3),
    ]
    assert report.total_applications == 6 and report.changed
    assert any("RemoteNodeMonitor" in d.message for d in report.diagnostics)


def test_client_auth_report(lang):
    out, report = run_module(read_module("ClientAuth"), read_model(MODELS / "shop.arc"), lang)
    assert report.counts() == {"accessPort": 1}
    server = out["components"][0]["elements"][1]
    assert server["elements"][-1].nonterminal == "PortAccess"


def test_no_match_module(lang):
    module = load_module(lang, "module M { main() { loop t(); } transformation t() { component Nope {} } }")
    model = read_model(MODELS / "remote.arc")
    out, report = run_module(module, model, lang)
    assert not report.changed and out == model and report.total_applications == 0


def test_trace_lines(lang):
    lines = []
    run_module(read_module("AddMonitoring"), read_model(MODELS / "remote.arc"), lang, trace=lines.append)
    assert lines[0] == "addPorts @ remote.arc:1 bindings {$name=RemoteNode, $sp=RemoteNodeState}"
    assert lines[1] == "addPorts @ remote.arc:8 bindings {$name=Actuator, $sp=ActuatorState}"
    assert len(lines) == 6


def test_suppressed_application_not_traced(lang):
    lines = []
    model = model_from_text("component A { trustlevel 2; }")
    run_module(read_module("AddTrust"), model, lang, trace=lines.append)
    assert lines == []


def test_call_applies_once_and_inlines_instruction_methods(lang):
    module = load_module(
        lang,
        "module M { main() { twice(); } twice() { grow(); grow(); } "
        "transformation grow() { component $c { port [[ in int $p :- in int $q ]]; } "
        "where { $q = $p.concat(\"x\"); } } }",
    )
    out, report = run_module(module, model_from_text("component A { port in int a; }"), lang)
    assert [(s.statement, s.applications) for s in report.per_statement] == [("grow()", 1), ("grow()", 1)]
    assert out["components"][0]["elements"][0]["ports"][0]["name"] == "axx"


def test_replay_is_identical(lang):
    module = read_module("AddMonitoring")
    a, ra = run_module(module, read_model(MODELS / "remote.arc"), lang)
    b, rb = run_module(module, read_model(MODELS / "remote.arc"), lang)
    assert a == b and ra.per_statement == rb.per_statement


def test_second_run_changes_nothing(lang):
    for name, model_file in [("AddMonitoring", "remote.arc"), ("ClientAuth", "shop.arc")]:
        module = read_module(name)
        out, _ = run_module(module, read_model(MODELS / model_file), lang)
        again, report = run_module(module, out, lang)
        assert not report.changed and again == out

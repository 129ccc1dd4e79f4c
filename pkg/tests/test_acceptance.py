"""Acceptance criteria 1-9.

Each test prints one `criterion N: PASS|FAIL ...` line (visible with or
without -s) and then asserts.  Run this file alone for just the summary:

    pytest tests/test_acceptance.py -q
"""

from __future__ import annotations

import subprocess
import sys
import time

import pytest

from cnctrans.adl import cnc_language, component_view
from cnctrans.cli import main as cli_main
from cnctrans.matching import find_matches
from cnctrans.modexec import run_module
from cnctrans.printer import pretty_print
from cnctrans.rules import load_rule, parse_module, parse_rule
from cnctrans.syntax import parse_model

from conftest import GOLDEN, REMOTE_NODE, MODELS, MODULES, read_model, read_module
from modelgen import PATTERNS, random_model
from oracle import engine_key, oracle_matches

ORACLE_MODELS = 120
_started = time.perf_counter()


@pytest.fixture
def report(capsys):
    """Print the verdict line outside pytest's capture, then assert."""

    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


def _golden(name: str):
    return read_model(GOLDEN / name)


def test_criterion_1_remote_node_parse(report):
    model = cnc_language().normalize(parse_model(cnc_language().grammar, None, REMOTE_NODE, "remote_node.arc"))
    comps = model["components"]
    view = component_view(comps[0])
    ok = (
        len(comps) == 1
        and [(p.direction, p.type, p.name) for p in view.ports] == [("in", "int", "el"), ("in", "int", "er")]
        and [(r.type, r.name) for r in view.sub_refs] == [("Actuator", "left"), ("Actuator", "right")]
        and [(c.source, c.target) for c in view.connectors] == [("el", "left.effort"), ("er", "right.effort")]
    )
    report(1, ok, f"1 component, {len(view.ports)} in-ports, {len(view.sub_refs)} subcomponents, "
                  f"{len(view.connectors)} connectors")


def test_criterion_2_derivation_closure(report):
    dstl = cnc_language().dstl
    for name in ("AddMonitoring", "ClientAuth"):
        parse_module(dstl, (MODULES / f"{name}.mtr").read_text(encoding="utf-8"))
    models = sorted(MODELS.glob("*.arc")) + sorted(GOLDEN.glob("*.arc"))
    variable_free = 0
    for path in models:
        rule = parse_rule(dstl, path.read_text(encoding="utf-8"))
        kinds = {n.nonterminal for n in rule.walk()}
        if not any(k.endswith(("_VarBlack", "_VarWhite", "_Neg", "_Repl")) or k == "NameVar" for k in kinds):
            variable_free += 1
    report(2, variable_free == len(models),
           f"both example modules parse; {variable_free}/{len(models)} models parse as variable-free rules")


def test_criterion_3_add_monitoring_literal(report):
    lang = cnc_language()
    out, rep = run_module(read_module("AddMonitoring"), read_model(MODELS / "remote.arc"), lang)
    counts = rep.counts()
    ok = out == _golden("remote.AddMonitoring.arc") and counts == {"addPorts": 2, "addMonitor": 1, "connect": 3}
    report(3, ok, f"golden match={out == _golden('remote.AddMonitoring.arc')}, counts={counts}")


def test_criterion_4_add_monitoring_guarded(report):
    lang = cnc_language()
    out, rep = run_module(read_module("AddMonitoringGuarded"), read_model(MODELS / "remote.arc"), lang)
    text = pretty_print(lang.grammar, out)
    counts = rep.counts()
    ok = (
        out == _golden("remote.AddMonitoringGuarded.arc")
        and counts["connect"] == 2
        and "monitor.monitorState" not in text
    )
    report(4, ok, f"golden match={out == _golden('remote.AddMonitoringGuarded.arc')}, counts={counts}")


@pytest.mark.parametrize("name", ["AddMonitoring", "AddMonitoringGuarded"])
def test_criterion_5_idempotence(report, name):
    lang = cnc_language()
    module = read_module(name)
    once, _ = run_module(module, read_model(MODELS / "remote.arc"), lang)
    twice, rep = run_module(module, once, lang)
    per = [s.applications for s in rep.per_statement]
    ok = not rep.changed and per == [0, 0, 0] and twice == once
    report(5, ok, f"{name}: second run changed={rep.changed}, applications={per}")


def test_criterion_6_client_auth(report):
    lang = cnc_language()
    module = read_module("ClientAuth")
    out, rep = run_module(module, read_model(MODELS / "shop.arc"), lang)
    equal = read_model(MODELS / "shop_equal.arc")
    out_equal, rep_equal = run_module(module, equal, lang)
    before = pretty_print(lang.grammar, read_model(MODELS / "shop.arc")).splitlines()
    after = pretty_print(lang.grammar, out).splitlines()
    added = [line.strip() for line in after if line not in before]
    ok = (
        out == _golden("shop.ClientAuth.arc")
        and added == ["access order (employee);"]
        and rep.counts() == {"accessPort": 1}
        and out_equal == equal
        and not rep_equal.changed
    )
    report(6, ok, f"added={added}, applications={rep.total_applications}, "
                  f"equal-trust changed={rep_equal.changed}")


def test_criterion_7_oracle_equivalence(report):
    lang = cnc_language()
    rules = {name: load_rule(lang, text, name) for name, text in PATTERNS.items()}
    discrepancies = []
    checked = 0
    largest = 0
    for seed in range(ORACLE_MODELS):
        _, model = random_model(seed)
        largest = max(largest, model.size())
        for name, rule in rules.items():
            found = find_matches(rule, model, lang)
            engine = {engine_key(m) for m in found}
            if engine != oracle_matches(rule, model, lang) or len(engine) != len(found):
                discrepancies.append((seed, name))
            checked += 1
    report(7, not discrepancies and len(rules) >= 10 and largest <= 30,
           f"{ORACLE_MODELS} models (max {largest} nodes) x {len(rules)} patterns = {checked} checks, "
           f"{len(discrepancies)} discrepancies {discrepancies[:5]}")


def _cli(*argv):
    cmd = [sys.executable, "-m", "cnctrans", *map(str, argv)]
    return subprocess.run(cmd, capture_output=True)


def test_criterion_8_round_trip_and_determinism(report):
    lang = cnc_language()
    g = lang.grammar
    corpus = sorted(MODELS.glob("*.arc")) + sorted(GOLDEN.glob("*.arc"))
    round_trips = 0
    for path in corpus:
        m = parse_model(g, None, path.read_text(encoding="utf-8"), path.name)
        if parse_model(g, None, pretty_print(g, m)) == m:
            round_trips += 1
    commands = [
        ("fmt", MODELS / "remote.arc"),
        ("match", MODULES / "AddMonitoring.mtr", MODELS / "remote.arc"),
        ("transform", MODULES / "AddMonitoring.mtr", MODELS / "remote.arc", "--trace"),
        ("transform", MODULES / "ClientAuth.mtr", MODELS / "shop.arc", "--trace"),
    ]
    stable = 0
    for argv in commands:
        a, b = _cli(*argv), _cli(*argv)
        if a.returncode == 0 and (a.stdout, a.stderr) == (b.stdout, b.stderr) and a.stdout:
            stable += 1
    report(8, round_trips == len(corpus) and stable == len(commands),
           f"{round_trips}/{len(corpus)} files round-trip, {stable}/{len(commands)} CLI runs byte-identical")


def test_criterion_9_guards(report, tmp_path, capsys):
    remote = MODELS / "remote.arc"
    grow = cli_main(["transform", str(MODULES / "GrowPorts.mtr"), str(remote), "-o", str(tmp_path / "g"),
                     "--max-apply", "25"])
    dup = cli_main(["transform", str(MODULES / "AddTrust.mtr"), str(remote), "-o", str(tmp_path / "d")])
    same = cli_main(["transform", str(MODULES / "SameName.mtr"), str(remote), "-o", str(tmp_path / "s"),
                     "--max-apply", "25"])
    capsys.readouterr()
    report(9, (grow, dup, same) == (3, 0, 0),
           f"self-feeding rule exit {grow}, duplicate-creating rule exit {dup}, same-name rename exit {same}")


def test_acceptance_time_budget(capsys):
    elapsed = time.perf_counter() - _started
    with capsys.disabled():
        print(f"\nacceptance suite wall time: {elapsed:.1f}s (budget 120s)")
    assert elapsed < 120

"""Executing transformation modules starting from main()."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .language import Language
from .matching import Match, format_bindings
from .rewrite import DEFAULT_CAP, apply_once, apply_rule_loop
from .rules import Call, Loop, Rule, TransformationModule
from .syntax import AstNode


@dataclass
class StatementReport:
    statement: str
    rule: str
    applications: int


@dataclass
class RunReport:
    per_statement: list[StatementReport] = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    changed: bool = False

    @property
    def total_applications(self) -> int:
        return sum(s.applications for s in self.per_statement)

    def counts(self) -> dict[str, int]:
        """Applications per rule, summed over statements."""
        out: dict[str, int] = {}
        for s in self.per_statement:
            out[s.rule] = out.get(s.rule, 0) + s.applications
        return out

    def summary(self) -> str:
        lines = [f"{s.statement}: {s.applications} application(s)" for s in self.per_statement]
        lines.append(f"total: {self.total_applications} application(s), changed={str(self.changed).lower()}")
        return "\n".join(lines)


def trace_line(rule: Rule, match: Match, model: AstNode) -> str:
    anchor = match.anchor()
    where = str(anchor.span) if anchor is not None and anchor.span else "<synthesized>"
    return f"{rule.name} @ {where} bindings {format_bindings(match)}"


def run_module(
    module: TransformationModule,
    model: AstNode,
    lang: Language,
    cap: int = DEFAULT_CAP,
    trace: Callable[[str], None] | None = None,
) -> tuple[AstNode, RunReport]:
    report = RunReport()
    on_apply = None
    if trace is not None:
        def on_apply(rule, match, before):
            trace(trace_line(rule, match, before))

    start = model

    def run(method: str):
        nonlocal model
        for stmt in module.instr_methods[method]:
            if stmt.name in module.instr_methods:
                run(stmt.name)
                continue
            rule = module.trafo_methods[stmt.name]
            if isinstance(stmt, Loop):
                model, n = apply_rule_loop(rule, model, lang, cap, on_apply)
            else:
                assert isinstance(stmt, Call)
                model, n = apply_once(rule, model, lang, on_apply)
            report.per_statement.append(StatementReport(str(stmt), rule.name, n))

    run("main")
    report.changed = model != start
    if lang.check is not None:
        report.diagnostics = list(lang.check(model))
    return model, report

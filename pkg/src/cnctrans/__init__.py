"""Grammar-derived transformation languages for component & connector models."""

from .adl import check_wellformed, cnc_grammar, cnc_language, normalize
from .derive import derive_transformation_grammar
from .errors import (
    CapExceededError,
    CncTransError,
    CompileError,
    DerivationError,
    EvaluationError,
    GrammarError,
    MalformedNodeError,
    ParseError,
    RewriteError,
    StaleMatchError,
)
from .grammar import GrammarSpec, emit_grammar_file, parse_grammar
from .language import AccessorTable, Language
from .matching import BindingEnv, Match, eval_expr, find_matches, match_elem
from .modexec import RunReport, run_module
from .printer import pretty_print
from .rewrite import apply_match, apply_rule_loop, instantiate
from .rules import Rule, TransformationModule, compile_module, decompose, load_module, parse_module
from .syntax import AstNode, Span, parse_model

__all__ = [
    "AccessorTable", "AstNode", "BindingEnv", "CapExceededError", "CncTransError", "CompileError",
    "DerivationError", "EvaluationError", "GrammarError", "GrammarSpec", "Language", "MalformedNodeError",
    "Match", "ParseError", "RewriteError", "Rule", "RunReport", "Span", "StaleMatchError",
    "TransformationModule", "apply_match", "apply_rule_loop", "check_wellformed", "cnc_grammar",
    "cnc_language", "compile_module", "decompose", "derive_transformation_grammar", "emit_grammar_file",
    "eval_expr", "find_matches", "instantiate", "load_module", "match_elem", "normalize", "parse_grammar",
    "parse_model", "parse_module", "pretty_print", "run_module",
]

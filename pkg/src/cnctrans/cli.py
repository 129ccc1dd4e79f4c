"""Command-line front end.

Exit codes: 0 ok, 1 parse/compile/usage error, 2 well-formedness error,
3 transformation or derivation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .adl import cnc_grammar_text, cnc_language
from .derive import derive_transformation_grammar
from .errors import (
    CompileError,
    DerivationError,
    EvaluationError,
    GrammarError,
    MalformedNodeError,
    ParseError,
    RewriteError,
)
from .grammar import emit_grammar_file, parse_grammar
from .language import Language
from .matching import find_matches, format_bindings
from .modexec import run_module
from .printer import pretty_print
from .rewrite import DEFAULT_CAP
from .rules import load_module
from .syntax import AstNode, parse_model

EXIT_OK, EXIT_PARSE, EXIT_WELLFORMED, EXIT_TRANSFORM, EXIT_IO = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Fail(EXIT_PARSE, f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _Fail(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _language(args) -> Language:
    if getattr(args, "grammar", None):
        return Language.generic(parse_grammar(_read(args.grammar)))
    return cnc_language()


def _default_cap() -> int:
    raw = os.environ.get("CNCTRANS_MAX_APPLY")
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise _Fail(EXIT_PARSE, f"CNCTRANS_MAX_APPLY must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise _Fail(EXIT_PARSE, f"CNCTRANS_MAX_APPLY must be a positive integer, got {raw!r}")
    return cap


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _load_models(lang: Language, paths: list[str]) -> AstNode:
    """Parse every file and merge their top-level elements into one model."""
    g = lang.grammar
    merged = None
    for path in paths:
        model = lang.normalize(parse_model(g, None, _read(path), Path(path).name))
        if merged is None:
            merged = model
            continue
        label = _root_list_label(lang)
        merged = merged.replace(**{label: merged[label] + model[label]})
    return merged


def _root_list_label(lang: Language) -> str:
    prod = lang.grammar.production(lang.grammar.start_symbol)
    labels = [e.label for e in prod.body if hasattr(e, "min_count")]
    if len(labels) != 1:
        raise _Fail(EXIT_PARSE, "multiple model files need a start production with exactly one list field")
    return labels[0]


def _split_output(lang: Language, model: AstNode, paths: list[str]) -> dict[str, str]:
    """Pretty-print the merged model back into one text per input file."""
    names = [Path(p).name for p in paths]
    if len(paths) == 1:
        return {paths[0]: pretty_print(lang.grammar, model)}
    label = _root_list_label(lang)
    groups: dict[str, list] = {n: [] for n in names}
    for item in model[label]:
        origin = item.span.file if item.span and item.span.file in groups else names[0]
        groups[origin].append(item)
    out = {}
    for path, name in zip(paths, names):
        items = groups[name]
        out[path] = pretty_print(lang.grammar, model.replace(**{label: tuple(items)})) if items else ""
    return out


def _check_inputs(lang: Language, model: AstNode, strict: bool) -> None:
    if lang.check is None:
        return
    diags = lang.check(model, strict=strict)
    for d in diags:
        print(d, file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        raise _Fail(EXIT_WELLFORMED, "model is not well-formed")


# -- commands ----------------------------------------------------------------

def cmd_derive_grammar(args) -> int:
    text = _read(args.grammar_file) if args.grammar_file else cnc_grammar_text()
    derived = derive_transformation_grammar(parse_grammar(text))
    out = emit_grammar_file(derived)
    if args.output:
        _write(Path(args.output), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_transform(args) -> int:
    lang = _language(args)
    module = load_module(lang, _read(args.module), Path(args.module).name)
    model = _load_models(lang, args.models)
    _check_inputs(lang, model, args.strict)
    cap = args.max_apply or _default_cap()
    trace = (lambda line: print(line, file=sys.stderr)) if args.trace else None
    result, report = run_module(module, model, lang, cap=cap, trace=trace)
    texts = _split_output(lang, result, args.models)
    if args.in_place:
        for path, text in texts.items():
            _write(Path(path), text)
    elif args.output:
        for path, text in texts.items():
            _write(Path(args.output) / Path(path).name, text)
    else:
        for text in texts.values():
            sys.stdout.write(text)
    for d in report.diagnostics:
        print(f"output: {d}", file=sys.stderr)
    out = sys.stderr if not (args.in_place or args.output) else sys.stdout
    print(report.summary(), file=out)
    return EXIT_OK


def cmd_match(args) -> int:
    lang = _language(args)
    module = load_module(lang, _read(args.module), Path(args.module).name)
    model = _load_models(lang, args.models)
    if args.rule:
        if args.rule not in module.trafo_methods:
            raise _Fail(EXIT_PARSE, f"module {module.name} has no transformation method {args.rule}")
        rules = [module.trafo_methods[args.rule]]
    else:
        rules = list(module.trafo_methods.values())
    total = 0
    for rule in rules:
        for m in find_matches(rule, model, lang):
            anchor = m.anchor()
            where = f" @ {anchor.span}" if anchor is not None and anchor.span else ""
            print(f"{rule.name}{where} {format_bindings(m)}")
            total += 1
    print(f"{total} match(es)")
    return EXIT_OK


def cmd_check(args) -> int:
    lang = _language(args)
    model = _load_models(lang, args.models)
    if lang.check is None:
        return EXIT_OK
    diags = lang.check(model, strict=args.strict)
    for d in diags:
        print(d)
    return EXIT_WELLFORMED if any(d.severity == "error" for d in diags) else EXIT_OK


def cmd_fmt(args) -> int:
    lang = _language(args)
    for path in args.models:
        model = lang.normalize(parse_model(lang.grammar, None, _read(path), Path(path).name))
        sys.stdout.write(pretty_print(lang.grammar, model))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cnctrans", description="Derive and run transformation languages for C&C models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("derive-grammar", help="write the transformation grammar derived from a base grammar")
    d.add_argument("grammar_file", nargs="?", help="base .mcg grammar (default: the built-in CnC grammar)")
    d.add_argument("-o", "--output", help="output file (default: standard output)")
    d.set_defaults(func=cmd_derive_grammar)

    t = sub.add_parser("transform", help="run a transformation module on models")
    t.add_argument("module")
    t.add_argument("models", nargs="+")
    dest = t.add_mutually_exclusive_group()
    dest.add_argument("-o", "--output", help="output directory")
    dest.add_argument("--in-place", action="store_true", help="overwrite the input models")
    t.add_argument("--max-apply", type=_positive, help="per-loop application cap")
    t.add_argument("--trace", action="store_true", help="print one line per applied match to stderr")
    t.add_argument("--strict", action="store_true", help="treat unknown component types as errors")
    t.set_defaults(func=cmd_transform)

    m = sub.add_parser("match", help="list the matches of a module's rules")
    m.add_argument("module")
    m.add_argument("models", nargs="+")
    m.add_argument("--rule", help="only this transformation method")
    m.set_defaults(func=cmd_match)

    c = sub.add_parser("check", help="report well-formedness diagnostics")
    c.add_argument("models", nargs="+")
    c.add_argument("--strict", action="store_true")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fmt", help="print models normalized and pretty-printed")
    f.add_argument("models", nargs="+")
    f.set_defaults(func=cmd_fmt)

    for sp in (t, m, c, f):
        sp.add_argument("--grammar", help="base .mcg grammar instead of the built-in CnC grammar")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, GrammarError, CompileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DerivationError, RewriteError, EvaluationError, MalformedNodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSFORM

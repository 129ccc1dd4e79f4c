"""Transformation modules: parsing, compilation into the rule IR, decomposition.

A compiled Rule keeps the integrated pattern exactly as written
(`top_elems`).  `decompose` splits it into the positive left-hand side,
the list of edits (the right-hand side delta), and the negative
application conditions, each remembering where it came from so that
`merge` can rebuild the original pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import count
from typing import Any, Union

from .derive import base_name
from .errors import CompileError
from .language import Language
from .syntax import AstNode, parse_model

ANON_VAR = "$_"


# -- name references -------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    text: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Anon:
    pass


ANON = Anon()
NameRef = Union[Lit, Var, Anon]


@dataclass(frozen=True)
class QName:
    """Qualified name pattern, one NameRef per dot-separated segment."""

    parts: tuple[NameRef, ...]


# -- pattern elements --------------------------------------------------------

@dataclass(frozen=True)
class Concrete:
    pid: int
    nonterminal: str
    fields: tuple[tuple[str, Any], ...]
    source_empty: bool = False

    def get(self, label, default=None):
        for k, v in self.fields:
            if k == label:
                return v
        return default

    def replace_fields(self, fields) -> "Concrete":
        return Concrete(self.pid, self.nonterminal, tuple(fields), self.source_empty)


@dataclass(frozen=True)
class VarBlack:
    pid: int
    type: str
    var: str


@dataclass(frozen=True)
class VarWhite:
    pid: int
    type: str
    var: str
    body: Concrete


@dataclass(frozen=True)
class Neg:
    pid: int
    body: Concrete


@dataclass(frozen=True)
class Repl:
    pid: int
    left: Concrete | None
    right: Concrete | None


PatternElem = Union[Concrete, VarBlack, VarWhite, Neg, Repl]


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class MethodCall:
    receiver: Any
    method: str


@dataclass(frozen=True)
class Concat:
    left: Any
    right: Any


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Any
    right: Any


@dataclass(frozen=True)
class BoolOp:
    op: str  # "&&" | "||" | "!"
    operands: tuple


Expr = Union[VarRef, MethodCall, Concat, StrLit, IntLit, Cmp, BoolOp]


def expr_vars(e) -> list[str]:
    if isinstance(e, VarRef):
        return [e.name]
    if isinstance(e, MethodCall):
        return expr_vars(e.receiver)
    if isinstance(e, (Concat, Cmp)):
        return expr_vars(e.left) + expr_vars(e.right)
    if isinstance(e, BoolOp):
        return [v for o in e.operands for v in expr_vars(o)]
    return []


# -- edits and NACs ----------------------------------------------------------

@dataclass(frozen=True)
class Create:
    pid: int
    owner: int | None  # pid of the enclosing pattern element; None = model root
    field: str | None
    index: int | None
    template: Concrete


@dataclass(frozen=True)
class Delete:
    pid: int
    target: int  # pid of the matched left side
    owner: int | None
    field: str | None
    index: int | None


@dataclass(frozen=True)
class Replace:
    pid: int
    target: int
    template: Concrete
    owner: int | None
    field: str | None
    index: int | None


Edit = Union[Create, Delete, Replace]


@dataclass(frozen=True)
class Nac:
    pid: int
    owner: int | None
    field: str | None
    index: int | None
    body: Concrete


@dataclass(frozen=True)
class Decomposition:
    lhs: tuple
    delta: tuple
    nacs: tuple


# -- rules and modules -------------------------------------------------------

@dataclass
class Rule:
    name: str
    top_elems: tuple
    where_assignments: tuple = ()
    constraint: Any = None
    elem_vars: dict = field(default_factory=dict)  # var -> declared type
    name_vars: tuple = ()
    var_order: tuple = ()

    @cached_property
    def parts(self) -> Decomposition:
        return decompose(self)

    @property
    def lhs(self):
        return self.parts.lhs

    @property
    def rhs_delta(self):
        return self.parts.delta

    @property
    def nacs(self):
        return self.parts.nacs


@dataclass(frozen=True)
class Call:
    name: str

    def __str__(self):
        return f"{self.name}()"


@dataclass(frozen=True)
class Loop:
    name: str

    def __str__(self):
        return f"loop {self.name}()"


@dataclass
class TransformationModule:
    name: str
    instr_methods: dict[str, tuple]
    trafo_methods: dict[str, Rule]


# -- parsing -----------------------------------------------------------------

def parse_module(dstl, text: str, filename: str = "<module>") -> AstNode:
    return parse_model(dstl, "Module", text, filename)


def parse_rule(dstl, text: str, filename: str = "<rule>") -> AstNode:
    return parse_model(dstl, "TransformationRule", text, filename)


# -- compilation -------------------------------------------------------------

class _RuleCompiler:
    def __init__(self, lang: Language, rule_name: str, pids):
        self.lang = lang
        self.g = lang.grammar
        self.rule = rule_name
        self.pids = pids
        self.elem_vars: dict[str, str] = {}
        self.name_vars: list[str] = []
        self.order: list[str] = []
        self.bound: set[str] = set()
        self.template_uses: list[str] = []
        self.nac_uses: list[str] = []

    def fail(self, msg):
        raise CompileError(f"rule {self.rule}: {msg}")

    def _see(self, var, kind, type_name=None):
        if var == ANON_VAR:
            return
        if kind == "elem":
            if var in self.name_vars:
                self.fail(f"{var} is used both as a name and as an element variable")
            self.elem_vars.setdefault(var, type_name)
        else:
            if var in self.elem_vars:
                self.fail(f"{var} is used both as a name and as an element variable")
            if var not in self.name_vars:
                self.name_vars.append(var)
        if var not in self.order:
            self.order.append(var)

    def _use(self, var, ctx):
        if ctx == "lhs":
            self.bound.add(var)
        elif ctx == "template":
            self.template_uses.append(var)
        else:
            self.nac_uses.append(var)

    def name_ref(self, node: AstNode, ctx) -> NameRef:
        if node.nonterminal == "NameLit":
            return Lit(node["value"])
        var = node["var"]
        if var == ANON_VAR:
            if ctx == "template":
                self.fail("the anonymous variable $_ cannot be instantiated")
            return ANON
        self._see(var, "name")
        self._use(var, ctx)
        return Var(var)

    def value(self, v, ctx):
        if isinstance(v, tuple):
            return tuple(self.value(x, ctx) for x in v)
        if not isinstance(v, AstNode):
            return v
        if v.nonterminal in ("NameLit", "NameVar"):
            return self.name_ref(v, ctx)
        if v.nonterminal == "QNamePat":
            return QName(tuple(self.name_ref(s, ctx) for s in v["segments"]))
        return self.elem(v, ctx)

    def concrete(self, node: AstNode, ctx) -> Concrete:
        base, suffix = base_name(node.nonterminal)
        assert suffix == "_Pat", node.nonterminal
        pid = next(self.pids)
        fields = tuple((k, self.value(v, ctx)) for k, v in node.items())
        lists = [v for _, v in fields if isinstance(v, tuple)]
        return Concrete(pid, base, fields, source_empty=all(len(v) == 0 for v in lists))

    def _check_type(self, type_name):
        if not self.g.defines(type_name):
            self.fail(f"unknown element type {type_name}")

    def elem(self, node: AstNode, ctx, top: bool = False) -> PatternElem:
        # at top level the parser's choice of X_VarBlack/X_VarWhite says nothing
        # about the slot; nested, X is the slot's declared type
        base, suffix = base_name(node.nonterminal)
        if suffix == "_Pat":
            return self.concrete(node, ctx)
        if suffix == "_VarBlack":
            type_name, var = node["type"], node["var"]
            self._check_type(type_name)
            if not top and not self.g.related(type_name, base):
                self.fail(f"{type_name} {var} cannot stand where {base} is expected")
            if ctx == "template" and var == ANON_VAR:
                self.fail("the anonymous variable $_ cannot be instantiated")
            self._see(var, "elem", type_name)
            self._use(var, ctx)
            return VarBlack(next(self.pids), type_name, var)
        if suffix == "_VarWhite":
            type_name, var = node["type"], node["var"]
            self._check_type(type_name)
            if not top and not self.g.related(type_name, base):
                self.fail(f"{type_name} {var} cannot stand where {base} is expected")
            pid = next(self.pids)
            self._see(var, "elem", type_name)
            self._use(var, ctx)
            body = self.concrete(node["body"], ctx)
            if not self.g.implements(body.nonterminal, type_name):
                self.fail(f"{type_name} {var} [[ ... ]] wraps a {body.nonterminal}, which is not a {type_name}")
            return VarWhite(pid, type_name, var, body)
        if suffix == "_Neg":
            if ctx != "lhs":
                self.fail("negative elements are only allowed in the positive pattern")
            pid = next(self.pids)
            return Neg(pid, self.concrete(node["body"], "nac"))
        if suffix == "_Repl":
            if ctx != "lhs":
                self.fail("replacements cannot be nested")
            if node["left"] is None and node["right"] is None:
                self.fail("a replacement needs at least one side")
            pid = next(self.pids)
            left = self.concrete(node["left"], "lhs") if node["left"] is not None else None
            right = self.concrete(node["right"], "template") if node["right"] is not None else None
            return Repl(pid, left, right)
        self.fail(f"unexpected pattern node {node.nonterminal}")

    # -- expressions

    def expr(self, node: AstNode):
        nt = node.nonterminal
        if nt in ("Expr", "AndExpr"):
            ops = tuple(self.expr(o) for o in node["operands"])
            return ops[0] if len(ops) == 1 else BoolOp("||" if nt == "Expr" else "&&", ops)
        if nt == "Negation":
            return BoolOp("!", (self.expr(node["operand"]),))
        if nt == "Comparison":
            left = self.expr(node["left"])
            tail = node["tail"]
            return left if tail is None else Cmp(tail["op"], left, self.expr(tail["right"]))
        if nt == "Postfix":
            e = self.expr(node["primary"])
            for call in node["calls"]:
                args = tuple(self.expr(a) for a in call["args"])
                if call["method"] == "concat":
                    if len(args) != 1:
                        self.fail("concat() takes exactly one argument")
                    e = Concat(e, args[0])
                else:
                    if args:
                        self.fail(f"{call['method']}() takes no arguments")
                    e = MethodCall(e, call["method"])
            return e
        if nt == "VarRef":
            return VarRef(node["var"])
        if nt == "StrLit":
            return StrLit(node["value"])
        if nt == "IntLit":
            return IntLit(node["value"])
        if nt == "ParenExpr":
            return self.expr(node["expr"])
        self.fail(f"unexpected expression node {nt}")

    def check_expr(self, e, available: set[str], assigned_types: dict):
        for v in expr_vars(e):
            if v == ANON_VAR:
                self.fail("the anonymous variable $_ has no value")
            if v not in available:
                self.fail(f"unbound variable {v}")
        self._check_calls(e, assigned_types)

    def _static_type(self, e, assigned_types):
        if isinstance(e, VarRef):
            if e.name in self.elem_vars:
                return ("node", self.elem_vars[e.name])
            if e.name in self.name_vars:
                return ("str", None)
            return assigned_types.get(e.name)
        if isinstance(e, (Concat, StrLit)):
            return ("str", None)
        if isinstance(e, IntLit):
            return ("int", None)
        if isinstance(e, (Cmp, BoolOp)):
            return ("bool", None)
        return None

    def _check_calls(self, e, assigned_types):
        if isinstance(e, MethodCall):
            self._check_calls(e.receiver, assigned_types)
            t = self._static_type(e.receiver, assigned_types)
            if t is None:
                return
            if t[0] != "node":
                self.fail(f"{e.method}() cannot be called on a {t[0]} value")
            if not self.lang.accessors.resolves(t[1], e.method):
                self.fail(f"unknown accessor {e.method}() for {t[1]}")
        elif isinstance(e, Concat):
            for side in (e.left, e.right):
                self._check_calls(side, assigned_types)
                t = self._static_type(side, assigned_types)
                if t is not None and t[0] != "str":
                    self.fail(f"concat() needs string operands, got a {t[0]} value")
        elif isinstance(e, Cmp):
            self._check_calls(e.left, assigned_types)
            self._check_calls(e.right, assigned_types)
        elif isinstance(e, BoolOp):
            for o in e.operands:
                self._check_calls(o, assigned_types)


def compile_rule(rule_ast: AstNode, lang: Language, name: str = "rule", pids=None) -> Rule:
    """Compile a TransformationRule node into a Rule."""
    rc = _RuleCompiler(lang, name, pids or count(1))
    tops = tuple(rc.elem(e, "lhs", top=True) for e in rule_ast["elems"])
    tops = tuple(lang.normalize_pattern(tops, lambda: next(rc.pids)))
    for top in tops:
        if isinstance(top, Repl) and top.right is not None:
            _check_root_slot(rc, top.right.nonterminal)
    assignments = []
    assigned_types: dict = {}
    available = set(rc.bound)
    where = rule_ast["where"]
    constraint = None
    if where is not None:
        for a in where["assignments"]:
            var = a["var"]
            if var == ANON_VAR:
                rc.fail("cannot assign to the anonymous variable $_")
            if var in rc.bound:
                rc.fail(f"{var} is already bound by the pattern")
            if var in assigned_types:
                rc.fail(f"{var} is assigned twice")
            e = rc.expr(a["value"])
            rc.check_expr(e, available, assigned_types)
            assigned_types[var] = rc._static_type(e, assigned_types)
            available.add(var)
            if var not in rc.order:
                rc.order.append(var)
            assignments.append((var, e))
        if where["constraint"] is not None:
            constraint = rc.expr(where["constraint"])
            rc.check_expr(constraint, available, assigned_types)
    for var in rc.template_uses:
        if var not in available:
            rc.fail(f"unbound variable {var} (not bound by the pattern nor assigned in where)")
    for var in rc.nac_uses:
        if var in assigned_types:
            rc.fail(f"{var} is assigned in where but used in a negative element, which is checked first")
    for var in rc.elem_vars:
        if var in assigned_types:
            rc.fail(f"{var} is an element variable and cannot be assigned")
    rule = Rule(
        name=name,
        top_elems=tops,
        where_assignments=tuple(assignments),
        constraint=constraint,
        elem_vars={v: t for v, t in rc.elem_vars.items() if v != ANON_VAR},
        name_vars=tuple(rc.name_vars),
        var_order=tuple(rc.order),
    )
    _check_templates(rc, rule)
    return rule


def _check_root_slot(rc: _RuleCompiler, nonterminal: str):
    start = rc.g.production(rc.g.start_symbol)
    from .grammar import ListOf, NonterminalRef

    for elem in start.body:
        if isinstance(elem, ListOf) and isinstance(elem.element, NonterminalRef):
            if rc.g.implements(nonterminal, elem.element.target):
                return
    rc.fail(f"a top-level {nonterminal} cannot be created at the model root")


def _check_templates(rc: _RuleCompiler, rule: Rule):
    from .grammar import ListOf, Optional, Terminal

    def check(c: Concrete):
        prod = rc.g.production(c.nonterminal)
        for elem in prod.body:
            if isinstance(elem, Terminal):
                continue
            v = c.get(elem.label)
            if isinstance(elem, Optional):
                pass
            elif isinstance(elem, ListOf):
                if elem.min_count and not v:
                    rc.fail(f"created {c.nonterminal} needs at least one {elem.label}")
            elif v is None:
                rc.fail(f"created {c.nonterminal} lacks its mandatory {elem.label}")
        for _, v in c.fields:
            for x in (v if isinstance(v, tuple) else (v,)):
                if isinstance(x, Concrete):
                    check(x)
                elif isinstance(x, VarWhite):
                    check(x.body)

    for edit in rule.rhs_delta:
        if isinstance(edit, (Create, Replace)):
            check(edit.template)


def compile_module(module_ast: AstNode, lang: Language) -> TransformationModule:
    """Compile a parsed module; enforces binding and call-resolution rules."""
    name = module_ast["name"]
    instr: dict[str, tuple] = {}
    trafo: dict[str, Rule] = {}
    pids = count(1)
    for m in module_ast["methods"]:
        mname = m["name"]
        if mname in instr or mname in trafo:
            raise CompileError(f"module {name}: method {mname} defined twice")
        if m.nonterminal == "TrafoMethod":
            trafo[mname] = compile_rule(m["rule"], lang, mname, pids)
        else:
            instr[mname] = tuple(
                Loop(s["name"]) if s.nonterminal == "LoopStmt" else Call(s["name"]) for s in m["stmts"]
            )
    if "main" not in instr:
        raise CompileError(f"module {name}: no main() instruction method")
    for mname, stmts in instr.items():
        for s in stmts:
            if s.name not in instr and s.name not in trafo:
                raise CompileError(f"module {name}: {mname}() calls undefined method {s.name}()")
            if isinstance(s, Loop) and s.name in instr:
                raise CompileError(
                    f"module {name}: loop needs a transformation method, {s.name}() is an instruction method"
                )
    _reject_recursion(name, instr)
    return TransformationModule(name, instr, trafo)


def _reject_recursion(module_name, instr):
    state: dict[str, int] = {}

    def visit(m, path):
        state[m] = 1
        for s in instr[m]:
            if isinstance(s, Call) and s.name in instr:
                if state.get(s.name) == 1:
                    cycle = " -> ".join(path + [s.name])
                    raise CompileError(f"module {module_name}: recursive instruction methods: {cycle}")
                if s.name not in state:
                    visit(s.name, path + [s.name])
        state[m] = 2

    for m in instr:
        if m not in state:
            visit(m, [m])


def load_module(lang: Language, text: str, filename: str = "<module>") -> TransformationModule:
    return compile_module(parse_module(lang.dstl, text, filename), lang)


def load_rule(lang: Language, text: str, name: str = "rule") -> Rule:
    return compile_rule(parse_rule(lang.dstl, text, name), lang, name)


# -- decomposition -----------------------------------------------------------

def decompose(rule: Rule) -> Decomposition:
    """Split the integrated pattern into LHS forest, edits and NACs."""
    delta: list = []
    nacs: list = []

    def item(x, owner, fld, index):
        """LHS replacement for one pattern item, or None to drop it."""
        if isinstance(x, Repl):
            if x.left is None:
                delta.append(Create(x.pid, owner, fld, index, x.right))
                return None
            if x.right is None:
                delta.append(Delete(x.pid, x.left.pid, owner, fld, index))
            else:
                delta.append(Replace(x.pid, x.left.pid, x.right, owner, fld, index))
            return concrete(x.left)
        if isinstance(x, Neg):
            nacs.append(Nac(x.pid, owner, fld, index, x.body))
            return None
        if isinstance(x, Concrete):
            return concrete(x)
        if isinstance(x, VarWhite):
            return VarWhite(x.pid, x.type, x.var, concrete(x.body))
        return x

    def concrete(c: Concrete) -> Concrete:
        fields = []
        for k, v in c.fields:
            if isinstance(v, tuple):
                kept = []
                for i, x in enumerate(v):
                    r = item(x, c.pid, k, i) if _is_elem(x) else x
                    if r is not None:
                        kept.append(r)
                fields.append((k, tuple(kept)))
            elif _is_elem(v):
                fields.append((k, item(v, c.pid, k, None)))
            else:
                fields.append((k, v))
        return c.replace_fields(fields)

    lhs = []
    for i, top in enumerate(rule.top_elems):
        r = item(top, None, None, i)
        if r is not None:
            lhs.append(r)
    return Decomposition(tuple(lhs), tuple(delta), tuple(nacs))


def _is_elem(x) -> bool:
    return isinstance(x, (Concrete, VarBlack, VarWhite, Neg, Repl))


def merge(parts: Decomposition) -> tuple:
    """Inverse of decompose: rebuild the integrated pattern."""
    lefts = {}
    inserts: dict[tuple, list] = {}
    for e in parts.delta:
        if isinstance(e, Create):
            inserts.setdefault((e.owner, e.field), []).append((e.index, Repl(e.pid, None, e.template)))
        else:
            lefts[e.target] = e
    for n in parts.nacs:
        inserts.setdefault((n.owner, n.field), []).append((n.index, Neg(n.pid, n.body)))

    def wrap(x):
        x = restore(x)
        e = lefts.get(getattr(x, "pid", None))
        if e is None:
            return x
        right = e.template if isinstance(e, Replace) else None
        return Repl(e.pid, x, right)

    def restore(x):
        if isinstance(x, Concrete):
            return concrete(x)
        if isinstance(x, VarWhite):
            return VarWhite(x.pid, x.type, x.var, concrete(x.body))
        return x

    def splice(items, key):
        out = [wrap(x) if _is_elem(x) else x for x in items]
        for index, extra in sorted(inserts.get(key, []), key=lambda p: p[0]):
            out.insert(index, extra)
        return tuple(out)

    def concrete(c):
        fields = []
        for k, v in c.fields:
            if isinstance(v, tuple):
                fields.append((k, splice(v, (c.pid, k))))
            elif _is_elem(v):
                fields.append((k, wrap(v)))
            elif v is None and (c.pid, k) in inserts:
                fields.append((k, inserts[(c.pid, k)][0][1]))
            else:
                fields.append((k, v))
        return c.replace_fields(fields)

    return splice(parts.lhs, (None, None))

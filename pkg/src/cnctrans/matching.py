"""Pattern matching of compiled rules against models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import EvaluationError
from .language import AccessorTable, Language
from .rules import (
    ANON_VAR,
    Anon,
    BoolOp,
    Cmp,
    Concat,
    Concrete,
    IntLit,
    Lit,
    MethodCall,
    QName,
    Rule,
    StrLit,
    Var,
    VarBlack,
    VarRef,
    VarWhite,
)
from .syntax import AstNode


@dataclass
class BindingEnv:
    elems: dict = field(default_factory=dict)  # var -> AstNode
    names: dict = field(default_factory=dict)  # var -> str
    corr: dict = field(default_factory=dict)  # pid -> AstNode
    used: dict = field(default_factory=dict)  # id(node) -> var or None

    def copy(self) -> "BindingEnv":
        return BindingEnv(dict(self.elems), dict(self.names), dict(self.corr), dict(self.used))

    def key(self):
        return (
            tuple(sorted((p, id(n)) for p, n in self.corr.items())),
            tuple(sorted(self.names.items())),
        )


@dataclass
class Match:
    rule: Rule
    env: BindingEnv
    values: dict

    @property
    def rule_name(self) -> str:
        return self.rule.name

    def value(self, var):
        if var in self.env.elems:
            return self.env.elems[var]
        if var in self.env.names:
            return self.env.names[var]
        return self.values[var]

    def bindings(self) -> list[tuple[str, object]]:
        """(var, value) in order of first occurrence in the rule."""
        out = []
        for var in self.rule.var_order:
            if var in self.env.elems or var in self.env.names or var in self.values:
                out.append((var, self.value(var)))
        return out

    def anchor(self) -> AstNode | None:
        """The node bound to the first top-level element."""
        for top in self.rule.lhs:
            node = self.env.corr.get(top.pid)
            if node is not None:
                return node
        return None


def render_value(v) -> str:
    if isinstance(v, AstNode):
        name = v.get("name")
        head = f"{v.nonterminal}({name})" if isinstance(name, str) else v.nonterminal
        return f"{head}@{v.span}" if v.span else head
    if isinstance(v, tuple):
        return "[" + ", ".join(render_value(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def format_bindings(match: Match) -> str:
    return "{" + ", ".join(f"{k}={render_value(v)}" for k, v in match.bindings()) + "}"


# -- element matching --------------------------------------------------------

class Matcher:
    def __init__(self, lang: Language):
        self.lang = lang
        self.g = lang.grammar

    def occupy(self, node: AstNode, var: str | None, env: BindingEnv) -> bool:
        """Claim `node` for one pattern occurrence; False if that breaks injectivity."""
        if var == ANON_VAR:
            var = None
        if var is not None:
            bound = env.elems.get(var)
            if bound is not None:
                return bound is node
        if id(node) in env.used:
            return False
        env.used[id(node)] = var
        if var is not None:
            env.elems[var] = node
        return True

    def match_elem(self, pat, node, env: BindingEnv) -> Iterator[BindingEnv]:
        if not isinstance(node, AstNode):
            return
        if isinstance(pat, Concrete):
            yield from self._concrete(pat, node, env, occupy=True)
        elif isinstance(pat, VarBlack):
            if not self.g.implements(node.nonterminal, pat.type):
                return
            env = env.copy()
            if self.occupy(node, pat.var, env):
                env.corr[pat.pid] = node
                yield env
        elif isinstance(pat, VarWhite):
            if not self.g.implements(node.nonterminal, pat.type):
                return
            env = env.copy()
            if self.occupy(node, pat.var, env):
                env.corr[pat.pid] = node
                yield from self._concrete(pat.body, node, env, occupy=False)

    def _concrete(self, pat: Concrete, node: AstNode, env, occupy: bool):
        fields = pat.fields
        if node.nonterminal != pat.nonterminal:
            alias = self.lang.empty_aliases.get(pat.nonterminal)
            if not (pat.source_empty and alias and node.nonterminal == alias[0]):
                return
            _, name_field, names_field = alias
            fields = ((names_field, (pat.get(name_field),)),)
        env = env.copy()
        if occupy and not self.occupy(node, None, env):
            return
        env.corr[pat.pid] = node
        yield from self._fields(fields, 0, node, env)

    def _fields(self, fields, i, node, env):
        if i == len(fields):
            yield env
            return
        label, pv = fields[i]
        for e in self.match_value(pv, node.get(label), env):
            yield from self._fields(fields, i + 1, node, e)

    def match_value(self, pv, mv, env) -> Iterator[BindingEnv]:
        if pv is None:
            yield env
        elif isinstance(pv, tuple):
            if isinstance(mv, tuple):
                yield from self._list(pv, 0, mv, frozenset(), env)
        elif isinstance(pv, (Lit, Var, Anon)):
            e = bind_name(pv, mv, env)
            if e is not None:
                yield e
        elif isinstance(pv, QName):
            if not isinstance(mv, str):
                return
            segs = mv.split(".")
            if len(segs) != len(pv.parts):
                return
            e = env
            for ref, seg in zip(pv.parts, segs):
                e = bind_name(ref, seg, e)
                if e is None:
                    return
            yield e
        elif isinstance(pv, (Concrete, VarBlack, VarWhite)):
            yield from self.match_elem(pv, mv, env)
        elif pv == mv and type(pv) is type(mv):
            yield env

    def _list(self, items, i, children, taken, env):
        if i == len(items):
            yield env
            return
        for j, child in enumerate(children):
            if j in taken:
                continue
            for e in self.match_value(items[i], child, env):
                yield from self._list(items, i + 1, children, taken | {j}, e)


def bind_name(ref, value, env: BindingEnv) -> BindingEnv | None:
    if not isinstance(value, str):
        return None
    if isinstance(ref, Anon):
        return env
    if isinstance(ref, Lit):
        return env if ref.text == value else None
    bound = env.names.get(ref.name)
    if bound is not None:
        return env if bound == value else None
    env = env.copy()
    env.names[ref.name] = value
    return env


def match_elem(lang: Language, pat, node: AstNode, env: BindingEnv | None = None) -> list[BindingEnv]:
    return list(Matcher(lang).match_elem(pat, node, env or BindingEnv()))


# -- NACs --------------------------------------------------------------------

def scope_candidates(scope: AstNode) -> Iterator[AstNode]:
    """Descendants of `scope`, not entering nodes of the scope's own kind."""
    stack = list(reversed(list(scope.children())))
    while stack:
        node = stack.pop()
        yield node
        if node.nonterminal != scope.nonterminal:
            stack.extend(reversed(list(node.children())))


def nac_blocks(matcher: Matcher, nac, env: BindingEnv, root: AstNode) -> bool:
    scope = root if nac.owner is None else env.corr[nac.owner]
    for cand in scope_candidates(scope):
        for _ in matcher.match_elem(nac.body, cand, env):
            return True
    return False


# -- expressions -------------------------------------------------------------

def eval_expr(e, env: BindingEnv, values: dict, table: AccessorTable):
    if isinstance(e, VarRef):
        for scope in (env.elems, env.names, values):
            if e.name in scope:
                return scope[e.name]
        raise EvaluationError(f"unbound variable {e.name}")
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, MethodCall):
        recv = eval_expr(e.receiver, env, values, table)
        if not isinstance(recv, AstNode):
            raise EvaluationError(f"{e.method}() needs a model element, got {render_value(recv)}")
        return table.call(recv, e.method)
    if isinstance(e, Concat):
        left = eval_expr(e.left, env, values, table)
        right = eval_expr(e.right, env, values, table)
        if not (isinstance(left, str) and isinstance(right, str)):
            raise EvaluationError(f"concat() needs strings, got {render_value(left)} and {render_value(right)}")
        return left + right
    if isinstance(e, Cmp):
        left = eval_expr(e.left, env, values, table)
        right = eval_expr(e.right, env, values, table)
        return _compare(e.op, left, right)
    if isinstance(e, BoolOp):
        if e.op == "!":
            return not _truth(eval_expr(e.operands[0], env, values, table))
        for o in e.operands:
            v = _truth(eval_expr(o, env, values, table))
            if e.op == "&&" and not v:
                return False
            if e.op == "||" and v:
                return True
        return e.op == "&&"
    raise EvaluationError(f"cannot evaluate {e!r}")


def _truth(v) -> bool:
    if not isinstance(v, bool):
        raise EvaluationError(f"expected a boolean, got {render_value(v)}")
    return v


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _compare(op, left, right) -> bool:
    if op in ("==", "!="):
        same_kind = (_is_int(left) and _is_int(right)) or type(left) is type(right)
        if not same_kind:
            raise EvaluationError(f"cannot compare {render_value(left)} with {render_value(right)}")
        if isinstance(left, AstNode):
            eq = left is right
        else:
            eq = left == right
        return eq if op == "==" else not eq
    if not (_is_int(left) and _is_int(right)):
        raise EvaluationError(f"{op} needs integers, got {render_value(left)} and {render_value(right)}")
    return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]


# -- rule matching -----------------------------------------------------------

def find_matches(rule: Rule, model: AstNode, lang: Language) -> list[Match]:
    """All matches of `rule` in `model`, ordered by document position."""
    matcher = Matcher(lang)
    nodes = list(model.walk())
    order = {id(n): i for i, n in enumerate(nodes)}
    tops = rule.lhs

    def join(i, env):
        if i == len(tops):
            yield env
            return
        for node in nodes:
            for e in matcher.match_elem(tops[i], node, env):
                yield from join(i + 1, e)

    seen = set()
    found = []
    for env in join(0, BindingEnv()):
        key = env.key()
        if key in seen:
            continue
        seen.add(key)
        if any(nac_blocks(matcher, nac, env, model) for nac in rule.nacs):
            continue
        values: dict = {}
        for var, expr in rule.where_assignments:
            values[var] = eval_expr(expr, env, values, lang.accessors)
        if rule.constraint is not None and not _truth(eval_expr(rule.constraint, env, values, lang.accessors)):
            continue
        position = tuple(order[id(env.corr[t.pid])] for t in tops)
        found.append((position, len(found), Match(rule, env, values)))
    found.sort(key=lambda f: (f[0], f[1]))
    return [m for _, _, m in found]

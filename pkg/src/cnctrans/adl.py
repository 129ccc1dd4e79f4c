"""The component & connector ADL: grammar, normalization, views, checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .grammar import GrammarSpec, parse_grammar
from .language import AccessorTable, Language
from .rules import Concrete, Neg, Repl, VarWhite
from .syntax import AstNode, Span


@lru_cache(maxsize=None)
def cnc_grammar_text() -> str:
    return resources.files("cnctrans").joinpath("grammars/cnc.mcg").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def cnc_grammar() -> GrammarSpec:
    return parse_grammar(cnc_grammar_text())


# -- normalization --------------------------------------------------------

def normalize(model: AstNode) -> AstNode:
    """Desugar comma groups.

    Every component ends up with at most one port section (holding all its
    ports, at the position of the first section) and one subcomponent
    declaration per instance name.  Untouched subtrees are returned as-is.
    """
    if model.nonterminal == "Model":
        comps = tuple(normalize(c) for c in model["components"])
        if all(a is b for a, b in zip(comps, model["components"])):
            return model
        return model.replace(components=comps)
    if model.nonterminal != "ComponentDef":
        return model
    out: list[AstNode] = []
    port_at = None
    changed = False
    for el in model["elements"]:
        kind = el.nonterminal
        if kind == "PortSection":
            if port_at is None:
                port_at = len(out)
                out.append(el)
            else:
                out[port_at] = out[port_at].replace(ports=out[port_at]["ports"] + el["ports"])
                changed = True
        elif kind == "SubcomponentDecl" and len(el["names"]) > 1:
            for name in el["names"]:
                out.append(AstNode("SubcomponentDecl", [("type", el["type"]), ("names", (name,))], el.span))
            changed = True
        elif kind == "ComponentDef":
            inner = normalize(el)
            changed |= inner is not el
            out.append(inner)
        else:
            out.append(el)
    return model.replace(elements=tuple(out)) if changed else model


def normalize_pattern(elems: tuple, new_pid) -> tuple:
    """The same desugaring for compiled patterns, so models match themselves.

    Plain port-section patterns of one component pattern merge into the
    first; a subcomponent pattern naming several instances splits into one
    pattern per instance (the extra ones get fresh ids).
    """
    return tuple(_norm_pat(e, new_pid) for e in elems)


def _norm_pat(e, new_pid):
    if isinstance(e, VarWhite):
        return VarWhite(e.pid, e.type, e.var, _norm_pat(e.body, new_pid))
    if isinstance(e, Neg):
        return Neg(e.pid, _norm_pat(e.body, new_pid))
    if isinstance(e, Repl):
        left = _norm_pat(e.left, new_pid) if e.left is not None else None
        right = _norm_pat(e.right, new_pid) if e.right is not None else None
        return Repl(e.pid, left, right)
    if not isinstance(e, Concrete):
        return e
    if e.nonterminal == "Model":
        comps = tuple(_norm_pat(c, new_pid) for c in e.get("components"))
        return e.replace_fields([("components", comps)])
    if e.nonterminal != "ComponentDef":
        return e
    out = []
    port_at = None
    for item in e.get("elements"):
        item = _norm_pat(item, new_pid)
        kind = item.nonterminal if isinstance(item, Concrete) else None
        if kind == "PortSection":
            if port_at is None:
                port_at = len(out)
                out.append(item)
            else:
                merged = out[port_at].get("ports") + item.get("ports")
                out[port_at] = out[port_at].replace_fields([("ports", merged)])
        elif kind == "SubcomponentDecl" and len(item.get("names")) > 1:
            for i, name in enumerate(item.get("names")):
                pid = item.pid if i == 0 else new_pid()
                out.append(Concrete(pid, "SubcomponentDecl", (("type", item.get("type")), ("names", (name,)))))
        else:
            out.append(item)
    return e.replace_fields([("name", e.get("name")), ("elements", tuple(out))])


# -- typed views ----------------------------------------------------------

@dataclass
class PortView:
    direction: str
    type: str
    name: str


@dataclass
class SubcomponentRefView:
    type: str
    name: str
    inline: bool = False


@dataclass
class ConnectorView:
    source: str
    target: str
    span: Span | None = None


@dataclass
class AccessView:
    variant: str
    port: str | None
    policies: tuple[str, ...]
    span: Span | None = None


@dataclass
class IdentityLinkView:
    prover: str
    verifier: str
    span: Span | None = None


@dataclass
class ComponentView:
    name: str
    ports: list[PortView] = field(default_factory=list)
    sub_refs: list[SubcomponentRefView] = field(default_factory=list)
    inner_defs: list["ComponentView"] = field(default_factory=list)
    connectors: list[ConnectorView] = field(default_factory=list)
    trust_level: int = 0
    accesses: list[AccessView] = field(default_factory=list)
    identity_links: list[IdentityLinkView] = field(default_factory=list)
    span: Span | None = None
    sub_spans: dict = field(default_factory=dict)

    def port(self, name):
        return next((p for p in self.ports if p.name == name), None)


def component_view(node: AstNode) -> ComponentView:
    view = ComponentView(node["name"], span=node.span)
    for el in node["elements"]:
        kind = el.nonterminal
        if kind == "PortSection":
            view.ports.extend(PortView(p["direction"], p["type"], p["name"]) for p in el["ports"])
        elif kind == "SubcomponentDecl":
            for name in el["names"]:
                view.sub_refs.append(SubcomponentRefView(el["type"], name))
                view.sub_spans.setdefault(name, el.span)
        elif kind == "ComponentDef":
            view.inner_defs.append(component_view(el))
            view.sub_spans.setdefault(el["name"], el.span)
        elif kind == "Connector":
            view.connectors.append(ConnectorView(el["source"], el["target"], el.span))
        elif kind == "TrustLevel":
            view.trust_level = el["value"]
        elif kind == "PortAccess":
            view.accesses.append(AccessView("PortAccess", el["port"], el["policy"], el.span))
        elif kind == "ComponentAccess":
            view.accesses.append(AccessView("ComponentAccess", None, el["policy"], el.span))
        elif kind == "IdentityLink":
            view.identity_links.append(IdentityLinkView(el["prover"], el["verifier"], el.span))
    return view


# -- well-formedness ------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span | None = None

    def __str__(self):
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: {self.message}"


def check_wellformed(model: AstNode, strict: bool = False) -> list[Diagnostic]:
    """Context conditions over a normalized model."""
    roots = model["components"] if model.nonterminal == "Model" else (model,)
    views = [component_view(c) for c in roots]
    defs: dict[str, ComponentView] = {}

    def index(v):
        defs.setdefault(v.name, v)
        for inner in v.inner_defs:
            index(inner)

    for v in views:
        index(v)
    diags: list[Diagnostic] = []
    for v in views:
        _check_component(v, defs, strict, diags)
    return diags


def _check_component(v: ComponentView, defs, strict, diags):
    def err(msg, span=None):
        diags.append(Diagnostic("error", f"{v.name}: {msg}", span or v.span))

    seen = set()
    for p in v.ports:
        if p.name in seen:
            err(f"duplicate port {p.name}")
        seen.add(p.name)

    instances: dict[str, ComponentView | None] = {}
    for ref in v.sub_refs:
        if ref.name in instances:
            err(f"duplicate subcomponent {ref.name}", v.sub_spans.get(ref.name))
        instances[ref.name] = defs.get(ref.type)
    for inner in v.inner_defs:
        if inner.name in instances:
            err(f"duplicate subcomponent {inner.name}", inner.span)
        instances[inner.name] = inner

    reported = set()
    for ref in v.sub_refs:
        if ref.type not in defs and ref.type not in reported:
            reported.add(ref.type)
            diags.append(
                Diagnostic(
                    "error" if strict else "warning",
                    f"{v.name}: unknown component type {ref.type}",
                    v.sub_spans.get(ref.name) or v.span,
                )
            )

    for con in v.connectors:
        if con.source == con.target:
            err(f"connector {con.source} -> {con.target} connects an endpoint to itself", con.span)
            continue
        for role, endpoint in (("source", con.source), ("target", con.target)):
            direction, problem = _resolve_endpoint(v, instances, endpoint)
            if problem:
                err(f"connector {role} {endpoint}: {problem}", con.span)
            elif direction is not None:
                own = "." not in endpoint
                wanted = {("source", True): "in", ("source", False): "out",
                          ("target", True): "out", ("target", False): "in"}[(role, own)]
                if direction != wanted:
                    err(
                        f"direction mismatch: connector {role} {endpoint} is an "
                        f"{direction}-port, expected an {wanted}-port",
                        con.span,
                    )

    for acc in v.accesses:
        if acc.variant != "PortAccess":
            continue
        port = v.port(acc.port)
        if port is None:
            err(f"access names unknown port {acc.port}", acc.span)
        elif port.direction != "in":
            err(f"access names outgoing port {acc.port}", acc.span)

    for link in v.identity_links:
        if link.prover == link.verifier:
            err(f"identity link {link.prover} -> {link.verifier} links a component to itself", link.span)

    for inner in v.inner_defs:
        _check_component(inner, defs, strict, diags)


def _resolve_endpoint(v, instances, endpoint):
    """(direction or None if unknowable, problem message or None)."""
    parts = endpoint.split(".")
    if len(parts) == 1:
        port = v.port(parts[0])
        if port is None:
            return None, f"unknown port {parts[0]}"
        return port.direction, None
    if len(parts) != 2:
        return None, "endpoints are `port` or `subcomponent.port`"
    sub, port_name = parts
    if sub not in instances:
        return None, f"unknown subcomponent {sub}"
    target = instances[sub]
    if target is None:
        return None, None  # type has no definition; already warned
    port = target.port(port_name)
    if port is None:
        return None, f"unknown port {port_name} of {sub}"
    return port.direction, None


# -- accessors ------------------------------------------------------------

def _trustlevel(node: AstNode) -> int:
    for el in node["elements"]:
        if el.nonterminal == "TrustLevel":
            return el["value"]
    return 0


@lru_cache(maxsize=None)
def accessor_table() -> AccessorTable:
    table = AccessorTable.derive(cnc_grammar())
    table.add("ComponentDef", "getTrustlevel", _trustlevel)
    return table


@lru_cache(maxsize=None)
def cnc_language() -> Language:
    return Language(
        grammar=cnc_grammar(),
        accessors=accessor_table(),
        normalize=normalize,
        check=check_wellformed,
        empty_aliases={"ComponentDef": ("SubcomponentDecl", "name", "names")},
        normalize_pattern=normalize_pattern,
    )

"""Heuristic tactics, tacticals and the automatic structuring procedure."""
from __future__ import annotations

import enum
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import rules
from .devgraph import Structuring, SupportMapping, check_structuring, entity_name, reachable_morphisms
from .errors import ParseError, TheoryError
from .fol import (
    IDENTITY,
    SignatureMorphism,
    SymbolDecl,
    _match,
    apply_morphism,
    apply_to_entity,
    fingerprint,
    NamedSentence,
)

log = logging.getLogger(__name__)


def _name_key(e):
    return entity_name(e)


# ------------------------------------------------------- dependencies

@dataclass
class DependencyGraph:
    """Dependencies among the local entities of one node.

    ``edges`` only relate local entities; ``external`` records, per local
    entity, the imported entities it depends on.
    """

    node: str
    entities: frozenset
    edges: dict
    external: dict

    def minimal(self) -> frozenset:
        return frozenset(e for e in self.entities if not self.edges[e])

    def maximal(self) -> frozenset:
        used = set()
        for deps in self.edges.values():
            used |= deps
        return frozenset(e for e in self.entities if e not in used)

    def components(self) -> list:
        """Weakly connected components, also joining through shared imported entities."""
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for e in self.entities:
            find(e)
            for d in self.edges[e]:
                union(e, d)
            for d in self.external[e]:
                union(e, ("external", d))
        groups: dict = {}
        for e in self.entities:
            groups.setdefault(find(e), set()).add(e)
        return [frozenset(g) for g in groups.values()]


def dependency_graph(s: Structuring, node: str) -> DependencyGraph:
    n = s.graph.node(node)
    local = n.local
    edges, external = {}, {}
    for e in local:
        deps = set()
        if not isinstance(e, SymbolDecl):
            deps |= e.symbols
            if e.is_lemma:
                deps |= s.support_of(e)
        edges[e] = frozenset(d for d in deps if d in local)
        external[e] = frozenset(d for d in deps if d not in local)
    return DependencyGraph(node, local, edges, external)


def _node_order(s: Structuring) -> tuple:
    return s.graph.topological_order


# ------------------------------------------------------- basic tactics

def _largest(components: list) -> frozenset:
    return min(components, key=lambda c: (-len(c), min(map(_name_key, c))))


def tactic_split_horizontal(s: Structuring) -> Optional[Structuring]:
    for nid in _node_order(s):
        node = s.graph.nodes[nid]
        comps = dependency_graph(s, nid).components()
        if len(comps) < 2 or s.loc.inverse(nid) != node.local:
            continue
        part = _largest(comps)
        try:
            return rules.horizontal_split(s, nid, [part, node.local - part])
        except TheoryError as exc:
            log.debug("horizontal split of %s rejected: %s", nid, exc)
    return None


def _split_vertical(s: Structuring, maximal: bool) -> Optional[Structuring]:
    for nid in _node_order(s):
        node = s.graph.nodes[nid]
        dep = dependency_graph(s, nid)
        chosen = dep.maximal() if maximal else dep.minimal()
        if not chosen or chosen == node.local:
            continue
        upper, lower = (chosen, node.local - chosen) if maximal else (node.local - chosen, chosen)
        try:
            return rules.vertical_split(s, nid, lower, upper)
        except TheoryError as exc:
            log.debug("vertical split of %s rejected: %s", nid, exc)
    return None


def tactic_split_vertical_maximal(s: Structuring) -> Optional[Structuring]:
    return _split_vertical(s, maximal=True)


def tactic_split_vertical_minimal(s: Structuring) -> Optional[Structuring]:
    return _split_vertical(s, maximal=False)


def tactic_cleanup(s: Structuring) -> Optional[Structuring]:
    """Remove removable links and merge empty nodes into their sole successor."""
    current = s
    changed = True
    while changed:
        changed = False
        for link in sorted(current.graph.links, key=lambda l: l.id):
            if rules.removal_obstruction(current, link.id) is None:
                current = rules.remove_link(current, link.id)
                changed = True
                break
        if changed:
            continue
        for nid in _node_order(current):
            node = current.graph.nodes[nid]
            out = current.graph.outgoing(nid)
            if not node.is_empty or not out:
                continue
            targets = {l.target for l in out}
            if len(targets) != 1 or not all(l.morphism.is_identity for l in out):
                continue
            try:
                current = rules.vertical_merge(current, nid, targets.pop())
            except TheoryError as exc:
                log.debug("merge of %s rejected: %s", nid, exc)
                continue
            changed = True
            break
    return None if current is s else current


# --------------------------------------------------------- factorize

@dataclass
class _Groups:
    """p renaming-isomorphic, pairwise disjoint sentence groups.

    ``members[k][i]`` corresponds to ``members[0][i]`` under ``rhos[k]``.
    """

    nodes: list
    members: list
    rhos: list

    @property
    def saving(self) -> int:
        return (len(self.members) - 1) * len(self.members[0])

    def signature(self):
        return frozenset(frozenset(g) for g in self.members)


def _class_key(x):
    return (x.role.value, fingerprint(x))


def _moved(fwd: dict) -> tuple:
    src = {k for k, v in fwd.items() if k[0] != v}
    dst = {(v, k[1]) for k, v in fwd.items() if k[0] != v}
    return src, dst


def _try_extend(fwd, bwd, x, y):
    f2, b2 = dict(fwd), dict(bwd)
    if not _match(x.key[1], y.key[1], f2, b2, frozenset()):
        return None
    src, dst = _moved(f2)
    if src & dst:
        return None
    return f2, b2


def _grow(s: Structuring, seeds: list) -> Optional[_Groups]:
    D = s.graph
    n1, c1 = seeds[0]
    nodes, members, maps = [n1], [[c1]], [({}, {})]
    used = {c1}
    for nk, ck in seeds[1:]:
        ext = _try_extend({}, {}, c1, ck)
        if ext is None or ck in used:
            continue
        nodes.append(nk)
        members.append([ck])
        maps.append(ext)
        used.add(ck)
    if len(nodes) < 2:
        return None
    pools = {nid: sorted(D.nodes[nid].sentences, key=lambda x: x.name) for nid in set(nodes)}
    for x in pools[n1]:
        if x in used:
            continue
        used.add(x)
        picks = []
        for k in range(1, len(nodes)):
            found = None
            for y in pools[nodes[k]]:
                if y in used or _class_key(y) != _class_key(x) or any(y is p[0] for p in picks):
                    continue
                ext = _try_extend(maps[k][0], maps[k][1], x, y)
                if ext is not None:
                    found = (y, ext)
                    break
            if found is None:
                break
            picks.append(found)
        if len(picks) != len(nodes) - 1:
            used.discard(x)
            continue
        members[0].append(x)
        for k, (y, ext) in enumerate(picks, start=1):
            members[k].append(y)
            maps[k] = ext
            used.add(y)
    groups = _Groups(nodes, members, [dict(m[0]) for m in maps])
    return _filter_support(s, groups)


def _rho(groups: _Groups, k: int) -> SignatureMorphism:
    return SignatureMorphism(groups.rhos[k]) if k else IDENTITY


def _filter_support(s: Structuring, groups: _Groups) -> Optional[_Groups]:
    """Drop lemma rows whose supports are not isomorphic under the same renaming."""
    D = s.graph
    p = len(groups.members)
    rows = list(range(len(groups.members[0])))
    changed = True
    while changed:
        changed = False
        index = {groups.members[0][i]: i for i in rows}
        for i in list(rows):
            x = groups.members[0][i]
            if not x.is_lemma:
                continue
            ok = True
            for k in range(p):
                y = groups.members[k][i]
                mapped = set()
                for psi in s.support_of(x):
                    if psi in index:
                        mapped.add(groups.members[k][index[psi]])
                    elif psi in D.nodes[groups.nodes[0]].sentences:
                        ok = False
                        break
                    else:
                        mapped.add(apply_to_entity(_rho(groups, k), psi))
                if not ok:
                    break
                target = s.support_of(y)
                if mapped != set(target):
                    ok = False
                    break
            if not ok:
                rows.remove(i)
                changed = True
                break
    if not rows:
        return None
    members = [[g[i] for i in rows] for g in groups.members]
    for k in range(1, p):
        fwd, bwd = {}, {}
        for x, y in zip(members[0], members[k]):
            fwd, bwd = _try_extend(fwd, bwd, x, y)
        groups.rhos[k] = fwd
    return _Groups(groups.nodes, members, groups.rhos)


def _separate_signature(s: Structuring, groups: _Groups) -> bool:
    """Groups sharing a node may only use symbols that node imports.

    Separating declarations from sentences is left to the split tactics.
    """
    hosts: dict = {}
    for k, nid in enumerate(groups.nodes):
        hosts.setdefault(nid, []).append(k)
    for nid, ks in hosts.items():
        if len(ks) < 2:
            continue
        local = s.graph.nodes[nid].sig
        if any(x.symbols & local for k in ks for x in groups.members[k]):
            return False
    return True


def factorization_groups(s: Structuring) -> list:
    """Candidate groups ordered by decreasing saving, then deterministically."""
    D = s.graph
    order = _node_order(s)
    classes: dict = {}
    for nid in order:
        for x in sorted(D.nodes[nid].sentences, key=lambda x: x.name):
            classes.setdefault(_class_key(x), []).append((nid, x))
    found, seen = [], set()
    for rank, nid in enumerate(order):
        for x in sorted(D.nodes[nid].sentences, key=lambda x: x.name):
            members = classes[_class_key(x)]
            if len(members) < 2:
                continue
            seeds = [(nid, x)] + [m for m in members if m[1] is not x]
            g = _grow(s, seeds)
            if g is None or len(g.members) < 2:
                continue
            if not _separate_signature(s, g):
                continue
            sig = g.signature()
            if sig in seen:
                continue
            seen.add(sig)
            found.append((rank, g))
    found.sort(key=lambda t: (-t[1].saving, t[0], t[1].members[0][0].name))
    return [g for _, g in found]


def _node_holding(s: Structuring, sentences) -> str:
    sentences = frozenset(sentences)
    for nid in _node_order(s):
        if sentences <= s.graph.nodes[nid].sentences:
            return nid
    raise TheoryError("group lost during isolation")


def _split_parts(node, groups: list):
    """Assign local symbols to the groups using them exclusively; the rest keeps the others."""
    users: dict = {}
    rest_sentences = node.sentences.difference(*groups)
    for i, g in enumerate(groups):
        for x in g:
            for sym in x.symbols & node.sig:
                users.setdefault(sym, set()).add(i)
    for x in rest_sentences:
        for sym in x.symbols & node.sig:
            users.setdefault(sym, set()).add("rest")
    parts = [set(g) for g in groups]
    rest = set(rest_sentences)
    shared = set()
    for sym in node.sig:
        u = users.get(sym, set())
        if len(u) == 1 and "rest" not in u:
            parts[next(iter(u))].add(sym)
        elif not u or u == {"rest"}:
            rest.add(sym)
        else:
            shared.add(sym)
    return parts, rest, shared


def _isolate_node(s: Structuring, nid: str, groups: list) -> Structuring:
    node = s.graph.nodes[nid]
    parts, rest, shared = _split_parts(node, groups)
    if len(groups) == 1 and not rest and not shared:
        return s
    attempts = []
    if not shared and len(parts) + (1 if rest else 0) >= 2:
        attempts.append(lambda: rules.horizontal_split(s, nid, parts + ([rest] if rest else [])))
    union_groups = set().union(*groups)

    def upper_then_split():
        lower = set(rest) | {x for x in shared}
        upper = node.local - lower
        t = rules.vertical_split(s, nid, lower, upper)
        return _split_groups(t, groups)

    def lower_then_split():
        lower = set(union_groups) | {x for x in node.sig if any(x in g.symbols for g in union_groups)}
        upper = node.local - lower
        t = rules.vertical_split(s, nid, lower, upper)
        return _split_groups(t, groups)

    if rest or shared:
        attempts += [upper_then_split, lower_then_split]
    last = None
    for attempt in attempts:
        try:
            return attempt()
        except TheoryError as exc:
            last = exc
    raise last or TheoryError(f"cannot isolate groups in {nid}")


def _split_groups(s: Structuring, groups: list) -> Structuring:
    if len(groups) < 2:
        return s
    nid = _node_holding(s, groups[0])
    parts, rest, shared = _split_parts(s.graph.nodes[nid], groups)
    if shared or rest:
        raise TheoryError("groups share local content")
    return rules.horizontal_split(s, nid, parts)


def _moved_symbols(groups: _Groups, k: int) -> frozenset:
    syms = set()
    for x in groups.members[k]:
        syms |= x.symbols
    moved_keys = set()
    for j in range(1, len(groups.members)):
        src, dst = _moved(groups.rhos[j])
        moved_keys |= (dst if j == k else set()) | (src if k == 0 else set())
    return frozenset(x for x in syms if (x.name, x.kind) in moved_keys)


def _pull_up(s: Structuring, target: str, moved: frozenset) -> Structuring:
    """Fold nodes that only declare ``moved`` symbols into ``target``."""
    providers = sorted({s.loc[x] for x in moved if s.loc.get(x) not in (None, target)})
    for src in providers:
        node = s.graph.nodes[src]
        if node.sentences or not node.sig <= moved:
            raise TheoryError(f"{src} holds more than the symbols of the group")
        if not any(l.target == target and l.morphism.is_identity for l in s.graph.outgoing(src)):
            if IDENTITY not in reachable_morphisms(s.graph, src, target):
                raise TheoryError(f"{target} does not see {src} unchanged")
            s = rules.transitive_enrich(s, src, target, IDENTITY)
        for link in sorted(s.graph.outgoing(src), key=lambda l: l.id):
            if link.target != target:
                s = rules.remove_link(s, link.id)
        s = rules.vertical_merge(s, src, target)
    return s


def _fresh_name(base: str, taken: set) -> str:
    name, k = base, 1
    while name in taken:
        k += 1
        name = f"{base}{k}"
    taken.add(name)
    return name


def _build_candidate(s: Structuring, targets: list, groups: _Groups) -> rules.FactorizationCandidate:
    D = s.graph
    p = len(targets)
    first = groups.members[0]
    rows = range(len(first))

    # shared imports and their prescribed action on imported symbols
    shared = None
    for m in targets:
        sources = {l.source for l in D.incoming(m)}
        shared = sources if shared is None else shared & sources
    shared = [k for k in _node_order(s) if k in (shared or set()) and k not in targets]

    needed_support = set()
    for x in first:
        if x.is_lemma:
            needed_support |= {psi for psi in s.support_of(x) if psi not in first}
    group_syms = set()
    for x in first:
        group_syms |= x.symbols
    unmoved = {
        y for y in group_syms if all(groups.rhos[k].get((y.name, y.kind), y.name) == y.name for k in range(1, p))
    }

    chosen, links, theta_imp = [], [], [dict() for _ in range(p)]
    for k in shared:
        per_target = [sorted((l for l in D.incoming(m) if l.source == k), key=lambda l: l.id)[0] for m in targets]
        dom = D.domain(k)
        images = {apply_to_entity(per_target[0].morphism, e) for e in dom.entities}
        useful = (needed_support & images) or (unmoved & images)
        if not useful:
            continue
        trial = [dict(t) for t in theta_imp]
        ok = True
        for x in dom.sig:
            src = per_target[0].morphism.apply_symbol(x)
            for j in range(p):
                dst = per_target[j].morphism.apply_symbol(x)
                key = (src.name, src.kind)
                if trial[j].setdefault(key, dst.name) != dst.name:
                    ok = False
        if not ok:
            continue
        chosen.append(k)
        links.append([l.id for l in per_target])
        theta_imp = trial
    imported = set()
    for k, row in zip(chosen, links):
        link = D.link(row[0])
        imported |= {apply_to_entity(link.morphism, e) for e in D.domain(k).entities}
    if not needed_support <= imported:
        raise TheoryError("support of the group is not shared by all targets")

    taken_syms = {x.name for x in D.all_entities if isinstance(x, SymbolDecl)}
    keep = {y for y in unmoved if y in imported and all(theta_imp[j].get((y.name, y.kind), y.name) == y.name for j in range(p))}
    to_factor, fresh = {}, set()
    for y in sorted(group_syms - keep, key=lambda y: y.label):
        name = _fresh_name(f"{y.name}_g", taken_syms)
        to_factor[(y.name, y.kind)] = name
        fresh.add(SymbolDecl(name, y.arity, y.kind))
    rename = SignatureMorphism(to_factor)

    taken_names = set(s.catalog) | {name for name, _ in s.supp.items()}
    copies = []
    for x in first:
        copies.append(NamedSentence(_fresh_name(f"{x.name}_g", taken_names), x.role, apply_morphism(rename, x.formula)))
    index = {x: c for x, c in zip(first, copies)}

    thetas = []
    for j in range(p):
        mapping = dict(theta_imp[j])
        for (name, kind), new in to_factor.items():
            mapping[(new, kind)] = groups.rhos[j].get((name, kind), name) if j else name
        thetas.append(SignatureMorphism(mapping))

    support = {}
    for x, c in zip(first, copies):
        if x.is_lemma:
            support[c.name] = frozenset(index[psi].name if psi in index else s.name_of(psi) for psi in s.support_of(x))
    for i in rows:
        for j in range(p):
            assert first[i].role == groups.members[j][i].role, "axioms and lemmas are never identified"
    return rules.FactorizationCandidate(
        targets=tuple(targets),
        imports=tuple(chosen),
        sig=frozenset(fresh),
        axioms=frozenset(c for c in copies if not c.is_lemma),
        lemmas=frozenset(c for c in copies if c.is_lemma),
        instance_morphisms=tuple(thetas),
        import_morphisms=tuple(D.link(row[0]).morphism for row in links),
        factor_support=SupportMapping(support),
        import_links=tuple(tuple(row) for row in links),
    )


def isolated_candidate(s: Structuring, groups: _Groups) -> Optional[rules.FactorizationCandidate]:
    """The factorization of ``groups`` when each already fills a node of its own."""
    targets = []
    for members in groups.members:
        nid = _node_holding(s, members)
        if s.graph.nodes[nid].sentences != frozenset(members):
            return None
        targets.append(nid)
    if len(set(targets)) != len(targets):
        return None
    try:
        return _build_candidate(s, targets, groups)
    except TheoryError:
        return None


def realize_groups(s: Structuring, groups: _Groups) -> Structuring:
    """Isolate the groups into nodes of their own and factorize them."""
    by_node: dict = {}
    for k, nid in enumerate(groups.nodes):
        by_node.setdefault(nid, []).append(k)
    for nid in sorted(by_node):
        ks = by_node[nid]
        holder = _node_holding(s, groups.members[ks[0]])
        s = _isolate_node(s, holder, [frozenset(groups.members[k]) for k in ks])
    targets = []
    for k in range(len(groups.members)):
        nid = _node_holding(s, groups.members[k])
        node = s.graph.nodes[nid]
        if not (node.sig or node.axioms):
            s = _pull_up(s, nid, _moved_symbols(groups, k))
        targets.append(_node_holding(s, groups.members[k]))
    candidate = _build_candidate(s, targets, groups)
    result = rules.factorize(s, candidate)
    diags = check_structuring(result)
    if diags:
        raise TheoryError(str(diags[0]))
    return result


def tactic_factorize(s: Structuring) -> Optional[Structuring]:
    for groups in factorization_groups(s):
        try:
            return realize_groups(s, groups)
        except TheoryError as exc:
            log.debug("factorization candidate rejected: %s", exc)
    return None


# ---------------------------------------------------------- tacticals

BASIC = {
    "SplitHorizontal": tactic_split_horizontal,
    "SplitVerticallyMaximal": tactic_split_vertical_maximal,
    "SplitVerticallyMinimal": tactic_split_vertical_minimal,
    "Factorize": tactic_factorize,
    "Cleanup": tactic_cleanup,
}

ALIASES = {
    "SplitHorizontally": "SplitHorizontal",
    "SplitVerticallyMaximalEntries": "SplitVerticallyMaximal",
    "SplitVerticallyMinimalEntries": "SplitVerticallyMinimal",
    "RemoveSuperfluousEmptyTheories": "Cleanup",
}


class TacticExpr:
    def __str__(self):
        return _show(self, 0)


@dataclass(frozen=True)
class Basic(TacticExpr):
    name: str

    def __post_init__(self):
        canonical = ALIASES.get(self.name, self.name)
        if canonical not in BASIC:
            raise ValueError(f"unknown tactic {self.name!r}")
        object.__setattr__(self, "name", canonical)


@dataclass(frozen=True)
class Star(TacticExpr):
    body: TacticExpr


@dataclass(frozen=True)
class Plus(TacticExpr):
    body: TacticExpr


@dataclass(frozen=True)
class Seq(TacticExpr):
    first: TacticExpr
    second: TacticExpr


@dataclass(frozen=True)
class OnFail(TacticExpr):
    first: TacticExpr
    second: TacticExpr


def _show(t, prec) -> str:
    # precedence: 0 sequence, 1 onfail, 2 postfix
    if isinstance(t, Basic):
        return t.name
    if isinstance(t, (Star, Plus)):
        return _show(t.body, 2) + ("*" if isinstance(t, Star) else "+")
    if isinstance(t, Seq):
        text, mine = f"{_show(t.first, 0)}; {_show(t.second, 1)}", 0
    else:
        text, mine = f"{_show(t.first, 1)} onfail {_show(t.second, 2)}", 1
    return f"({text})" if prec > mine else text


_TOKEN = re.compile(r"\s*(?:(?P<word>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[()*+;]))")


def parse_tactic(text: str) -> TacticExpr:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(1, pos + 1, "tactic name or operator", text[pos])
        tokens.append((m.group("word") or m.group("op"), m.start(m.lastindex) + 1))
        pos = m.end()
    tokens.append(("<end>", len(text) + 1))
    i = 0

    def peek():
        return tokens[i][0]

    def take(expected=None):
        nonlocal i
        tok, col = tokens[i]
        if expected is not None and tok != expected:
            raise ParseError(1, col, repr(expected), tok)
        i += 1
        return tok

    def seq():
        t = onfail()
        while peek() == ";":
            take()
            t = Seq(t, onfail())
        return t

    def onfail():
        t = postfix()
        while peek() == "onfail":
            take()
            t = OnFail(t, postfix())
        return t

    def postfix():
        t = atom()
        while peek() in ("*", "+"):
            t = Star(t) if take() == "*" else Plus(t)
        return t

    def atom():
        tok, col = tokens[i]
        if tok == "(":
            take()
            t = seq()
            take(")")
            return t
        if tok in BASIC or tok in ALIASES:
            take()
            return Basic(tok)
        raise ParseError(1, col, "tactic name or '('", tok)

    result = seq()
    take("<end>")
    return result


INITTAC = parse_tactic(
    "((SplitVerticallyMinimal+; SplitHorizontal*) onfail SplitHorizontal+);"
    " SplitVerticallyMaximal*; Cleanup*"
)
OVERALL = Seq(INITTAC, parse_tactic("(Factorize+; Cleanup*; SplitVerticallyMinimal*)*"))


# ------------------------------------------------------------ interpreter

class Outcome(enum.Enum):
    PROGRESSED = "Progressed"
    FAILED = "Failed"
    TIMED_OUT = "TimedOut"


@dataclass
class Budget:
    seconds: Optional[float] = 300.0
    steps: Optional[int] = None

    def __post_init__(self):
        if self.seconds is not None and self.seconds <= 0:
            raise ValueError("time limit must be positive")
        if self.steps is not None and self.steps < 0:
            raise ValueError("step limit must be non-negative")


@dataclass
class Step:
    tactic: str
    nodes: int
    links: int
    elapsed: float


class _Exhausted(Exception):
    pass


@dataclass
class _Run:
    budget: Budget
    started: float = field(default_factory=time.monotonic)
    steps: int = 0
    trace: list = field(default_factory=list)
    latest: Optional[Structuring] = None
    check: bool = False

    def exhausted(self) -> bool:
        if self.budget.steps is not None and self.steps >= self.budget.steps:
            return True
        return self.budget.seconds is not None and time.monotonic() - self.started > self.budget.seconds

    def run(self, t: TacticExpr, s: Structuring) -> tuple:
        if isinstance(t, Basic):
            if self.exhausted():
                raise _Exhausted()
            result = BASIC[t.name](s)
            if result is None:
                return s, False
            if self.check:
                diags = check_structuring(result)
                assert not diags, f"{t.name} broke the structuring: {diags[0]}"
            self.steps += 1
            self.latest = result
            g = result.graph
            self.trace.append(Step(t.name, len(g.nodes), len(g.links), time.monotonic() - self.started))
            return result, True
        if isinstance(t, (Star, Plus)):
            current, count = s, 0
            while True:
                nxt, ok = self.run(t.body, current)
                if not ok or nxt is current:
                    break
                current, count = nxt, count + 1
            return current, (count > 0 or isinstance(t, Star))
        if isinstance(t, Seq):
            mark = len(self.trace)
            mid, ok = self.run(t.first, s)
            if ok:
                end, ok = self.run(t.second, mid)
                if ok:
                    return end, True
            del self.trace[mark:]
            return s, False
        if isinstance(t, OnFail):
            out, ok = self.run(t.first, s)
            if ok:
                return out, True
            return self.run(t.second, s)
        raise TypeError(f"not a tactic expression: {t!r}")


def run_tactic(t: TacticExpr, s: Structuring, b: Optional[Budget] = None, *, check: bool = False) -> tuple:
    """Run ``t`` on ``s``; returns (structuring, outcome, trace).

    With ``check`` every intermediate structuring is validated.
    """
    state = _Run(b or Budget(), check=check)
    state.latest = s
    try:
        result, ok = state.run(t, s)
    except _Exhausted:
        return state.latest, Outcome.TIMED_OUT, state.trace
    return result, (Outcome.PROGRESSED if ok else Outcome.FAILED), state.trace


Tactic = Callable[[Structuring], Optional[Structuring]]

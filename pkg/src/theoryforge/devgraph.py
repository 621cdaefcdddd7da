"""Development graphs, global domains, location and support mappings.

A development graph is an acyclic graph of theories.  Each node carries a
local signature, local axioms and local lemmas; each link imports the global
domain of its source, renamed by the link's signature morphism, into its
target.  A :class:`Structuring` couples a graph with a location mapping and a
support mapping and records the flat theory it is meant to represent.
"""
from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Optional

from .errors import MultipleProviders, SpuriousNode, UnknownEntity, UnknownNode
from .fol import (
    IDENTITY,
    NamedSentence,
    Role,
    SignatureMorphism,
    SymbolDecl,
    apply_to_entity,
    compose,
)


@dataclass(frozen=True)
class Node:
    id: str
    sig: frozenset = frozenset()
    axioms: frozenset = frozenset()
    lemmas: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "sig", frozenset(self.sig))
        object.__setattr__(self, "axioms", frozenset(self.axioms))
        object.__setattr__(self, "lemmas", frozenset(self.lemmas))
        for a in self.axioms:
            if a.role is not Role.AXIOM:
                raise ValueError(f"{a.name} is not an axiom")
        for l in self.lemmas:
            if l.role is not Role.LEMMA:
                raise ValueError(f"{l.name} is not a lemma")

    @property
    def local(self) -> frozenset:
        return self.sig | self.axioms | self.lemmas

    @property
    def sentences(self) -> frozenset:
        return self.axioms | self.lemmas

    @property
    def is_empty(self) -> bool:
        return not (self.sig or self.axioms or self.lemmas)

    def sort_key(self) -> str:
        names = [entity_name(e) for e in self.local]
        return min(names) if names else ""


@dataclass(frozen=True)
class Link:
    id: str
    source: str
    target: str
    morphism: SignatureMorphism = IDENTITY

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"link {self.id} is a self-loop on {self.source}")


class Domain(NamedTuple):
    sig: frozenset
    axioms: frozenset
    lemmas: frozenset

    @property
    def entities(self) -> frozenset:
        return self.sig | self.axioms | self.lemmas

    @property
    def sentences(self) -> frozenset:
        return self.axioms | self.lemmas


def entity_name(e) -> str:
    return e.label if isinstance(e, SymbolDecl) else e.name


def split_entities(entities: Iterable) -> Domain:
    sig, ax, lem = set(), set(), set()
    for e in entities:
        if isinstance(e, SymbolDecl):
            sig.add(e)
        elif e.role is Role.AXIOM:
            ax.add(e)
        else:
            lem.add(e)
    return Domain(frozenset(sig), frozenset(ax), frozenset(lem))


class DevelopmentGraph:
    """Immutable development graph; derived data is cached per instance."""

    def __init__(self, nodes: Iterable[Node] = (), links: Iterable[Link] = ()):
        self.nodes: dict = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ValueError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = n
        self.links: tuple = tuple(links)
        ids = [l.id for l in self.links]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate link ids")
        self._in = defaultdict(list)
        self._out = defaultdict(list)
        for l in self.links:
            self._in[l.target].append(l)
            self._out[l.source].append(l)
        self._dom: dict = {}
        self._images: dict = {}

    # -- structure
    def node(self, nid: str) -> Node:
        try:
            return self.nodes[nid]
        except KeyError:
            raise UnknownNode(nid) from None

    def link(self, lid: str) -> Link:
        for l in self.links:
            if l.id == lid:
                return l
        raise KeyError(lid)

    def incoming(self, nid: str) -> list:
        return self._in.get(nid, [])

    def outgoing(self, nid: str) -> list:
        return self._out.get(nid, [])

    def dangling_links(self) -> list:
        return [l for l in self.links if l.source not in self.nodes or l.target not in self.nodes]

    def find_cycle(self) -> Optional[list]:
        color = dict.fromkeys(self.nodes, 0)
        stack_path: list = []

        def visit(n):
            color[n] = 1
            stack_path.append(n)
            for l in self.outgoing(n):
                t = l.target
                if t not in color:
                    continue
                if color[t] == 1:
                    return stack_path[stack_path.index(t):] + [t]
                if color[t] == 0:
                    found = visit(t)
                    if found:
                        return found
            stack_path.pop()
            color[n] = 2
            return None

        for n in self.nodes:
            if color[n] == 0:
                found = visit(n)
                if found:
                    return found
        return None

    @cached_property
    def topological_order(self) -> tuple:
        """Sources first; ties broken by the smallest local entity name, then id."""
        import heapq

        indeg = {n: 0 for n in self.nodes}
        for l in self.links:
            if l.target in indeg and l.source in indeg:
                indeg[l.target] += 1
        heap = [(self.nodes[n].sort_key(), n) for n, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        out = []
        while heap:
            _, n = heapq.heappop(heap)
            out.append(n)
            for l in self.outgoing(n):
                if l.target not in indeg:
                    continue
                indeg[l.target] -= 1
                if indeg[l.target] == 0:
                    heapq.heappush(heap, (self.nodes[l.target].sort_key(), l.target))
        if len(out) != len(self.nodes):
            raise ValueError("development graph contains a cycle")
        return tuple(out)

    @cached_property
    def roots(self) -> frozenset:
        return frozenset(n for n in self.nodes if not self.outgoing(n))

    # -- domains
    def link_image(self, link: Link) -> frozenset:
        hit = self._images.get(link.id)
        if hit is None:
            src = self.domain(link.source).entities
            if link.morphism.is_identity:
                hit = src
            else:
                hit = frozenset(apply_to_entity(link.morphism, e) for e in src)
            self._images[link.id] = hit
        return hit

    def domain(self, nid: str) -> Domain:
        hit = self._dom.get(nid)
        if hit is not None:
            return hit
        self.node(nid)
        # iterative post-order to avoid deep recursion on long chains
        pending = [nid]
        while pending:
            top = pending[-1]
            missing = [l.source for l in self.incoming(top) if l.source not in self._dom]
            missing = sorted({m for m in missing if m in self.nodes})
            if missing:
                # in an acyclic graph every link causes at most one push
                if len(pending) > len(self.links) + 1:
                    raise ValueError("development graph contains a cycle")
                pending.extend(missing)
                continue
            pending.pop()
            if top in self._dom:
                continue
            n = self.nodes[top]
            acc = set(n.local)
            for l in self.incoming(top):
                if l.source in self.nodes:
                    acc |= self.link_image(l)
            self._dom[top] = split_entities(acc)
        return self._dom[nid]

    def imported(self, nid: str) -> frozenset:
        acc: set = set()
        for l in self.incoming(nid):
            acc |= self.link_image(l)
        return frozenset(acc)

    @cached_property
    def all_entities(self) -> frozenset:
        acc: set = set()
        for n in self.nodes:
            acc |= self.domain(n).entities
        return frozenset(acc)

    @cached_property
    def root_domain(self) -> Domain:
        acc: set = set()
        for r in self.roots:
            acc |= self.domain(r).entities
        return split_entities(acc)

    def provided_at(self, nid: str) -> frozenset:
        """Entities visible at ``nid`` but not at any direct predecessor."""
        seen = self.domain(nid).entities
        for l in self.incoming(nid):
            seen = seen - self.domain(l.source).entities
        return seen

    # -- construction helpers
    def fresh_node_id(self, taken: Iterable[str] = ()) -> str:
        used = set(self.nodes) | set(taken)
        k = len(self.nodes)
        while f"n{k}" in used:
            k += 1
        return f"n{k}"

    def fresh_link_ids(self, count: int, taken: Iterable[str] = ()) -> list:
        used = {l.id for l in self.links} | set(taken)
        out = []
        k = len(self.links)
        while len(out) < count:
            cand = f"l{k}"
            if cand not in used:
                out.append(cand)
                used.add(cand)
            k += 1
        return out

    def replace(self, *, drop_nodes=(), add_nodes=(), drop_links=(), add_links=()) -> "DevelopmentGraph":
        drop_nodes = set(drop_nodes)
        drop_links = set(drop_links)
        nodes = [n for nid, n in self.nodes.items() if nid not in drop_nodes] + list(add_nodes)
        links = [l for l in self.links if l.id not in drop_links] + list(add_links)
        return DevelopmentGraph(nodes, links)

    def __repr__(self):
        return f"DevelopmentGraph({len(self.nodes)} nodes, {len(self.links)} links)"


# ------------------------------------------------------------ diagnostics

@dataclass(frozen=True)
class Diagnostic:
    code: str
    detail: str
    subject: tuple = ()
    condition: Optional[int] = None

    def __str__(self):
        head = self.code if self.condition is None else f"{self.code}[{self.condition}]"
        return f"{head}: {self.detail}"


# ------------------------------------------------------------ operations

def reachable_morphisms(D: DevelopmentGraph, source: str, target: str) -> frozenset:
    """All morphisms sigma with ``source`` globally reaching ``target`` via sigma."""
    D.node(source)
    D.node(target)
    memo: dict = {}

    def towards(x):
        hit = memo.get(x)
        if hit is not None:
            return hit
        acc = {IDENTITY} if x == target else set()
        for l in D.outgoing(x):
            for g in towards(l.target):
                acc.add(compose(g, l.morphism))
        memo[x] = frozenset(acc)
        return memo[x]

    return towards(source)


def global_domain(D: DevelopmentGraph, nid: str) -> Domain:
    return D.domain(nid)


def roots(D: DevelopmentGraph) -> frozenset:
    return D.roots


def validate_graph(D: DevelopmentGraph) -> list:
    diags = []
    for l in D.dangling_links():
        diags.append(Diagnostic("DanglingLink", f"{l.id}: {l.source} -> {l.target}", (l.id,)))
    if diags:
        return diags
    cycle = D.find_cycle()
    if cycle:
        return [Diagnostic("CycleFound", " -> ".join(cycle), tuple(cycle))]
    for nid in D.nodes:
        dom = D.domain(nid)
        arities: dict = {}
        for s in sorted(dom.sig):
            first = arities.setdefault((s.name, s.kind), s.arity)
            if first != s.arity:
                diags.append(Diagnostic("ArityClash", f"{nid}: {s.name} has arities {first} and {s.arity}", (nid, s)))
        for sentence in sorted(dom.sentences, key=lambda x: x.name):
            for sym in sorted(sentence.symbols - dom.sig):
                diags.append(
                    Diagnostic("UndeclaredSymbol", f"{nid}: {sym} in {sentence.name}", (nid, sym, sentence.name))
                )
    return diags


@dataclass(frozen=True)
class Provision:
    node: str
    local: bool
    link: Optional[str] = None
    preimage: object = None
    exclusive: bool = False


def providers(D: DevelopmentGraph, e) -> list:
    if e not in D.all_entities:
        raise UnknownEntity(str(e))
    raw = []
    for nid in D.topological_order:
        if e not in D.domain(nid).entities:
            continue
        if any(e in D.domain(l.source).entities for l in D.incoming(nid)):
            continue
        if e in D.nodes[nid].local:
            raw.append(Provision(nid, True))
            continue
        for l in D.incoming(nid):
            for pre in sorted(D.domain(l.source).entities, key=entity_name):
                if apply_to_entity(l.morphism, pre) == e:
                    raw.append(Provision(nid, False, l.id, pre))
                    break
    by_link = [p for p in raw if not p.local]
    out = []
    for p in raw:
        if not p.local and len(by_link) == 1:
            p = Provision(p.node, False, p.link, p.preimage, True)
        out.append(p)
    return out


class LocationMapping:
    """Entity -> node id, with the inverse index."""

    def __init__(self, mapping: dict):
        self._map = dict(mapping)
        inv = defaultdict(set)
        for e, n in self._map.items():
            inv[n].add(e)
        self._inv = {n: frozenset(es) for n, es in inv.items()}

    def __getitem__(self, e):
        return self._map[e]

    def get(self, e, default=None):
        return self._map.get(e, default)

    def __contains__(self, e):
        return e in self._map

    def __len__(self):
        return len(self._map)

    def items(self):
        return self._map.items()

    def keys(self):
        return self._map.keys()

    def inverse(self, nid: str) -> frozenset:
        return self._inv.get(nid, frozenset())

    def nodes(self) -> frozenset:
        return frozenset(self._inv)

    def __eq__(self, other):
        return isinstance(other, LocationMapping) and self._map == other._map

    def __repr__(self):
        return f"LocationMapping({len(self._map)} entities over {len(self._inv)} nodes)"


def provider_sets(D: DevelopmentGraph) -> dict:
    """entity -> set of node ids where it is provided."""
    out = defaultdict(set)
    for nid in D.nodes:
        for e in D.provided_at(nid):
            out[e].add(nid)
    return out


def compute_location(D: DevelopmentGraph) -> LocationMapping:
    """The unique location mapping of ``D``; raises when none exists."""
    prov = provider_sets(D)
    mapping = {}
    for e in sorted(prov, key=entity_name):
        nodes = prov[e]
        if len(nodes) > 1:
            raise MultipleProviders(e, sorted(nodes))
        mapping[e] = next(iter(nodes))
    used = set(mapping.values())
    for nid in D.nodes:
        if nid not in used:
            raise SpuriousNode(nid)
    return LocationMapping(mapping)


def location_diagnostics(D: DevelopmentGraph, loc: LocationMapping) -> list:
    diags = []
    prov = provider_sets(D)
    entities = D.all_entities
    for e in sorted(entities, key=entity_name):
        if e not in loc:
            diags.append(Diagnostic("Location", f"{entity_name(e)} has no location", (e,), 1))
            continue
        nodes = prov.get(e, set())
        if len(nodes) > 1:
            diags.append(
                Diagnostic("MultipleProviders", f"{entity_name(e)} provided by {sorted(nodes)}", (e,), 1)
            )
        elif loc[e] not in nodes:
            diags.append(
                Diagnostic("Location", f"{entity_name(e)} located at {loc[e]} but provided by {sorted(nodes)}", (e,), 1)
            )
    for e in loc.keys():
        if e not in entities:
            diags.append(Diagnostic("Location", f"{entity_name(e)} is located but not in the graph", (e,), 1))
    for nid, node in D.nodes.items():
        for e in node.local:
            if loc.get(e) != nid:
                diags.append(Diagnostic("Location", f"local {entity_name(e)} of {nid} located elsewhere", (e,), 1))
        if not loc.inverse(nid):
            diags.append(Diagnostic("SpuriousNode", f"{nid} provides nothing", (nid,), 1))
    return diags


class SupportMapping:
    """lemma name -> names of the axioms and lemmas used to prove it."""

    def __init__(self, mapping: Optional[dict] = None):
        self._map = {k: frozenset(v) for k, v in (mapping or {}).items()}

    def of(self, name: str) -> frozenset:
        return self._map.get(name, frozenset())

    def items(self):
        return sorted(self._map.items())

    def __contains__(self, name):
        return name in self._map

    def __len__(self):
        return len(self._map)

    def __eq__(self, other):
        return isinstance(other, SupportMapping) and self._map == other._map

    def __repr__(self):
        return f"SupportMapping({dict(self.items())})"

    def union(self, other: "SupportMapping") -> "SupportMapping":
        merged = dict(self._map)
        for k, v in other._map.items():
            merged[k] = merged.get(k, frozenset()) | v
        return SupportMapping(merged)

    def find_cycle(self) -> Optional[list]:
        color: dict = {}
        path: list = []

        def visit(n):
            color[n] = 1
            path.append(n)
            for m in sorted(self._map.get(n, ())):
                c = color.get(m, 0)
                if c == 1:
                    return path[path.index(m):] + [m]
                if c == 0 and m in self._map:
                    found = visit(m)
                    if found:
                        return found
            path.pop()
            color[n] = 2
            return None

        for n in sorted(self._map):
            if color.get(n, 0) == 0:
                found = visit(n)
                if found:
                    return found
        return None


def local_catalog(D: DevelopmentGraph) -> dict:
    cat = {}
    for nid in D.nodes:
        for s in D.nodes[nid].sentences:
            cat.setdefault(s.name, s)
    return cat


def check_support(D: DevelopmentGraph, supp: SupportMapping, catalog: Optional[dict] = None) -> list:
    """Acyclicity and per-node visibility of every support reference."""
    catalog = local_catalog(D) if catalog is None else catalog
    diags = []
    cycle = supp.find_cycle()
    if cycle:
        diags.append(Diagnostic("SupportCycle", " -> ".join(cycle), tuple(cycle)))
    names_of = defaultdict(list)
    for name, s in catalog.items():
        names_of[s].append(name)
    for lemma, refs in supp.items():
        for r in sorted(refs):
            if r not in catalog:
                diags.append(Diagnostic("UnresolvedSupport", f"{lemma} refers to unknown {r}", (lemma, r)))
    for nid in D.nodes:
        dom = D.domain(nid)
        visible = dom.sentences
        for phi in dom.lemmas:
            for name in names_of.get(phi, ()):
                for r in sorted(supp.of(name)):
                    target = catalog.get(r)
                    if target is not None and target not in visible:
                        diags.append(
                            Diagnostic("UnresolvedSupport", f"{nid}: support {r} of {name} not visible", (nid, name, r))
                        )
    return diags


class Reference(NamedTuple):
    """The flat theory (signature, axioms, lemmas) a structuring represents."""

    sig: frozenset
    axioms: frozenset
    lemmas: frozenset


@dataclass(frozen=True)
class Structuring:
    graph: DevelopmentGraph
    loc: LocationMapping
    supp: SupportMapping
    reference: Reference

    @cached_property
    def catalog(self) -> dict:
        cat = {}
        for s in sorted(self.reference.axioms | self.reference.lemmas, key=lambda x: x.name):
            cat[s.name] = s
        for name, s in local_catalog(self.graph).items():
            cat.setdefault(name, s)
        return cat

    @cached_property
    def names_of(self) -> dict:
        out = defaultdict(list)
        for name, s in self.catalog.items():
            out[s].append(name)
        return out

    def name_of(self, e) -> str:
        if isinstance(e, SymbolDecl):
            return e.label
        names = self.names_of.get(e)
        return min(names) if names else e.name

    def support_of(self, phi) -> frozenset:
        """Resolved support entities of a lemma entity (unknown names skipped)."""
        acc = set()
        for name in self.names_of.get(phi, ()):
            for r in self.supp.of(name):
                t = self.catalog.get(r)
                if t is not None:
                    acc.add(t)
        return frozenset(acc)

    def counts(self) -> tuple:
        """(local axioms, local lemmas) summed over all nodes."""
        ax = sum(len(n.axioms) for n in self.graph.nodes.values())
        lem = sum(len(n.lemmas) for n in self.graph.nodes.values())
        return ax, lem


def transport(D: DevelopmentGraph, start: str, entity) -> dict:
    """node -> set of images of ``entity`` reachable from ``start`` along links."""
    out = {start: {entity}}
    order = D.topological_order
    pos = order.index(start)
    for nid in order[pos:]:
        imgs = out.get(nid)
        if not imgs:
            continue
        for l in D.outgoing(nid):
            bucket = out.setdefault(l.target, set())
            for e in imgs:
                bucket.add(apply_to_entity(l.morphism, e))
    return out


def check_structuring(s: Structuring) -> list:
    D = s.graph
    diags = validate_graph(D)
    if any(d.code in ("CycleFound", "DanglingLink") for d in diags):
        return diags
    diags.extend(location_diagnostics(D, s.loc))

    root = D.root_domain
    ref = s.reference
    if root.sig != ref.sig:
        missing = sorted(str(x) for x in ref.sig - root.sig)
        extra = sorted(str(x) for x in root.sig - ref.sig)
        diags.append(Diagnostic("RootDomain", f"signature differs: missing {missing}, extra {extra}", (), 2))
    if root.axioms != ref.axioms:
        missing = sorted(x.name for x in ref.axioms - root.axioms)
        extra = sorted(x.name for x in root.axioms - ref.axioms)
        diags.append(Diagnostic("RootDomain", f"axioms differ: missing {missing}, extra {extra}", (), 2))
    if not ref.lemmas <= root.lemmas:
        missing = sorted(x.name for x in ref.lemmas - root.lemmas)
        diags.append(Diagnostic("RootDomain", f"lemmas missing at roots: {missing}", (), 2))

    diags.extend(check_support(D, s.supp, s.catalog))

    transported: dict = {}
    all_lemmas = set()
    for nid in D.nodes:
        all_lemmas |= D.domain(nid).lemmas
    for phi in sorted(all_lemmas, key=lambda x: x.name):
        at = s.loc.get(phi)
        if at is None:
            continue
        for psi in sorted(s.support_of(phi), key=lambda x: x.name):
            src = s.loc.get(psi)
            if src is None:
                diags.append(Diagnostic("SupportPath", f"support {s.name_of(psi)} of {s.name_of(phi)} unlocated", (phi, psi), 3))
                continue
            key = (src, psi)
            if key not in transported:
                transported[key] = transport(D, src, psi)
            if psi not in transported[key].get(at, ()):
                diags.append(
                    Diagnostic(
                        "SupportPath",
                        f"no path {src} -> {at} fixing {s.name_of(psi)} (support of {s.name_of(phi)})",
                        (phi, psi),
                        3,
                    )
                )
    return diags


# ------------------------------------------------------------ isomorphism

def _content_key(node: Node):
    return (node.sig, node.axioms, node.lemmas)


def isomorphic(a: DevelopmentGraph, b: DevelopmentGraph, limit: int = 50_000) -> bool:
    """Entity-level graph isomorphism.

    Nodes correspond when their local contents are equal; link morphisms are
    compared restricted to the source node's global signature.
    """
    if len(a.nodes) != len(b.nodes) or len(a.links) != len(b.links):
        return False
    groups_a = defaultdict(list)
    groups_b = defaultdict(list)
    for nid, n in a.nodes.items():
        groups_a[_content_key(n)].append(nid)
    for nid, n in b.nodes.items():
        groups_b[_content_key(n)].append(nid)
    if {k: len(v) for k, v in groups_a.items()} != {k: len(v) for k, v in groups_b.items()}:
        return False

    def link_bag(g, mapping):
        return Counter(
            (mapping[l.source], mapping[l.target], l.morphism.restrict(g.domain(l.source).sig)) for l in g.links
        )

    keys = list(groups_a)
    canon_b = {}
    for k in keys:
        for i, nid in enumerate(groups_b[k]):
            canon_b[nid] = (k, i)
    bag_b = link_bag(b, canon_b)
    perms = [list(itertools.permutations(range(len(groups_a[k])))) for k in keys]
    tried = 0
    for choice in itertools.product(*perms):
        tried += 1
        if tried > limit:
            return False
        mapping = {}
        for k, perm in zip(keys, choice):
            for nid, i in zip(groups_a[k], perm):
                mapping[nid] = (k, i)
        if link_bag(a, mapping) == bag_b:
            return True
    return False

"""Structuring-preserving transformations of development graphs.

Every rule checks all of its applicability conditions and raises
:class:`PreconditionFailed` (or the rule-specific error) instead of producing
a graph that is no longer a structuring of the same flat theory.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .devgraph import (
    DevelopmentGraph,
    Domain,
    Link,
    LocationMapping,
    Node,
    Structuring,
    SupportMapping,
    check_structuring,
    entity_name,
    provider_sets,
    reachable_morphisms,
    split_entities,
)
from .errors import NoSuchPath, NotASubset, NotRemovable, PreconditionFailed
from .fol import IDENTITY, SignatureMorphism, SymbolDecl, apply_to_entity, compose


def as_part(part) -> Domain:
    if isinstance(part, Domain):
        return part
    if isinstance(part, tuple) and len(part) == 3 and all(isinstance(x, (set, frozenset)) for x in part):
        return Domain(frozenset(part[0]), frozenset(part[1]), frozenset(part[2]))
    return split_entities(part)


@dataclass(frozen=True)
class Partitioning:
    node: str
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(as_part(p) for p in self.parts))


@dataclass(frozen=True)
class FactorizationCandidate:
    targets: tuple  # M_1..M_p
    imports: tuple  # K_1..K_n
    sig: frozenset
    axioms: frozenset
    lemmas: frozenset
    instance_morphisms: tuple  # theta_1..theta_p
    import_morphisms: tuple  # sigma_1..sigma_n
    factor_support: SupportMapping = SupportMapping()
    import_links: Optional[tuple] = None  # [i][j] -> link id

    @property
    def content(self) -> frozenset:
        return frozenset(self.sig) | frozenset(self.axioms) | frozenset(self.lemmas)


def _fresh_ids(D: DevelopmentGraph, count: int) -> list:
    out: list = []
    for _ in range(count):
        out.append(D.fresh_node_id(out))
    return out


def _with(s: Structuring, graph, loc, supp=None) -> Structuring:
    return Structuring(graph, LocationMapping(loc), s.supp if supp is None else supp, s.reference)


def _check_partition(node: Node, parts: Sequence[Domain], exact: Optional[int] = None):
    if len(parts) < 2 or (exact is not None and len(parts) != exact):
        raise PreconditionFailed("partitioning", f"need {'exactly ' + str(exact) if exact else 'at least 2'} parts")
    union: set = set()
    for i, p in enumerate(parts):
        ents = p.entities
        if not ents:
            raise PreconditionFailed("partitioning", f"part {i} is empty")
        if union & ents:
            raise PreconditionFailed("partitioning", f"part {i} overlaps an earlier part")
        union |= ents
    if union != node.local:
        raise PreconditionFailed("partitioning", "parts do not cover exactly the local domain")


def lemma_independent(ctx: Structuring, node: str, part) -> bool:
    """Every lemma of ``part`` is supported, within the node, only by ``part``."""
    n = ctx.graph.node(node)
    part = as_part(part)
    if not part.entities <= n.local:
        raise NotASubset(f"part is not contained in the local domain of {node}")
    local_sentences = n.sentences
    inside = part.sentences
    for psi in part.lemmas:
        if not (ctx.support_of(psi) & local_sentences) <= inside:
            return False
    return True


def _require_valid(D: DevelopmentGraph, nids: Iterable[str], which: str):
    for nid in nids:
        dom = D.domain(nid)
        for sentence in D.nodes[nid].sentences:
            missing = sentence.symbols - dom.sig
            if missing:
                raise PreconditionFailed(which, f"{sentence.name} in {nid} uses undeclared {sorted(map(str, missing))}")


# ------------------------------------------------------------ splits

def horizontal_split(s: Structuring, node: str, p) -> Structuring:
    D = s.graph
    n = D.node(node)
    parts = p.parts if isinstance(p, Partitioning) else tuple(as_part(x) for x in p)
    _check_partition(n, parts)
    for i, part in enumerate(parts):
        if not lemma_independent(s, node, part):
            raise PreconditionFailed("lemma-independence", f"part {i} depends on lemmas outside it")
    if s.loc.inverse(node) != n.local:
        raise PreconditionFailed("local-provision", f"{node} provides entities through its imports")

    ids = _fresh_ids(D, len(parts))
    new_nodes = [Node(nid, part.sig, part.axioms, part.lemmas) for nid, part in zip(ids, parts)]
    incoming = D.incoming(node)
    outgoing = D.outgoing(node)
    imported_sig = set()
    for l in incoming:
        imported_sig |= {e for e in D.link_image(l) if isinstance(e, SymbolDecl)}
    link_ids = iter(D.fresh_link_ids(len(parts) * (len(incoming) + len(outgoing))))
    links = []
    for nid, part in zip(ids, parts):
        visible_sig = imported_sig | part.sig
        for l in incoming:
            links.append(Link(next(link_ids), l.source, nid, l.morphism))
        for l in outgoing:
            links.append(Link(next(link_ids), nid, l.target, l.morphism.restrict(visible_sig)))
    D2 = D.replace(
        drop_nodes=[node],
        add_nodes=new_nodes,
        drop_links=[l.id for l in incoming + outgoing],
        add_links=links,
    )
    _require_valid(D2, ids, "signature-validity")
    loc = {}
    for e, at in s.loc.items():
        loc[e] = at
    for nid, part in zip(ids, parts):
        for e in part.entities:
            loc[e] = nid
    return _with(s, D2, loc)


def vertical_split(s: Structuring, node: str, lower, upper) -> Structuring:
    D = s.graph
    n = D.node(node)
    lower, upper = as_part(lower), as_part(upper)
    _check_partition(n, (lower, upper), exact=2)
    if not lemma_independent(s, node, lower):
        raise PreconditionFailed("lemma-independence", "lower part depends on lemmas of the upper part")
    low_id, up_id = _fresh_ids(D, 2)
    incoming = D.incoming(node)
    outgoing = D.outgoing(node)
    link_ids = iter(D.fresh_link_ids(1 + len(incoming) + len(outgoing)))
    links = [Link(next(link_ids), low_id, up_id, IDENTITY)]
    links += [Link(next(link_ids), l.source, low_id, l.morphism) for l in incoming]
    links += [Link(next(link_ids), up_id, l.target, l.morphism) for l in outgoing]
    D2 = D.replace(
        drop_nodes=[node],
        add_nodes=[Node(low_id, lower.sig, lower.axioms, lower.lemmas), Node(up_id, upper.sig, upper.axioms, upper.lemmas)],
        drop_links=[l.id for l in incoming + outgoing],
        add_links=links,
    )
    _require_valid(D2, (low_id, up_id), "signature-validity")
    low_dom = D2.domain(low_id).entities
    loc = {}
    for e, at in s.loc.items():
        if at == node:
            loc[e] = low_id if e in low_dom else up_id
        else:
            loc[e] = at
    return _with(s, D2, loc)


def vertical_merge(s: Structuring, n1: str, n2: str) -> Structuring:
    """Merge ``n1`` into the node ``n2`` it is included in by an identity link."""
    D = s.graph
    a, b = D.node(n1), D.node(n2)
    out = D.outgoing(n1)
    if not out:
        raise PreconditionFailed("shape", f"{n1} has no link into {n2}")
    for l in out:
        if l.target != n2:
            raise PreconditionFailed("shape", f"{n1} also links to {l.target}")
        if not l.morphism.is_identity:
            raise PreconditionFailed("shape", f"link {l.id} is not an identity link")
    merged = Node(n2, a.sig | b.sig, a.axioms | b.axioms, a.lemmas | b.lemmas)
    links = []
    for l in D.links:
        if l.source == n1:
            continue
        if l.target == n1:
            links.append(Link(l.id, l.source, n2, l.morphism))
        else:
            links.append(l)
    D2 = DevelopmentGraph([merged if nid == n2 else node for nid, node in D.nodes.items() if nid != n1], links)
    if D2.find_cycle():
        raise PreconditionFailed("shape", "merge would create a cycle")
    loc = {e: (n2 if at in (n1, n2) else at) for e, at in s.loc.items()}
    result = _with(s, D2, loc)
    diags = check_structuring(result)
    if diags:
        raise PreconditionFailed("providers", str(diags[0]))
    return result


# -------------------------------------------------------- factorization

def _image(theta: SignatureMorphism, entities) -> frozenset:
    return frozenset(apply_to_entity(theta, e) for e in entities)


def _resolve_import_links(D, c: FactorizationCandidate) -> list:
    n, p = len(c.imports), len(c.targets)
    chosen = [[None] * p for _ in range(n)]
    for i, k in enumerate(c.imports):
        dom_k = D.domain(k).entities
        for j, m in enumerate(c.targets):
            links = [l for l in D.incoming(m) if l.source == k]
            if c.import_links is not None:
                want = c.import_links[i][j]
                links = [l for l in links if l.id == want]
            if not links:
                raise PreconditionFailed("import-links", f"no link {k} -> {m}")
            expected = compose(c.instance_morphisms[j], c.import_morphisms[i])
            good = None
            for l in links:
                if all(apply_to_entity(expected, e) == apply_to_entity(l.morphism, e) for e in dom_k):
                    good = l
                    break
            if good is None:
                raise PreconditionFailed(
                    "morphism-compatibility", f"theta_{j + 1} . sigma_{i + 1} disagrees with every link {k} -> {m}"
                )
            chosen[i][j] = good
    return chosen


def factorize(s: Structuring, c: FactorizationCandidate) -> Structuring:
    D = s.graph
    targets, imports = tuple(c.targets), tuple(c.imports)
    p, n = len(targets), len(imports)
    if p < 2:
        raise PreconditionFailed("arity", "factorization needs at least two target nodes")
    if len(set(targets)) != p or len(set(imports)) != n or set(targets) & set(imports):
        raise PreconditionFailed("arity", "targets and imports must be distinct nodes")
    if len(c.instance_morphisms) != p or len(c.import_morphisms) != n:
        raise PreconditionFailed("arity", "one instance morphism per target, one import morphism per import")
    for nid in targets + imports:
        D.node(nid)
    sig, ax, lem = frozenset(c.sig), frozenset(c.axioms), frozenset(c.lemmas)
    thetas, sigmas = c.instance_morphisms, c.import_morphisms
    try:
        Node("factor", sig, ax, lem)
    except ValueError as exc:
        raise PreconditionFailed("content-roles", str(exc)) from None
    if not (sig or ax):
        raise PreconditionFailed("nonempty", "factor content needs a symbol or an axiom")

    for m in targets:
        node = D.nodes[m]
        if not (node.sig or node.axioms):
            raise PreconditionFailed("nonempty", f"{m} has no local symbols or axioms")

    everything = D.all_entities
    clash = c.content & everything
    if clash:
        raise PreconditionFailed("freshness", f"{sorted(entity_name(e) for e in clash)} already occur")
    used_symbol_names = {(x.name, x.kind) for x in everything if isinstance(x, SymbolDecl)}
    for x in sig:
        if (x.name, x.kind) in used_symbol_names:
            raise PreconditionFailed("freshness", f"symbol name {x.name} already in use")
    for x in ax | lem:
        if x.name in s.catalog or x.name in s.supp:
            raise PreconditionFailed("freshness", f"sentence name {x.name} already in use")

    import_links = _resolve_import_links(D, c)
    for i, k in enumerate(imports):
        for j in range(p):
            sij = import_links[i][j].morphism
            for e in D.domain(k).entities:
                img = apply_to_entity(sij, e)
                if img != e and img in everything:
                    raise PreconditionFailed(
                        "morphism-compatibility", f"{entity_name(e)} is renamed onto existing {entity_name(img)}"
                    )

    for j, m in enumerate(targets):
        node, dom = D.nodes[m], D.domain(m).entities
        th_sig, th_ax = _image(thetas[j], sig), _image(thetas[j], ax)
        if not (node.sig <= th_sig <= dom):
            raise PreconditionFailed("signature-cover", f"theta_{j + 1}(sig) does not match {m}")
        if not (node.axioms <= th_ax <= dom):
            raise PreconditionFailed("axiom-cover", f"theta_{j + 1}(ax) does not match {m}")

    for e in lem:
        images = [apply_to_entity(t, e) for t in thetas]
        if not any(img in D.nodes[m].lemmas for img, m in zip(images, targets)):
            raise PreconditionFailed("lemma-cover", f"{e.name} matches no local lemma of the targets")
        if len(set(images)) != p:
            raise PreconditionFailed("lemma-injectivity", f"two instances of {e.name} coincide")
        for img, m in zip(images, targets):
            if img in everything and s.loc.get(img) != m:
                raise PreconditionFailed("lemma-location", f"{entity_name(img)} is not located in {m}")

    # factor domain: own content plus renamed imports
    imported = set()
    for i, k in enumerate(imports):
        imported |= _image(sigmas[i], D.domain(k).entities)
    factor_dom = split_entities(imported | c.content)
    for x in ax | lem:
        missing = x.symbols - factor_dom.sig
        if missing:
            raise PreconditionFailed("factor-validity", f"{x.name} uses {sorted(map(str, missing))}")

    factor_names = {x.name: x for x in ax | lem}
    lemma_names = {x.name for x in lem}
    for name, refs in c.factor_support.items():
        if name not in lemma_names:
            raise PreconditionFailed("factor-support", f"{name} is not a factor lemma")
        for r in refs:
            target = factor_names.get(r, s.catalog.get(r))
            if target is None or target not in factor_dom.sentences:
                raise PreconditionFailed("factor-support", f"support {r} of {name} is not available in the factor")
    supp2 = s.supp.union(c.factor_support)
    cycle = supp2.find_cycle()
    if cycle:
        raise PreconditionFailed("factor-support", "cyclic support " + " -> ".join(cycle))

    # construction
    factor_id, *inst_ids = _fresh_ids(D, 1 + p)
    inst = dict(zip(targets, inst_ids))
    factor = Node(factor_id, sig, ax, lem)
    instances = [
        Node(inst_ids[j], frozenset(), frozenset(), D.nodes[m].lemmas - _image(thetas[j], lem))
        for j, m in enumerate(targets)
    ]
    used = {l.id for row in import_links for l in row}
    kept, rewired = [], []
    for l in D.links:
        if l.id in used:
            continue
        if l.source in inst or l.target in inst:
            rewired.append(l)
        else:
            kept.append(l)
    new_ids = iter(D.fresh_link_ids(n + p + len(rewired)))
    links = kept
    links += [Link(next(new_ids), k, factor_id, sigmas[i]) for i, k in enumerate(imports)]
    links += [Link(next(new_ids), factor_id, inst_ids[j], thetas[j]) for j in range(p)]
    links += [Link(next(new_ids), inst.get(l.source, l.source), inst.get(l.target, l.target), l.morphism) for l in rewired]
    nodes = [node for nid, node in D.nodes.items() if nid not in inst] + [factor] + instances
    D2 = DevelopmentGraph(nodes, links)

    import_doms = set()
    for k in imports:
        import_doms |= D2.domain(k).entities
    loc = {}
    factor_entities = D2.domain(factor_id).entities
    for x in D2.all_entities:
        if x in factor_entities and x not in import_doms:
            loc[x] = factor_id
            continue
        placed = False
        for j, nid in enumerate(inst_ids):
            if x in D2.domain(nid).entities and all(x not in D2.domain(l.source).entities for l in D2.incoming(nid)):
                loc[x] = nid
                placed = True
                break
        if not placed and x in s.loc:
            loc[x] = s.loc[x]
    return _with(s, D2, loc, supp2)


# ------------------------------------------------------- link rules

def transitive_enrich(s: Structuring, k: str, n: str, sigma: SignatureMorphism) -> Structuring:
    D = s.graph
    if k == n:
        raise NoSuchPath(f"a link from {k} to itself is not a global definition link")
    if sigma not in reachable_morphisms(D, k, n):
        raise NoSuchPath(f"{n} is not reachable from {k} via {sigma!r}")
    (lid,) = D.fresh_link_ids(1)
    D2 = D.replace(add_links=[Link(lid, k, n, sigma)])
    return _with(s, D2, dict(s.loc.items()))


def _root_morphisms(D: DevelopmentGraph) -> dict:
    """node -> set of morphisms along which it reaches some root."""
    memo: dict = {}
    for nid in reversed(D.topological_order):
        out = D.outgoing(nid)
        if not out:
            memo[nid] = frozenset({IDENTITY})
            continue
        acc = set()
        for l in out:
            for g in memo[l.target]:
                acc.add(compose(g, l.morphism))
        memo[nid] = frozenset(acc)
    return memo


def removal_obstruction(s: Structuring, link_id: str) -> Optional[tuple]:
    """Why a link may not be removed, as (condition, witness); None if removable."""
    D = s.graph
    link = D.link(link_id)
    D2 = D.replace(drop_links=[link.id])

    before, after = _root_morphisms(D), _root_morphisms(D2)
    for nid in D.topological_order:
        visible = D.domain(nid).sig
        have = {g.restrict(visible) for g in after[nid]}
        for g in before[nid]:
            if g.restrict(visible) not in have:
                return 2, f"{nid} no longer reaches a root via {g!r}"

    prov = provider_sets(D2)
    for e, at in s.loc.items():
        where = prov.get(e)
        if not where:
            return 1, f"{entity_name(e)} disappears"
        if where != {at}:
            return 1, f"{entity_name(e)} would be provided by {sorted(where)}"
    used = {n for nodes in prov.values() for n in nodes}
    for nid in D2.nodes:
        if nid not in used:
            return 1, f"{nid} would provide nothing"

    for phi, at in s.loc.items():
        if isinstance(phi, SymbolDecl) or not phi.is_lemma:
            continue
        missing = s.support_of(phi) - D2.domain(at).sentences
        if missing:
            return 3, f"support {sorted(x.name for x in missing)} of {s.name_of(phi)} lost at {at}"
    diags = check_structuring(_with(s, D2, dict(s.loc.items())))
    if diags:
        return diags[0].condition or 3, str(diags[0])
    return None


def remove_link(s: Structuring, link_id) -> Structuring:
    if isinstance(link_id, Link):
        link_id = link_id.id
    obstruction = removal_obstruction(s, link_id)
    if obstruction is not None:
        raise NotRemovable(*obstruction)
    D2 = s.graph.replace(drop_links=[link_id])
    return _with(s, D2, dict(s.loc.items()))

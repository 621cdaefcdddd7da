import pytest

from theoryforge import rules
from theoryforge.devgraph import DevelopmentGraph, Link, Node, Reference, Structuring, SupportMapping, compute_location
from theoryforge.errors import NoSuchPath, NotASubset, NotRemovable, PreconditionFailed
from theoryforge.fol import FN, IDENTITY, NamedSentence, Role, SignatureMorphism, SymbolDecl
from theoryforge.tstp import initial_structuring, parse_formula, parse_tstp

from conftest import (
    SIGMA_TIMES,
    assert_valid,
    field_after_horizontal,
    field_after_vertical,
    field_candidate,
    group_nodes,
    named,
)


def links_with(s, sigma):
    return [l for l in s.graph.links if l.morphism == sigma]


def test_vertical_split_places_distrib_on_top(field):
    s = field_after_vertical(field)
    assert_valid(s)
    assert len(s.graph.nodes) == 2 and len(s.graph.links) == 1
    (top,) = s.graph.roots
    assert set(named(s.graph.nodes[top])) == {"distrib"}
    assert not s.graph.nodes[top].sig


def test_vertical_split_requires_partition(field):
    n0 = field.graph.nodes["n0"]
    with pytest.raises(PreconditionFailed) as exc:
        rules.vertical_split(field, "n0", [named(n0)["distrib"]], [named(n0)["plus_comm"]])
    assert exc.value.which == "partitioning"


def test_vertical_split_signature_validity(field):
    n0 = field.graph.nodes["n0"]
    upper = [e for e in n0.local if isinstance(e, SymbolDecl)]
    lower = [e for e in n0.local if e not in upper]
    with pytest.raises(PreconditionFailed) as exc:
        rules.vertical_split(field, "n0", lower, upper)
    assert exc.value.which == "signature-validity"


def test_vertical_split_lemma_independence():
    s = initial_structuring(parse_tstp("fof(a, axiom, p). fof(b, theorem, p | q, inference(r, [], [a]))."))
    n0 = s.graph.nodes["n0"]
    b = named(n0)["b"]
    with pytest.raises(PreconditionFailed) as exc:
        rules.vertical_split(s, "n0", n0.local - {named(n0)["a"]}, [named(n0)["a"]])
    assert exc.value.which in ("lemma-independence", "signature-validity")
    lower = [e for e in n0.local if e != b]
    assert_valid(rules.vertical_split(s, "n0", lower, [b]))


def test_lemma_independent_rejects_foreign_part(field):
    with pytest.raises(NotASubset):
        rules.lemma_independent(field, "n0", [SymbolDecl("nope", 0, FN)])


def test_horizontal_split_of_groups(field):
    s = field_after_horizontal(field_after_vertical(field))
    assert_valid(s)
    assert len(s.graph.nodes) == 3
    (top,) = s.graph.roots
    assert {l.source for l in s.graph.incoming(top)} == set(group_nodes(s))


def test_horizontal_split_needs_local_provision(field):
    s = field_after_vertical(field)
    (top,) = s.graph.roots
    with pytest.raises(PreconditionFailed):
        rules.horizontal_split(s, top, [list(s.graph.nodes[top].local)])


def test_vertical_merge_inverts_split(field):
    s = field_after_vertical(field)
    low = next(n for n in s.graph.nodes if n not in s.graph.roots)
    (top,) = s.graph.roots
    merged = rules.vertical_merge(s, low, top)
    assert_valid(merged)
    assert merged.graph.nodes[top].local == field.graph.nodes["n0"].local


def test_vertical_merge_shape(field):
    s = field_after_horizontal(field_after_vertical(field))
    a, b = group_nodes(s)
    with pytest.raises(PreconditionFailed) as exc:
        rules.vertical_merge(s, a, b)
    assert exc.value.which == "shape"


def test_factorize_field(field):
    s = field_after_horizontal(field_after_vertical(field))
    f = rules.factorize(s, field_candidate(s))
    assert_valid(f)
    factor = [nid for nid, n in f.graph.nodes.items() if len(n.axioms) == 4]
    assert len(factor) == 1
    assert {l.morphism for l in f.graph.outgoing(factor[0])} == {field_candidate(s).instance_morphisms[0], SIGMA_TIMES}
    assert f.counts() == (5, 0)


def test_factorize_rejects_wrong_morphism(field):
    s = field_after_horizontal(field_after_vertical(field))
    c = field_candidate(s)
    bad = SignatureMorphism.from_pairs([(FN, "op", "times"), (FN, "e", "zero"), (FN, "i", "inv")])
    c2 = rules.FactorizationCandidate(c.targets, (), c.sig, c.axioms, c.lemmas, (c.instance_morphisms[0], bad), ())
    with pytest.raises(PreconditionFailed) as exc:
        rules.factorize(s, c2)
    assert exc.value.which in ("axiom-cover", "signature-cover", "morphism-compatibility")


def test_factorize_rejects_single_target(field):
    s = field_after_horizontal(field_after_vertical(field))
    c = field_candidate(s)
    c2 = rules.FactorizationCandidate(c.targets[:1], (), c.sig, c.axioms, c.lemmas, c.instance_morphisms[:1], ())
    with pytest.raises(PreconditionFailed) as exc:
        rules.factorize(s, c2)
    assert exc.value.which == "arity"


def test_factorize_rejects_partial_cover(field):
    s = field_after_horizontal(field_after_vertical(field))
    c = field_candidate(s)
    fewer = frozenset(x for x in c.axioms if x.name != "comm")
    c2 = rules.FactorizationCandidate(c.targets, (), c.sig, fewer, c.lemmas, c.instance_morphisms, ())
    with pytest.raises(PreconditionFailed) as exc:
        rules.factorize(s, c2)
    assert exc.value.which == "axiom-cover"


def test_transitive_enrich_and_no_path(field_steps):
    s = field_steps[2]
    a, b = group_nodes(s)
    with pytest.raises(NoSuchPath):
        rules.transitive_enrich(s, a, b, IDENTITY)
    v = field_after_vertical(field_steps[0])
    low = next(n for n in v.graph.nodes if n not in v.graph.roots)
    (top,) = v.graph.roots
    e = rules.transitive_enrich(v, low, top, IDENTITY)
    assert len(e.graph.links) == 2
    assert_valid(e)


def test_remove_times_link_violates_root_domain(field_steps):
    s = field_steps[3]
    (lid,) = [l.id for l in links_with(s, SIGMA_TIMES)]
    assert rules.removal_obstruction(s, lid)[0] == 2
    with pytest.raises(NotRemovable) as exc:
        rules.remove_link(s, lid)
    assert exc.value.condition == 2


def test_remove_link_after_cleanup_still_blocked(field_steps):
    s = field_steps[-1]
    for l in s.graph.links:
        assert rules.removal_obstruction(s, l.id) is not None


def test_remove_redundant_link(field):
    v = field_after_vertical(field)
    low = next(n for n in v.graph.nodes if n not in v.graph.roots)
    (top,) = v.graph.roots
    e = rules.transitive_enrich(v, low, top, IDENTITY)
    extra = max(e.graph.links, key=lambda l: l.id).id
    back = rules.remove_link(e, extra)
    assert_valid(back)
    assert len(back.graph.links) == 1


def test_remove_link_condition_three():
    f, g = SymbolDecl("f", 1, FN), SymbolDecl("g", 1, FN)
    a = NamedSentence("a", Role.AXIOM, parse_formula("![X]: f(X) = X"))
    b = NamedSentence("b", Role.LEMMA, parse_formula("![X]: g(g(X)) = g(X)"))
    c = NamedSentence("c", Role.AXIOM, parse_formula("![X]: f(g(X)) = g(f(X))"))
    nodes = [Node("A", {f}, {a}), Node("B", {g}, (), {b}), Node("C", (), {c})]
    links = [Link("ab", "A", "B"), Link("ac", "A", "C"), Link("bc", "B", "C")]
    graph = DevelopmentGraph(nodes, links)
    s = Structuring(
        graph, compute_location(graph), SupportMapping({"b": {"a"}}), Reference(frozenset({f, g}), frozenset({a, c}), frozenset({b}))
    )
    assert_valid(s)
    # root domain and providers survive, but a is no longer visible where b is proved
    cond, _ = rules.removal_obstruction(s, "ab")
    assert cond == 3
    assert rules.removal_obstruction(s, "ac") is None

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from theoryforge.devgraph import isomorphic
from theoryforge.errors import ParseError
from theoryforge.tactics import (
    BASIC,
    INITTAC,
    OVERALL,
    Basic,
    Budget,
    OnFail,
    Outcome,
    Plus,
    Seq,
    Star,
    dependency_graph,
    factorization_groups,
    parse_tactic,
    run_tactic,
    tactic_cleanup,
    tactic_split_horizontal,
    tactic_split_vertical_maximal,
    tactic_split_vertical_minimal,
)

from conftest import assert_valid
from generators import random_structuring
from oracles import components, minimal_entities


# ---------------------------------------------------------------- parser

def test_precedence():
    t = parse_tactic("Cleanup onfail Factorize; SplitHorizontal*")
    assert t == Seq(OnFail(Basic("Cleanup"), Basic("Factorize")), Star(Basic("SplitHorizontal")))


def test_postfix_binds_tighter_than_onfail():
    t = parse_tactic("Factorize onfail Cleanup+")
    assert t == OnFail(Basic("Factorize"), Plus(Basic("Cleanup")))


def test_aliases():
    t = parse_tactic("SplitHorizontally; SplitVerticallyMaximalEntries; RemoveSuperfluousEmptyTheories")
    assert str(t) == "SplitHorizontal; SplitVerticallyMaximal; Cleanup"


def test_parse_errors():
    for bad in ("", "Factorize;", "(Cleanup", "Bogus", "Cleanup ** )", "Cleanup & Factorize"):
        with pytest.raises(ParseError):
            parse_tactic(bad)


def test_standard_tactics_roundtrip():
    for t in (INITTAC, OVERALL):
        assert parse_tactic(str(t)) == t


def tactic_exprs():
    leaf = st.sampled_from(sorted(BASIC)).map(Basic)
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            sub.map(Star), sub.map(Plus), st.tuples(sub, sub).map(lambda p: Seq(*p)), st.tuples(sub, sub).map(lambda p: OnFail(*p))
        ),
        max_leaves=8,
    )


@settings(max_examples=200, deadline=None)
@given(tactic_exprs())
def test_printer_parser_roundtrip(t):
    back = parse_tactic(str(t))
    assert str(back) == str(t)


# ---------------------------------------------------- dependency graph

def test_dependency_components_match_oracle():
    rng = random.Random(11)
    checked = 0
    for _ in range(80):
        s = random_structuring(rng)
        for nid, node in s.graph.nodes.items():
            if s.graph.incoming(nid):
                continue
            dep = dependency_graph(s, nid)
            supp = {name: refs for name, refs in s.supp.items()}
            got = sorted(sorted(map(str, c)) for c in dep.components())
            want = sorted(sorted(map(str, c)) for c in components(node.sig, node.sentences, supp))
            assert got == want
            assert dep.minimal() == minimal_entities(dep.entities, dep.edges)
            checked += 1
    assert checked >= 80


def test_field_dependency_graph(field):
    dep = dependency_graph(field, "n0")
    assert len(dep.components()) == 1
    # without lemmas the symbols are exactly the minimal and the axioms exactly the maximal entities
    n0 = field.graph.nodes["n0"]
    assert dep.minimal() == n0.sig
    assert dep.maximal() == n0.axioms


# ------------------------------------------------------- basic tactics

def test_basic_tactics_keep_structuring_valid(field, membered):
    for s in (field, membered):
        for tac in (tactic_split_vertical_minimal, tactic_split_vertical_maximal, tactic_split_horizontal, tactic_cleanup):
            out = tac(s)
            if out is not None:
                assert_valid(out)


def test_maximal_split_lifts_axioms(field):
    out = tactic_split_vertical_maximal(field)
    (top,) = out.graph.roots
    assert out.graph.nodes[top].axioms == field.graph.nodes["n0"].axioms
    assert not out.graph.nodes[top].sig


def test_horizontal_split_fails_on_connected(field):
    assert tactic_split_horizontal(field) is None


def test_factorization_groups_membered(membered):
    s = run_tactic(INITTAC, membered)[0]
    groups = factorization_groups(s)
    assert groups
    assert len(groups[0].members) == 5


# --------------------------------------------------------- interpreter

def test_factorize_plus_fails_on_unsplit_field(field):
    out, outcome, trace = run_tactic(parse_tactic("Factorize+"), field)
    assert outcome is Outcome.FAILED
    assert out is field and trace == []


def test_star_never_fails(field):
    out, outcome, _ = run_tactic(parse_tactic("Factorize*"), field)
    assert outcome is Outcome.PROGRESSED and out is field


def test_sequence_rolls_back(field):
    # the first step succeeds, the second fails; the whole sequence leaves no trace
    out, outcome, trace = run_tactic(parse_tactic("SplitVerticallyMaximal; SplitVerticallyMaximal"), field)
    assert outcome is Outcome.FAILED and out is field and trace == []


def test_onfail_takes_second_branch(field):
    out, outcome, trace = run_tactic(parse_tactic("Factorize onfail SplitVerticallyMaximal"), field)
    assert outcome is Outcome.PROGRESSED
    assert [t.tactic for t in trace] == ["SplitVerticallyMaximal"]


def test_step_limit_zero_is_identity(membered):
    out, outcome, trace = run_tactic(OVERALL, membered, Budget(steps=0))
    assert out is membered and outcome is Outcome.TIMED_OUT and trace == []


def test_step_limit_returns_latest(membered):
    out, outcome, trace = run_tactic(OVERALL, membered, Budget(steps=2))
    assert outcome is Outcome.TIMED_OUT and len(trace) == 2
    assert_valid(out)


def test_budget_validation():
    with pytest.raises(ValueError):
        Budget(seconds=0)
    with pytest.raises(ValueError):
        Budget(steps=-1)


def test_overall_is_deterministic(membered):
    a = run_tactic(OVERALL, membered)[0]
    b = run_tactic(OVERALL, membered)[0]
    assert isomorphic(a.graph, b.graph)
    assert sorted(a.graph.nodes) == sorted(b.graph.nodes)


def test_overall_checked_run(field):
    out, outcome, trace = run_tactic(OVERALL, field, check=True)
    assert outcome is Outcome.PROGRESSED
    assert "Factorize" in [t.tactic for t in trace]
    assert out.counts()[0] == 5

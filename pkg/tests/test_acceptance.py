"""Acceptance criteria 1 to 7; a PASS/FAIL line per criterion is printed at the end of the run."""
import json
import random
import time

import pytest

from theoryforge import rules
from theoryforge.devgraph import check_structuring, isomorphic
from theoryforge.export import export_document, import_document
from theoryforge.fol import alpha_equal, apply_to_entity
from theoryforge.report import auto_structure, reduction_metric
from theoryforge.tactics import OVERALL, Budget, Outcome, run_tactic
from theoryforge.tstp import format_record, load_structuring, parse_tstp

from conftest import FIELD, MEMBERED, SIGMA_PLUS, SIGMA_TIMES, scripted_field
from generators import random_corpus, random_structuring
from oracles import naive_domain, reduction_oracle
from rule_driver import random_step

# ------------------------------------------------------------ criterion 1

@pytest.fixture(scope="module")
def field_run():
    started = time.perf_counter()
    steps = scripted_field(FIELD)
    diags = [check_structuring(s) for s in steps]
    return steps, diags, time.perf_counter() - started


@pytest.mark.acceptance(1, "scripted Field pipeline")
def test_field_pipeline(field_run):
    steps, diags, elapsed = field_run

    assert [len(d) for d in diags] == [0] * len(steps), [str(x) for d in diags for x in d]
    assert elapsed < 1.0
    final = steps[-1]
    g = final.graph
    axioms = sorted(len(n.axioms) for n in g.nodes.values() if n.axioms)
    assert axioms == [1, 4] and final.counts() == (5, 0)
    (top,) = g.roots
    assert {x.name for x in g.nodes[top].axioms} == {"distrib"}
    factor = next(nid for nid, n in g.nodes.items() if len(n.axioms) == 4)
    assert {s.name for s in g.nodes[factor].sig} == {"op", "e", "i"}
    assert sorted(l.morphism.label() for l in g.links) == ["e→one,i→inv,op→times", "e→zero,i→neg,op→plus"]
    assert {l.morphism for l in g.links} == {SIGMA_PLUS, SIGMA_TIMES}
    assert all((l.source, l.target) == (factor, top) for l in g.links)


# ------------------------------------------------------------ criterion 2

# article, (ax_i, th_i, ax_f, th_f), reduction percent as published
TABLE = [
    ("binop_2", (21, 28, 19, 28), 5),
    ("bintree1", (62, 16, 61, 16), 2),
    ("cfuncdom", (25, 40, 24, 40), 2),
    ("ff_siec", (52, 32, 51, 32), 2),
    ("finsub_1", (38, 16, 37, 16), 2),
    ("heine", (96, 13, 95, 13), 1),
    ("membered", (17, 36, 17, 16), 38),
    ("mssubfam", (84, 55, 83, 55), 1),
    ("msualg_1", (49, 13, 48, 13), 2),
    ("power", (103, 61, 102, 61), 1),
    ("qc_lang1", (86, 23, 85, 23), 1),
    ("rsspace", (46, 20, 45, 20), 2),
    ("setfam_1", (51, 44, 48, 44), 4),
]


@pytest.mark.acceptance(2, "reduction metric table")
def test_reduction_table():
    assert len(TABLE) == 13
    got = {article: reduction_metric(*counts) for article, counts, _ in TABLE}
    assert got == {article: expected for article, _, expected in TABLE}
    assert got == {article: reduction_oracle(*counts) for article, counts, _ in TABLE}


# ------------------------------------------------------------ criterion 3

@pytest.fixture(scope="module")
def membered_run():
    s = load_structuring(MEMBERED)
    started = time.perf_counter()
    out, report = auto_structure(s, article="membered.p")
    return s, out, report, time.perf_counter() - started


@pytest.mark.acceptance(3, "membered-style factorization")
def test_membered_factorization(membered_run):
    s, out, report, elapsed = membered_run

    assert not check_structuring(out)
    assert (report.theorems_initial, report.theorems_final) == (20, 4)
    assert report.axioms_initial == report.axioms_final == 4
    local_axioms = frozenset().union(*(n.axioms for n in out.graph.nodes.values()))
    assert local_axioms == s.graph.nodes["n0"].axioms
    assert report.reduction_percent == reduction_metric(4, 20, 4, 4) == reduction_oracle(4, 20, 4, 4)
    assert not report.timed_out
    assert elapsed < 10.0


# -------------------------------------------------------- criteria 4 and 5

STRUCTURINGS = 200
MAX_RULES = 10


@pytest.fixture(scope="module")
def random_runs():
    """The random starting structurings and every rule application on them."""
    starts, applied = [], []
    for k in range(STRUCTURINGS):
        rng = random.Random(20_000 + k)
        s = random_structuring(rng)
        starts.append(s)
        for _ in range(rng.randint(1, MAX_RULES)):
            a = random_step(rng, s)
            if a is None:
                break
            applied.append(a)
            if check_structuring(a.after):
                break
            s = a.after
    return starts, applied


@pytest.mark.acceptance(4, "rule soundness on random structurings")
def test_rules_preserve_structurings(random_runs):
    starts, applied = random_runs
    assert len(starts) >= 200
    assert all(not check_structuring(s) for s in starts)
    assert all(len(s.graph.nodes) <= 8 and len(s.graph.all_entities) <= 40 for s in starts)
    assert len({a.rule for a in applied}) == 6
    failures = []
    for a in applied:
        diags = check_structuring(a.after)
        if diags:
            failures.append((a.rule, str(diags[0])))
            continue
        r0, r1 = a.before.graph.root_domain, a.after.graph.root_domain
        if r0.sig != r1.sig or r0.axioms != r1.axioms or not r0.lemmas <= r1.lemmas:
            failures.append((a.rule, "root domain changed"))
    assert failures == []


def _horizontal_law(a) -> bool:
    node = a.detail["node"]
    siblings = set(a.after.graph.nodes) - set(a.before.graph.nodes)
    union = frozenset().union(*(naive_domain(a.after.graph, nid) for nid in siblings))
    return len(siblings) >= 2 and union == naive_domain(a.before.graph, node)


def _instance_law(a) -> bool:
    c = a.detail["candidate"]
    before, after = a.before.graph, a.after.graph
    fresh = set(after.nodes) - set(before.nodes)
    (factor,) = [nid for nid in fresh if after.nodes[nid].local == c.content]
    for m, theta in zip(c.targets, c.instance_morphisms):
        (n,) = [l.target for l in after.outgoing(factor) if l.morphism == theta]
        expected = naive_domain(before, m) | {apply_to_entity(theta, x) for x in c.lemmas}
        if naive_domain(after, n) != expected:
            return False
    return True


@pytest.mark.acceptance(5, "domain laws of splits and factorization")
def test_domain_laws(random_runs):
    _, applied = random_runs
    horizontal = [a for a in applied if a.rule == "horizontal"]
    factorized = [a for a in applied if a.rule == "factorize"]
    print(f"domain laws checked on {len(horizontal)} horizontal splits and {len(factorized)} factorizations")
    assert len(horizontal) >= 20 and len(factorized) >= 20
    assert [a.detail["node"] for a in horizontal if not _horizontal_law(a)] == []
    assert [a.detail["candidate"].targets for a in factorized if not _instance_law(a)] == []


# ------------------------------------------------------------ criterion 6

@pytest.mark.acceptance(6, "round-trips")
def test_tstp_roundtrip():
    corpus = random_corpus(random.Random(6), 150)
    for path in (FIELD, MEMBERED):
        recs = parse_tstp(path.read_text())
        corpus += [r for r in recs]
    assert len(corpus) >= 100
    text = "\n".join(format_record(x.name, x.role if isinstance(x.role, str) else x.role.value, x.formula) for x in corpus)
    back = parse_tstp(text)
    assert [r.name for r in back] == [x.name for x in corpus]
    assert all(alpha_equal(x.formula, r.formula) for x, r in zip(corpus, back))


@pytest.mark.acceptance(6, "round-trips")
def test_graph_document_roundtrip(field_run, membered_run, random_runs):
    starts, applied = random_runs
    graphs = list(field_run[0]) + list(membered_run[:2]) + starts + [a.after for a in applied]
    failures = []
    for s in graphs:
        back = import_document(json.loads(json.dumps(export_document(s))))
        if not isomorphic(s.graph, back.graph) or dict(back.loc.items()) != dict(s.loc.items()):
            failures.append(s)
    assert failures == []


# ------------------------------------------------------------ criterion 7

@pytest.mark.acceptance(7, "budget behavior")
def test_step_limit_zero():
    s = load_structuring(MEMBERED)
    out, outcome, trace = run_tactic(OVERALL, s, Budget(steps=0))
    assert out is s and trace == [] and outcome is Outcome.TIMED_OUT
    assert isomorphic(out.graph, load_structuring(MEMBERED).graph)


@pytest.mark.acceptance(7, "budget behavior")
def test_one_millisecond_budget():
    s = load_structuring(MEMBERED)
    out, report = auto_structure(s, Budget(seconds=0.001), article="membered.p")
    assert check_structuring(out) == []
    assert report.timed_out
    assert report.row()[6] == "yes"

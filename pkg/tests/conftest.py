import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from theoryforge import rules  # noqa: E402
from theoryforge.devgraph import check_structuring  # noqa: E402
from theoryforge.fol import FN, NamedSentence, Role, SignatureMorphism, SymbolDecl  # noqa: E402
from theoryforge.tactics import tactic_cleanup  # noqa: E402
from theoryforge.tstp import load_structuring, parse_formula  # noqa: E402

DATA = Path(__file__).parent / "data"
FIELD = DATA / "field.p"
MEMBERED = DATA / "membered.p"

OP, E, I = SymbolDecl("op", 2, FN), SymbolDecl("e", 0, FN), SymbolDecl("i", 1, FN)
GROUP_AXIOMS = [
    ("assoc", "![X,Y,Z]: op(X,op(Y,Z)) = op(op(X,Y),Z)"),
    ("comm", "![X,Y]: op(X,Y) = op(Y,X)"),
    ("unit", "![X]: op(X,e) = X"),
    ("inverse", "![X]: op(X,i(X)) = e"),
]
SIGMA_PLUS = SignatureMorphism.from_pairs([(FN, "op", "plus"), (FN, "e", "zero"), (FN, "i", "neg")])
SIGMA_TIMES = SignatureMorphism.from_pairs([(FN, "op", "times"), (FN, "e", "one"), (FN, "i", "inv")])


def named(node):
    return {x.name: x for x in node.sentences}


def field_after_vertical(s):
    """Field with distributivity lifted above the two group theories."""
    n0 = s.graph.nodes["n0"]
    upper = [named(n0)["distrib"]]
    lower = [e for e in n0.local if e not in upper]
    return rules.vertical_split(s, "n0", lower, upper)


def group_nodes(s):
    """The plus and the times node, in that order."""
    ids = [nid for nid, n in s.graph.nodes.items() if n.axioms and "distrib" not in named(n)]
    return sorted(ids, key=lambda nid: 0 if SymbolDecl("plus", 2, FN) in s.graph.nodes[nid].sig else 1)


def field_after_horizontal(s):
    low = next(nid for nid, n in s.graph.nodes.items() if "distrib" not in named(n))
    node = s.graph.nodes[low]
    plus_names = {"plus", "zero", "neg"}
    plus = [e for e in node.local if getattr(e, "name", "").startswith("plus") or getattr(e, "name", "") in plus_names]
    times = [e for e in node.local if e not in plus]
    return rules.horizontal_split(s, low, [plus, times])


def field_candidate(s):
    ax = frozenset(NamedSentence(n, Role.AXIOM, parse_formula(f)) for n, f in GROUP_AXIOMS)
    return rules.FactorizationCandidate(
        tuple(group_nodes(s)), (), frozenset({OP, E, I}), ax, frozenset(), (SIGMA_PLUS, SIGMA_TIMES), ()
    )


def scripted_field(path=FIELD):
    """Vertical split, horizontal split, factorize, cleanup; returns every intermediate structuring."""
    s = load_structuring(path)
    steps = [s]
    s = field_after_vertical(s)
    steps.append(s)
    s = field_after_horizontal(s)
    steps.append(s)
    s = rules.factorize(s, field_candidate(s))
    steps.append(s)
    cleaned = tactic_cleanup(s)
    if cleaned is not None:
        steps.append(cleaned)
    return steps


@pytest.fixture
def field():
    return load_structuring(FIELD)


@pytest.fixture
def membered():
    return load_structuring(MEMBERED)


@pytest.fixture
def field_steps():
    return scripted_field()


def assert_valid(s):
    diags = check_structuring(s)
    assert not diags, [str(d) for d in diags]


# --------------------------------------------------------------- acceptance
# Tests marked ``acceptance(number, title)`` are summarized as one PASS/FAIL
# line per criterion at the end of the run.

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    ok, _ = _ACCEPTANCE.get(number, (True, title))
    if rep.when == "call":
        _ACCEPTANCE[number] = (ok and rep.passed, title)
    elif rep.failed or rep.skipped:
        _ACCEPTANCE[number] = (False, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}")

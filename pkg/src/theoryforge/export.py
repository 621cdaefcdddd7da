"""JSON graph documents and DOT rendering of structurings."""
from __future__ import annotations

import json
from pathlib import Path

from .devgraph import (
    DevelopmentGraph,
    Link,
    LocationMapping,
    Node,
    Reference,
    Structuring,
    SupportMapping,
    provider_sets,
)
from .errors import SchemaError, TheoryError, VersionMismatch
from .fol import FN, PRED, NamedSentence, Role, SignatureMorphism, SymbolDecl
from .tstp import format_formula, parse_formula

FORMAT_VERSION = 1


def _symbol(x: SymbolDecl) -> dict:
    return {"name": x.name, "arity": x.arity, "kind": x.kind}


def _sentence(x: NamedSentence) -> dict:
    return {"name": x.name, "formula": format_formula(x.formula)}


def _sorted_symbols(xs):
    return [_symbol(x) for x in sorted(xs, key=lambda x: (x.name, x.kind, x.arity))]


def _sorted_sentences(xs):
    return [_sentence(x) for x in sorted(xs, key=lambda x: x.name)]


def export_document(s: Structuring) -> dict:
    g = s.graph
    return {
        "format_version": FORMAT_VERSION,
        "nodes": [
            {
                "id": n.id,
                "sig": _sorted_symbols(n.sig),
                "axioms": _sorted_sentences(n.axioms),
                "lemmas": _sorted_sentences(n.lemmas),
            }
            for n in (g.nodes[nid] for nid in g.topological_order)
        ],
        "links": [
            {
                "id": l.id,
                "source": l.source,
                "target": l.target,
                "morphism": [[kind, src, dst] for (src, kind), dst in sorted(l.morphism.items())],
            }
            for l in g.links
        ],
        "support": {name: sorted(refs) for name, refs in s.supp.items()},
        "reference": {
            "sig": _sorted_symbols(s.reference.sig),
            "axioms": _sorted_sentences(s.reference.axioms),
            "lemmas": _sorted_sentences(s.reference.lemmas),
        },
    }


def _read_symbol(d) -> SymbolDecl:
    if d["kind"] not in (FN, PRED):
        raise SchemaError(f"unknown symbol kind {d['kind']!r}")
    return SymbolDecl(str(d["name"]), int(d["arity"]), d["kind"])


def _read_sentences(items, role) -> frozenset:
    return frozenset(NamedSentence(str(d["name"]), role, parse_formula(d["formula"])) for d in items)


def _read_morphism(pairs) -> SignatureMorphism:
    triples = []
    for entry in pairs:
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise SchemaError(f"morphism entry {entry!r} is not a [kind, from, to] triple")
        kind, src, dst = entry
        if kind not in (FN, PRED) or not isinstance(src, str) or not isinstance(dst, str):
            raise SchemaError(f"malformed morphism entry {entry!r}")
        triples.append((kind, src, dst))
    return SignatureMorphism.from_pairs(triples)


def _read_node(d) -> Node:
    return Node(
        str(d["id"]),
        frozenset(_read_symbol(x) for x in d.get("sig", [])),
        _read_sentences(d.get("axioms", []), Role.AXIOM),
        _read_sentences(d.get("lemmas", []), Role.LEMMA),
    )


def import_document(doc: dict) -> Structuring:
    """Rebuild a structuring; the location mapping is recomputed from the graph."""
    if not isinstance(doc, dict):
        raise SchemaError("a graph document is a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"expected format_version {FORMAT_VERSION}, got {version!r}")
    try:
        nodes = [_read_node(d) for d in doc["nodes"]]
        links = [Link(str(d["id"]), str(d["source"]), str(d["target"]), _read_morphism(d.get("morphism", []))) for d in doc["links"]]
        supp = SupportMapping({str(k): frozenset(map(str, v)) for k, v in doc.get("support", {}).items()})
        ref = doc["reference"]
        reference = Reference(
            frozenset(_read_symbol(x) for x in ref["sig"]),
            _read_sentences(ref["axioms"], Role.AXIOM),
            _read_sentences(ref["lemmas"], Role.LEMMA),
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError, TheoryError) as exc:
        raise SchemaError(f"malformed graph document: {exc}") from exc
    graph = DevelopmentGraph(nodes, links)
    loc = {}
    if not graph.find_cycle() and not graph.dangling_links():
        # a provider for every entity; ambiguities are reported by check_structuring
        for e, where in provider_sets(graph).items():
            loc[e] = min(where)
    return Structuring(graph, LocationMapping(loc), supp, reference)


def save_document(s: Structuring, path) -> None:
    Path(path).write_text(json.dumps(export_document(s), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_document(path) -> Structuring:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not JSON: {exc}") from exc
    return import_document(doc)


# ------------------------------------------------------------------- DOT

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def is_factor_node(g: DevelopmentGraph, nid: str) -> bool:
    out = g.outgoing(nid)
    return not g.incoming(nid) and len(out) >= 2 and all(not l.morphism.is_identity for l in out)


def export_dot(s: Structuring, name: str = "structuring") -> str:
    g = s.graph
    lines = [f"digraph {_quote(name)} {{", "  node [shape=box];"]
    for nid in g.topological_order:
        n = g.nodes[nid]
        label = f"{nid}\n{len(n.sig)}/{len(n.axioms)}/{len(n.lemmas)}"
        attrs = [f"label={_quote(label)}"]
        if is_factor_node(g, nid):
            attrs.append('style=filled, fillcolor="orange"')
        lines.append(f"  {_quote(nid)} [{', '.join(attrs)}];")
    for l in g.links:
        attrs = f" [label={_quote(l.morphism.label())}]" if not l.morphism.is_identity else ""
        lines.append(f"  {_quote(l.source)} -> {_quote(l.target)}{attrs};")
    lines.append("}")
    return "\n".join(lines) + "\n"

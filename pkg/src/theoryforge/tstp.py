"""Reading and printing untyped TPTP/TSTP ``fof`` records.

Only the first-order ``fof`` dialect is accepted.  Annotations (the optional
fourth argument of a record) are kept as general terms; the names of the
formulas used in a proof are recovered from them by name lookup.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .devgraph import (
    DevelopmentGraph,
    LocationMapping,
    Node,
    Reference,
    Structuring,
    SupportMapping,
)
from .errors import EmptyTheory, ParseError, SupportCycle, UnknownName, UnsupportedRecord
from .fol import (
    App,
    Atom,
    Bin,
    Const,
    Eq,
    NamedSentence,
    Not,
    Quant,
    Role,
    Var,
    free_variables,
    symbols_of,
)

AXIOM_ROLES = {"axiom", "hypothesis", "definition"}
LEMMA_ROLES = {"theorem", "lemma", "corollary"}
UNSUPPORTED_KINDS = {"cnf", "tff", "thf", "tcf", "tpi", "include"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>%[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<single>'(?:[^'\\]|\\.)*')
  | (?P<distinct>"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?[0-9]+(?:/[0-9]+|\.[0-9]+(?:[eE][+-]?[0-9]+)?|[eE][+-]?[0-9]+)?)
  | (?P<dollar>\$\$?[a-z][A-Za-z0-9_]*)
  | (?P<lower>[a-z][A-Za-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<op><=>|<~>|=>|<=|~\||~&|!=|:=|[()\[\],.:!?~&|=*+^@<>-])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "line_comment", "block_comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return tokens


# ---------------------------------------------------------- annotations

@dataclass(frozen=True)
class GTerm:
    """A TPTP general term: atom, functor application, list, variable, number."""

    kind: str  # "atom" | "fn" | "list" | "var" | "num" | "str" | "colon" | "formula"
    value: object = None
    args: tuple = ()

    def leaves(self) -> list:
        if self.kind in ("atom", "num"):
            return [self.value]
        out = []
        for a in self.args:
            if isinstance(a, GTerm):
                out.extend(a.leaves())
        return out

    def inference_parents(self) -> list:
        """Names listed as parents of ``inference(rule, info, [parents])`` terms."""
        if self.kind == "fn" and self.value == "inference" and len(self.args) == 3 and self.args[2].kind == "list":
            out = []
            for p in self.args[2].args:
                if p.kind == "colon":
                    p = p.args[0]
                if p.kind in ("atom", "num"):
                    out.append(p.value)
                else:
                    out.extend(p.inference_parents())
            return out
        out = []
        for a in self.args:
            if isinstance(a, GTerm):
                out.extend(a.inference_parents())
        return out

    def __str__(self):
        if self.kind in ("atom", "num", "var", "str"):
            return format_name(self.value) if self.kind == "atom" else str(self.value)
        if self.kind == "fn":
            return f"{format_name(self.value)}({','.join(str(a) for a in self.args)})"
        if self.kind == "list":
            return "[" + ",".join(str(a) for a in self.args) + "]"
        if self.kind == "colon":
            return f"{self.args[0]}:{self.args[1]}"
        return f"$fof({format_formula(self.value)})"


@dataclass(frozen=True)
class TstpRecord:
    name: str
    role: str
    formula: object
    annotations: Optional[GTerm] = None
    line: int = 0

    def support_names(self) -> list:
        return self.annotations.leaves() if self.annotations is not None else []


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, tokens, skip_unsupported=False):
        self.toks = tokens
        self.i = 0
        self.skip_unsupported = skip_unsupported
        self.skipped: list = []

    def peek(self, k=0) -> Optional[Token]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def fail(self, expected):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else Token("eof", "", 1, 1)
            raise ParseError(last.line, last.col + len(last.text), expected, "end of input")
        raise ParseError(t.line, t.col, expected, t.text)

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            self.fail("more input")
        self.i += 1
        return t

    def accept(self, text) -> bool:
        t = self.peek()
        if t is not None and t.text == text and t.kind in ("op", "lower"):
            self.i += 1
            return True
        return False

    def expect(self, text) -> Token:
        t = self.peek()
        if t is None or t.text != text:
            self.fail(repr(text))
        self.i += 1
        return t

    # file level
    def records(self) -> list:
        out = []
        names = set()
        while self.peek() is not None:
            head = self.next()
            if head.kind != "lower":
                raise ParseError(head.line, head.col, "a record keyword", head.text)
            if head.text in UNSUPPORTED_KINDS:
                if not self.skip_unsupported:
                    raise UnsupportedRecord(head.text, head.line)
                self._skip_record()
                self.skipped.append((head.text, head.line))
                continue
            if head.text != "fof":
                raise ParseError(head.line, head.col, "fof", head.text)
            rec = self.fof(head)
            if rec.name in names:
                raise ParseError(head.line, head.col, "a unique record name", rec.name)
            names.add(rec.name)
            out.append(rec)
        return out

    def _skip_record(self):
        depth = 0
        while True:
            t = self.next()
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
            elif t.text == "." and depth == 0:
                return

    def fof(self, head) -> TstpRecord:
        self.expect("(")
        name = self.name()
        self.expect(",")
        role_tok = self.next()
        if role_tok.kind != "lower":
            raise ParseError(role_tok.line, role_tok.col, "a formula role", role_tok.text)
        self.expect(",")
        start = self.peek()
        formula = self.formula()
        free = free_variables(formula)
        if free:
            raise ParseError(start.line, start.col, "a closed formula", ",".join(sorted(free)))
        annotations = None
        if self.accept(","):
            annotations = self.general_term()
            if self.accept(","):
                self.general_term()  # useful info, ignored
        self.expect(")")
        self.expect(".")
        return TstpRecord(name, role_tok.text, formula, annotations, head.line)

    def name(self) -> str:
        t = self.next()
        if t.kind == "lower":
            return t.text
        if t.kind == "single":
            return _unquote(t.text)
        if t.kind == "number" and t.text.isdigit():
            return t.text
        raise ParseError(t.line, t.col, "a name", t.text)

    # formulas
    def formula(self):
        left = self.unitary()
        t = self.peek()
        if t is None or t.kind != "op":
            return left
        if t.text in ("&", "|"):
            op = t.text
            while self.accept(op):
                left = Bin(op, left, self.unitary())
            nxt = self.peek()
            if nxt is not None and nxt.kind == "op" and nxt.text in ("&", "|", "=>", "<=>", "<=", "<~>", "~|", "~&"):
                self.fail("parentheses around mixed connectives")
            return left
        if t.text in ("=>", "<=>", "<=", "<~>", "~|", "~&"):
            self.i += 1
            return Bin(t.text, left, self.unitary())
        return left

    def unitary(self):
        t = self.peek()
        if t is None:
            self.fail("a formula")
        if t.text in ("!", "?") and t.kind == "op":
            self.i += 1
            self.expect("[")
            variables = [self.variable()]
            while self.accept(","):
                variables.append(self.variable())
            self.expect("]")
            self.expect(":")
            return Quant(t.text, tuple(variables), self.unitary())
        if t.text == "~" and t.kind == "op":
            self.i += 1
            return Not(self.unitary())
        if t.text == "(" and t.kind == "op":
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        return self.atomic()

    def variable(self) -> str:
        t = self.next()
        if t.kind != "upper":
            raise ParseError(t.line, t.col, "a variable", t.text)
        return t.text

    def atomic(self):
        t = self.peek()
        if t.kind == "dollar" and t.text in ("$true", "$false"):
            self.i += 1
            return Const(t.text == "$true")
        left = self.term()
        if self.accept("="):
            return Eq(left, self.term())
        if self.accept("!="):
            return Not(Eq(left, self.term()))
        if isinstance(left, Var):
            self.fail("'=' after a variable")
        return Atom(left.symbol, left.args)

    def term(self):
        t = self.next()
        if t.kind == "upper":
            return Var(t.text)
        if t.kind in ("lower", "single", "dollar"):
            name = _unquote(t.text) if t.kind == "single" else t.text
            args = ()
            if self.accept("("):
                items = [self.term()]
                while self.accept(","):
                    items.append(self.term())
                self.expect(")")
                args = tuple(items)
            return App(name, args)
        if t.kind in ("number", "distinct"):
            return App(t.text, ())
        raise ParseError(t.line, t.col, "a term", t.text)

    # annotations
    def general_term(self) -> GTerm:
        first = self.general_data()
        if self.accept(":"):
            return GTerm("colon", None, (first, self.general_term()))
        return first

    def general_data(self) -> GTerm:
        t = self.peek()
        if t is None:
            self.fail("an annotation term")
        if t.text == "[":
            self.i += 1
            items = []
            if not self.accept("]"):
                items.append(self.general_term())
                while self.accept(","):
                    items.append(self.general_term())
                self.expect("]")
            return GTerm("list", None, tuple(items))
        self.i += 1
        if t.kind == "dollar" and t.text in ("$fof", "$cnf", "$fot") and self.accept("("):
            f = self.formula() if t.text != "$fot" else self.term()
            self.expect(")")
            return GTerm("formula", f)
        if t.kind in ("lower", "single", "dollar"):
            name = _unquote(t.text) if t.kind == "single" else t.text
            if self.accept("("):
                items = [self.general_term()]
                while self.accept(","):
                    items.append(self.general_term())
                self.expect(")")
                return GTerm("fn", name, tuple(items))
            return GTerm("atom", name)
        if t.kind == "upper":
            return GTerm("var", t.text)
        if t.kind == "number":
            return GTerm("num", t.text)
        if t.kind == "distinct":
            return GTerm("str", t.text)
        raise ParseError(t.line, t.col, "an annotation term", t.text)


def _unquote(text: str) -> str:
    inner = text[1:-1]
    return re.sub(r"\\(.)", r"\1", inner)


def parse_tstp(text: str, *, skip_unsupported: bool = False) -> list:
    """Parse every ``fof`` record of a TSTP text."""
    return _Parser(tokenize(text), skip_unsupported).records()


def parse_formula(text: str):
    p = _Parser(tokenize(text))
    f = p.formula()
    if p.peek() is not None:
        p.fail("end of formula")
    return f


# --------------------------------------------------------------- printer

_LOWER = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_NUMERIC = re.compile(r"[+-]?[0-9]")


def format_name(name: str) -> str:
    if _LOWER.match(name) or name.startswith("$") or name.startswith('"') or _NUMERIC.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return format_name(t.symbol)
    return f"{format_name(t.symbol)}({','.join(format_term(a) for a in t.args)})"


def format_formula(f) -> str:
    if isinstance(f, Atom):
        return format_term(App(f.symbol, f.args))
    if isinstance(f, Eq):
        return f"{format_term(f.left)} = {format_term(f.right)}"
    if isinstance(f, Const):
        return "$true" if f.value else "$false"
    if isinstance(f, Not):
        return f"~ ({format_formula(f.body)})"
    if isinstance(f, Bin):
        return f"({format_formula(f.left)} {f.op} {format_formula(f.right)})"
    return f"{f.quantifier} [{','.join(f.variables)}] : ({format_formula(f.body)})"


def format_record(name: str, role: str, formula, annotations=None) -> str:
    tail = f", {annotations}" if annotations is not None else ""
    return f"fof({format_name(name)}, {role}, {format_formula(formula)}{tail})."


# ------------------------------------------------------------- ingestion

def sentence_role(record: TstpRecord) -> Role:
    if record.role in AXIOM_ROLES:
        return Role.AXIOM
    if record.role in LEMMA_ROLES:
        return Role.LEMMA
    if record.role == "plain" and record.annotations is not None and record.annotations.kind == "fn" \
            and record.annotations.value == "inference":
        return Role.LEMMA
    raise UnsupportedRecord(f"role {record.role}", record.line)


def extract_support(records: list) -> SupportMapping:
    """Support of every lemma: the record names occurring in its annotation."""
    names = {r.name for r in records}
    mapping = {}
    for r in records:
        if sentence_role(r) is not Role.LEMMA:
            continue
        refs = set()
        if r.annotations is not None:
            for parent in r.annotations.inference_parents():
                if parent not in names:
                    raise UnknownName(r.name, parent)
            refs = {leaf for leaf in r.annotations.leaves() if leaf in names}
        refs.discard(r.name)
        mapping[r.name] = frozenset(refs)
    supp = SupportMapping(mapping)
    cycle = supp.find_cycle()
    if cycle:
        raise SupportCycle(cycle)
    return supp


def infer_signature(records: list) -> frozenset:
    sentences = [NamedSentence(r.name, sentence_role(r), r.formula) for r in records]
    return symbols_of(sentences)


def to_sentences(records: list) -> list:
    return [NamedSentence(r.name, sentence_role(r), r.formula) for r in records]


def initial_structuring(records: list) -> Structuring:
    """The unstructured single-node structuring of a flat theory."""
    if not records:
        raise EmptyTheory("a theory without formulas has no structuring")
    sentences = to_sentences(records)
    sig = symbols_of(sentences)
    supp = extract_support(records)
    # alpha-equal duplicates collapse into one entity; keep the first name
    canon_name = {}
    first = {}
    for s in sentences:
        canon_name[s.name] = first.setdefault(s, s.name)
    if len(first) != len(sentences):
        merged: dict = {}
        for lemma, refs in supp.items():
            key = canon_name[lemma]
            target = {canon_name[r] for r in refs} - {key}
            merged[key] = merged.get(key, frozenset()) | frozenset(target)
        supp = SupportMapping(merged)
        cycle = supp.find_cycle()
        if cycle:
            raise SupportCycle(cycle)
    unique = [s for s in sentences if canon_name[s.name] == s.name]
    axioms = frozenset(s for s in unique if s.role is Role.AXIOM)
    lemmas = frozenset(s for s in unique if s.role is Role.LEMMA)
    node = Node("n0", sig, axioms, lemmas)
    graph = DevelopmentGraph([node], [])
    loc = LocationMapping({e: "n0" for e in node.local})
    return Structuring(graph, loc, supp, Reference(sig, axioms, lemmas))


def load_structuring(path) -> Structuring:
    with open(path, encoding="utf-8") as fh:
        return initial_structuring(parse_tstp(fh.read()))

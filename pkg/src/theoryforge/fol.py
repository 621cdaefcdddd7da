"""Untyped first-order formulas, symbols and signature morphisms.

Formulas are immutable trees.  Sentence identity is decided on a canonical
form in which bound variables are replaced by their binding position, so two
sentences that differ only in the names of bound variables compare equal.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Union

from .errors import ArityClash

FN = "fn"
PRED = "pred"

BINARY_OPS = ("&", "|", "=>", "<=>", "<=", "<~>", "~|", "~&")


@dataclass(frozen=True, order=True)
class SymbolDecl:
    name: str
    arity: int
    kind: str = FN

    def __post_init__(self):
        if not self.name:
            raise ValueError("symbol name must be non-empty")
        if self.arity < 0:
            raise ValueError("arity must be non-negative")
        if self.kind not in (FN, PRED):
            raise ValueError(f"unknown symbol kind {self.kind!r}")

    @property
    def label(self) -> str:
        return f"{self.name}/{self.arity}"

    def __str__(self):
        return self.label if self.kind == FN else f"{self.label}:pred"


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple = ()


Term = Union[Var, App]


# ------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Atom:
    symbol: str
    args: tuple = ()


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown connective {self.op!r}")


@dataclass(frozen=True)
class Quant:
    quantifier: str  # "!" or "?"
    variables: tuple
    body: "Formula"

    def __post_init__(self):
        if self.quantifier not in ("!", "?"):
            raise ValueError(f"unknown quantifier {self.quantifier!r}")
        if not self.variables:
            raise ValueError("quantifier without variables")


Formula = Union[Atom, Eq, Const, Not, Bin, Quant]


def _walk_term_symbols(t, acc):
    if isinstance(t, App):
        acc.append((t.symbol, FN, len(t.args)))
        for a in t.args:
            _walk_term_symbols(a, acc)


def _walk_symbols(f, acc):
    if isinstance(f, Atom):
        acc.append((f.symbol, PRED, len(f.args)))
        for a in f.args:
            _walk_term_symbols(a, acc)
    elif isinstance(f, Eq):
        _walk_term_symbols(f.left, acc)
        _walk_term_symbols(f.right, acc)
    elif isinstance(f, Not):
        _walk_symbols(f.body, acc)
    elif isinstance(f, Bin):
        _walk_symbols(f.left, acc)
        _walk_symbols(f.right, acc)
    elif isinstance(f, Quant):
        _walk_symbols(f.body, acc)


def _collect(items: Iterable) -> frozenset:
    arities: dict = {}
    for name, kind, arity in items:
        seen = arities.setdefault((name, kind), arity)
        if seen != arity:
            raise ArityClash(name, seen, arity)
    return frozenset(SymbolDecl(n, a, k) for (n, k), a in arities.items())


def symbols_of(obj) -> frozenset:
    """Non-logical symbols occurring in a formula, sentence, or collection thereof.

    Equality, connectives, quantifiers and variables are not symbols.  Raises
    ArityClash when one symbol occurs with two argument counts.
    """
    acc: list = []
    if isinstance(obj, NamedSentence):
        return obj.symbols
    if isinstance(obj, (Atom, Eq, Const, Not, Bin, Quant)):
        _walk_symbols(obj, acc)
        return _collect(acc)
    for item in obj:
        for s in symbols_of(item):
            acc.append((s.name, s.kind, s.arity))
    return _collect(acc)


def free_variables(f: Formula) -> frozenset:
    out: set = set()

    def term(t, bound):
        if isinstance(t, Var):
            if t.name not in bound:
                out.add(t.name)
        else:
            for a in t.args:
                term(a, bound)

    def form(g, bound):
        if isinstance(g, (Atom,)):
            for a in g.args:
                term(a, bound)
        elif isinstance(g, Eq):
            term(g.left, bound)
            term(g.right, bound)
        elif isinstance(g, Not):
            form(g.body, bound)
        elif isinstance(g, Bin):
            form(g.left, bound)
            form(g.right, bound)
        elif isinstance(g, Quant):
            form(g.body, bound | set(g.variables))

    form(f, frozenset())
    return frozenset(out)


# ------------------------------------------------------ canonical forms

def _canon_term(t, env):
    if isinstance(t, Var):
        idx = env.get(t.name)
        return ("b", idx) if idx is not None else ("v", t.name)
    return ("f", t.symbol, tuple(_canon_term(a, env) for a in t.args))


def _canon(f, env, depth):
    if isinstance(f, Atom):
        return ("p", f.symbol, tuple(_canon_term(a, env) for a in f.args))
    if isinstance(f, Eq):
        return ("=", _canon_term(f.left, env), _canon_term(f.right, env))
    if isinstance(f, Const):
        return ("$true",) if f.value else ("$false",)
    if isinstance(f, Not):
        return ("~", _canon(f.body, env, depth))
    if isinstance(f, Bin):
        return (f.op, _canon(f.left, env, depth), _canon(f.right, env, depth))
    inner = dict(env)
    for i, v in enumerate(f.variables):
        inner[v] = depth + i
    return (f.quantifier, len(f.variables), _canon(f.body, inner, depth + len(f.variables)))


def canonical(f: Formula) -> tuple:
    """De Bruijn-style canonical form: bound variables become binding positions."""
    return _canon(f, {}, 0)


def alpha_equal(f: Formula, g: Formula) -> bool:
    return canonical(f) == canonical(g)


def _skeleton(c):
    tag = c[0]
    if tag in ("f", "p"):
        return (tag, len(c[2]), tuple(_skeleton(a) for a in c[2]))
    if tag == "v":
        return ("v",)
    if tag == "b":
        return c
    if tag in ("!", "?"):
        return (tag, c[1], _skeleton(c[2]))
    return (tag,) + tuple(_skeleton(x) for x in c[1:])


def fingerprint(f) -> tuple:
    """Shape of a formula with all symbol names erased."""
    c = f.key[1] if isinstance(f, NamedSentence) else canonical(f)
    return _skeleton(c)


# -------------------------------------------------------------- roles

class Role(str, enum.Enum):
    AXIOM = "axiom"
    LEMMA = "lemma"


class NamedSentence:
    """A closed formula with a name and a role.

    Identity (equality and hashing) is the pair (role, alpha class of the
    formula).  The name is a label used to resolve support references.
    """

    __slots__ = ("name", "role", "formula", "key", "_hash", "_symbols")

    def __init__(self, name: str, role: Role, formula: Formula):
        if not name:
            raise ValueError("sentence name must be non-empty")
        self.name = name
        self.role = Role(role)
        self.formula = formula
        self.key = (self.role.value, canonical(formula))
        self._hash = hash(self.key)
        self._symbols = None

    @property
    def symbols(self) -> frozenset:
        if self._symbols is None:
            try:
                self._symbols = symbols_of(self.formula)
            except ArityClash as exc:
                raise ArityClash(exc.symbol, *exc.arities, where=self.name) from None
        return self._symbols

    @property
    def is_lemma(self) -> bool:
        return self.role is Role.LEMMA

    def __eq__(self, other):
        return isinstance(other, NamedSentence) and self._hash == other._hash and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"NamedSentence({self.name!r}, {self.role.value})"

    def __str__(self):
        return self.name


# -------------------------------------------------- signature morphisms

class SignatureMorphism:
    """Arity-preserving renaming of symbols; identity outside its mapping.

    The mapping is keyed by ``(name, kind)``; pairs mapping a symbol to itself
    are dropped, so two morphisms are equal iff they rename the same symbols
    the same way.
    """

    __slots__ = ("_map", "_items", "_hash")

    def __init__(self, mapping: Optional[Mapping] = None):
        m = {}
        for key, target in (mapping or {}).items():
            if isinstance(key, SymbolDecl):
                key = (key.name, key.kind)
            name, kind = key
            if kind not in (FN, PRED):
                raise ValueError(f"unknown symbol kind {kind!r}")
            if target != name:
                m[(name, kind)] = target
        self._map = m
        self._items = tuple(sorted(m.items()))
        self._hash = hash(self._items)

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "SignatureMorphism":
        return cls({(src, kind): dst for kind, src, dst in pairs})

    @property
    def is_identity(self) -> bool:
        return not self._map

    def items(self):
        return self._items

    def image_name(self, name: str, kind: str) -> str:
        return self._map.get((name, kind), name)

    def apply_symbol(self, s: SymbolDecl) -> SymbolDecl:
        target = self._map.get((s.name, s.kind))
        return s if target is None else SymbolDecl(target, s.arity, s.kind)

    def fixes(self, symbols: Iterable[SymbolDecl]) -> bool:
        return all((s.name, s.kind) not in self._map for s in symbols)

    def restrict(self, symbols: Iterable[SymbolDecl]) -> "SignatureMorphism":
        keys = {(s.name, s.kind) for s in symbols}
        return SignatureMorphism({k: v for k, v in self._map.items() if k in keys})

    def digest(self) -> str:
        text = ";".join(f"{k}:{n}>{t}" for (n, k), t in self._items)
        return hashlib.sha1(text.encode()).hexdigest()[:8]

    def __eq__(self, other):
        return isinstance(other, SignatureMorphism) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "SignatureMorphism({" + ", ".join(f"{n}->{t}" for (n, _), t in self._items) + "})"

    def label(self, arrow: str = "→") -> str:
        return ",".join(f"{n}{arrow}{t}" for (n, _), t in self._items)


IDENTITY = SignatureMorphism()


def compose(outer: SignatureMorphism, inner: SignatureMorphism) -> SignatureMorphism:
    """The morphism applying ``inner`` first, then ``outer``."""
    m = {}
    for (name, kind), mid in inner.items():
        m[(name, kind)] = outer.image_name(mid, kind)
    for (name, kind), target in outer.items():
        m.setdefault((name, kind), target)
    return SignatureMorphism(m)


def _map_term(sigma, t):
    if isinstance(t, Var):
        return t
    return App(sigma.image_name(t.symbol, FN), tuple(_map_term(sigma, a) for a in t.args))


def _map_formula(sigma, f):
    if isinstance(f, Atom):
        return Atom(sigma.image_name(f.symbol, PRED), tuple(_map_term(sigma, a) for a in f.args))
    if isinstance(f, Eq):
        return Eq(_map_term(sigma, f.left), _map_term(sigma, f.right))
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(_map_formula(sigma, f.body))
    if isinstance(f, Bin):
        return Bin(f.op, _map_formula(sigma, f.left), _map_formula(sigma, f.right))
    return Quant(f.quantifier, f.variables, _map_formula(sigma, f.body))


def _check_images(sigma, symbols):
    seen = {}
    for s in symbols:
        img = (sigma.image_name(s.name, s.kind), s.kind)
        other = seen.setdefault(img, s)
        if other.arity != s.arity:
            raise ArityClash(img[0], other.arity, s.arity, where="morphism image")


def apply_morphism(sigma: SignatureMorphism, f: Formula) -> Formula:
    if sigma.is_identity:
        return f
    _check_images(sigma, symbols_of(f))
    return _map_formula(sigma, f)


_IMAGE_CACHE: dict = {}


def apply_to_sentence(sigma: SignatureMorphism, s: NamedSentence) -> NamedSentence:
    """Image of a named sentence.

    The name is kept when the morphism fixes every symbol of the sentence;
    otherwise it becomes ``name@<digest of the relevant renaming>``.
    """
    if sigma.is_identity or sigma.fixes(s.symbols):
        return s
    key = (sigma, s.name, s.key)
    hit = _IMAGE_CACHE.get(key)
    if hit is not None:
        return hit
    relevant = sigma.restrict(s.symbols)
    _check_images(sigma, s.symbols)
    image = NamedSentence(f"{s.name}@{relevant.digest()}", s.role, _map_formula(sigma, s.formula))
    if len(_IMAGE_CACHE) > 200_000:
        _IMAGE_CACHE.clear()
    _IMAGE_CACHE[key] = image
    return image


def apply_to_entity(sigma: SignatureMorphism, e):
    if isinstance(e, SymbolDecl):
        return sigma.apply_symbol(e)
    return apply_to_sentence(sigma, e)


# ---------------------------------------------------- renaming search

def _unify_symbol(name_s, name_t, kind, fwd, bwd, frozen):
    key = (name_s, kind)
    tkey = (name_t, kind)
    if key in frozen or tkey in frozen:
        return name_s == name_t
    cur = fwd.get(key)
    if cur is not None:
        return cur == name_t
    if bwd.get(tkey, key) != key:
        return False
    fwd[key] = name_t
    bwd[tkey] = key
    return True


def _match(cs, ct, fwd, bwd, frozen) -> bool:
    tag = cs[0]
    if tag != ct[0]:
        return False
    if tag in ("f", "p"):
        if len(cs[2]) != len(ct[2]):
            return False
        kind = FN if tag == "f" else PRED
        if not _unify_symbol(cs[1], ct[1], kind, fwd, bwd, frozen):
            return False
        return all(_match(a, b, fwd, bwd, frozen) for a, b in zip(cs[2], ct[2]))
    if tag in ("b", "v"):
        return cs == ct
    if tag in ("!", "?"):
        return cs[1] == ct[1] and _match(cs[2], ct[2], fwd, bwd, frozen)
    return all(_match(a, b, fwd, bwd, frozen) for a, b in zip(cs[1:], ct[1:]))


@dataclass
class Renaming:
    morphism: SignatureMorphism
    correspondence: dict = field(default_factory=dict)  # source name -> target name
    pairs: list = field(default_factory=list)  # (source sentence, target sentence)


def match_sentences(
    source: list,
    target: list,
    frozen: Iterable[SymbolDecl] = (),
    *,
    total: bool = True,
    constraint: Optional[Callable[[Renaming], bool]] = None,
    seed: Optional[Mapping] = None,
    limit: int = 200_000,
) -> Optional[Renaming]:
    """Find a renaming mapping every source sentence onto a distinct target sentence.

    With ``total`` the correspondence must also cover every target sentence.
    ``seed`` pre-assigns symbol images.  ``constraint`` is checked on each
    complete candidate; rejected candidates are backtracked over.
    """
    if total and len(source) != len(target):
        return None
    if len(source) > len(target):
        return None
    frozen_keys = {(s.name, s.kind) for s in frozen}
    fps_t = [fingerprint(t) for t in target]
    indexed = [(fingerprint(s), i, s) for i, s in enumerate(source)]
    # rare shapes first keeps the branching factor low
    counts: dict = {}
    for fp in fps_t:
        counts[fp] = counts.get(fp, 0) + 1
    for fp, _, _ in indexed:
        if counts.get(fp, 0) == 0:
            return None
    indexed.sort(key=lambda x: (counts[x[0]], x[1]))
    candidates = [
        [j for j, t in enumerate(target) if fps_t[j] == fp and t.role == s.role] for fp, _, s in indexed
    ]
    used = [False] * len(target)
    chosen: list = [None] * len(indexed)
    budget = [limit]

    fwd0: dict = {}
    bwd0: dict = {}
    for key, name in (seed or {}).items():
        if not _unify_symbol(key[0], name, key[1], fwd0, bwd0, frozen_keys):
            return None

    def search(k, fwd, bwd):
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        if k == len(indexed):
            sol = Renaming(SignatureMorphism(fwd))
            for (_, _, s), j in zip(indexed, chosen):
                sol.correspondence[s.name] = target[j].name
                sol.pairs.append((s, target[j]))
            if constraint is None or constraint(sol):
                return sol
            return None
        s = indexed[k][2]
        for j in candidates[k]:
            if used[j]:
                continue
            f2, b2 = dict(fwd), dict(bwd)
            if _match(s.key[1], target[j].key[1], f2, b2, frozen_keys):
                used[j] = True
                chosen[k] = j
                found = search(k + 1, f2, b2)
                if found is not None:
                    return found
                used[j] = False
        return None

    return search(0, fwd0, bwd0)


def find_renaming(source: list, target: list, frozen: Iterable[SymbolDecl] = ()) -> Optional[tuple]:
    """Bijective renaming between two sentence lists, or None.

    Returns ``(morphism, correspondence)``; the morphism is injective on the
    non-frozen symbols and fixes the frozen ones.
    """
    found = match_sentences(list(source), list(target), frozen, total=True)
    if found is None:
        return None
    return found.morphism, found.correspondence

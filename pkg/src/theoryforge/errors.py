"""Exception hierarchy shared by all modules."""


class TheoryError(Exception):
    """Base class for every error raised by theoryforge."""


class ArityClash(TheoryError):
    def __init__(self, symbol, first, second, where=None):
        self.symbol = symbol
        self.arities = (first, second)
        self.where = where
        msg = f"symbol {symbol!r} used with arities {first} and {second}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class UnknownNode(TheoryError):
    pass


class UnknownEntity(TheoryError):
    pass


class MultipleProviders(TheoryError):
    def __init__(self, entity, nodes):
        self.entity = entity
        self.nodes = tuple(nodes)
        super().__init__(f"{entity} is provided by several nodes: {', '.join(self.nodes)}")


class SpuriousNode(TheoryError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node!r} provides no entity")


class PreconditionFailed(TheoryError):
    """A rule was asked to fire where one of its applicability conditions fails."""

    def __init__(self, which, detail=""):
        self.which = which
        self.detail = detail
        super().__init__(f"{which}: {detail}" if detail else which)


class NotASubset(TheoryError):
    pass


class NoSuchPath(TheoryError):
    pass


class NotRemovable(TheoryError):
    def __init__(self, condition, witness=None):
        self.condition = condition
        self.witness = witness
        super().__init__(f"link not removable (condition {condition}): {witness}")


class ParseError(TheoryError):
    def __init__(self, line, col, expected, found=""):
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"line {line}, col {col}: expected {expected}" + (f", found {found!r}" if found else ""))


class UnsupportedRecord(TheoryError):
    def __init__(self, kind, line):
        self.kind = kind
        self.line = line
        super().__init__(f"unsupported record {kind!r} at line {line}")


class UnknownName(TheoryError):
    def __init__(self, lemma, ref):
        self.lemma = lemma
        self.ref = ref
        super().__init__(f"{lemma!r} refers to unknown formula {ref!r}")


class SupportCycle(TheoryError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__("cyclic support: " + " -> ".join(self.names))


class EmptyTheory(TheoryError):
    pass


class VersionMismatch(TheoryError):
    pass


class SchemaError(TheoryError):
    pass

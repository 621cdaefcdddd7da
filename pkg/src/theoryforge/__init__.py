"""Automatic structuring of flat first-order theories into development graphs."""
from .devgraph import (
    DevelopmentGraph,
    Link,
    LocationMapping,
    Node,
    Reference,
    Structuring,
    SupportMapping,
    check_structuring,
    compute_location,
    isomorphic,
)
from .export import export_document, export_dot, import_document
from .report import Report, auto_structure, reduction_metric
from .tactics import INITTAC, OVERALL, Budget, Outcome, parse_tactic, run_tactic
from .tstp import initial_structuring, load_structuring, parse_tstp

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "DevelopmentGraph",
    "INITTAC",
    "Link",
    "LocationMapping",
    "Node",
    "OVERALL",
    "Outcome",
    "Reference",
    "Report",
    "Structuring",
    "SupportMapping",
    "auto_structure",
    "check_structuring",
    "compute_location",
    "export_document",
    "export_dot",
    "import_document",
    "initial_structuring",
    "isomorphic",
    "load_structuring",
    "parse_tactic",
    "parse_tstp",
    "reduction_metric",
    "run_tactic",
]

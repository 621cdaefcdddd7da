"""Reduction metric, per-file reports and the automatic procedure."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .devgraph import Structuring, check_structuring
from .errors import EmptyTheory
from .tactics import OVERALL, Budget, Outcome, TacticExpr, run_tactic

CSV_COLUMNS = ("article", "ax_i", "ax_f", "th_i", "th_f", "reduction", "timeout", "wall_time")


def reduction_metric(ax_i: int, th_i: int, ax_f: int, th_f: int) -> int:
    """Percentage of axioms and theorems removed, rounded up."""
    total = ax_i + th_i
    if total <= 0:
        raise EmptyTheory("no axioms or theorems to reduce")
    removed = total - (ax_f + th_f)
    return -(-100 * removed // total)


@dataclass
class Report:
    article: str
    axioms_initial: int
    axioms_final: int
    theorems_initial: int
    theorems_final: int
    reduction_percent: int
    timed_out: bool
    wall_time: float
    outcome: Optional[Outcome] = None
    trace: list = field(default_factory=list)
    status: str = "ok"

    def row(self) -> tuple:
        return (
            self.article,
            self.axioms_initial,
            self.axioms_final,
            self.theorems_initial,
            self.theorems_final,
            f"{self.reduction_percent}%",
            "yes" if self.timed_out else "no",
            f"{self.wall_time:.3f}",
        )


def auto_structure(
    s: Structuring,
    b: Optional[Budget] = None,
    *,
    tactic: TacticExpr = OVERALL,
    article: str = "",
    check: bool = False,
) -> tuple:
    """Run the overall tactic (or ``tactic``) and report the reduction."""
    started = time.monotonic()
    ax_i, th_i = s.counts()
    result, outcome, trace = run_tactic(tactic, s, b or Budget(), check=check)
    ax_f, th_f = result.counts()
    assert ax_f <= ax_i, "axiom count grew"
    if check:
        diags = check_structuring(result)
        assert not diags, str(diags[0])
    report = Report(
        article=article,
        axioms_initial=ax_i,
        axioms_final=ax_f,
        theorems_initial=th_i,
        theorems_final=th_f,
        reduction_percent=reduction_metric(ax_i, th_i, ax_f, th_f),
        timed_out=outcome is Outcome.TIMED_OUT,
        wall_time=time.monotonic() - started,
        outcome=outcome,
        trace=trace,
    )
    return result, report

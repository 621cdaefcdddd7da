"""Command line front end: ``theoryforge structure`` and ``theoryforge check``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .devgraph import check_structuring
from .errors import TheoryError
from .export import export_dot, load_document, save_document
from .report import CSV_COLUMNS, Report, auto_structure, reduction_metric
from .tactics import OVERALL, Budget, parse_tactic
from .tstp import load_structuring

__all__ = ["main", "Report", "reduction_metric", "process_file", "format_table", "format_csv"]

DEFAULT_TIMEOUT = 300.0
TABLE_COLUMNS = CSV_COLUMNS + ("status",)


def default_timeout() -> float:
    raw = os.environ.get("THEORYFORGE_TIMEOUT")
    if not raw:
        return DEFAULT_TIMEOUT
    try:
        value = float(raw)
    except ValueError:
        raise SystemExit(f"THEORYFORGE_TIMEOUT must be a number of seconds, got {raw!r}")
    if value <= 0:
        raise SystemExit("THEORYFORGE_TIMEOUT must be positive")
    return value


@dataclass
class Options:
    timeout: float = DEFAULT_TIMEOUT
    steps: Optional[int] = None
    tactic: Optional[str] = None
    export_dot: Optional[str] = None
    export_json: Optional[str] = None


def process_file(path: str, opts: Options) -> Report:
    """Parse, structure and export one theory file; never raises on bad input."""
    article = Path(path).name
    try:
        s = load_structuring(path)
        tactic = parse_tactic(opts.tactic) if opts.tactic else OVERALL
        result, report = auto_structure(s, Budget(opts.timeout, opts.steps), tactic=tactic, article=article)
    except (TheoryError, OSError, UnicodeDecodeError) as exc:
        return Report(article, 0, 0, 0, 0, 0, False, 0.0, status=f"error: {exc}")
    stem = Path(path).stem
    if opts.export_dot:
        Path(opts.export_dot).mkdir(parents=True, exist_ok=True)
        (Path(opts.export_dot) / f"{stem}.dot").write_text(export_dot(result, stem), encoding="utf-8")
    if opts.export_json:
        Path(opts.export_json).mkdir(parents=True, exist_ok=True)
        save_document(result, Path(opts.export_json) / f"{stem}.json")
    report.status = report.outcome.value if report.outcome else "ok"
    report.trace = []  # keep reports small and picklable
    return report


def _cells(r: Report) -> tuple:
    if r.status.startswith("error"):
        return (r.article, "", "", "", "", "", "", "", r.status)
    return r.row() + (r.status,)


def format_table(reports: list) -> str:
    rows = [TABLE_COLUMNS] + [tuple(map(str, _cells(r))) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_csv(reports: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for r in reports:
        writer.writerow(_cells(r))
    return buf.getvalue()


def cmd_structure(args) -> int:
    opts = Options(args.timeout, args.steps, args.tactic, args.export_dot, args.export_json)
    if args.tactic:
        try:
            parse_tactic(args.tactic)
        except (TheoryError, ValueError) as exc:
            print(f"invalid tactic: {exc}", file=sys.stderr)
            return 2
    if args.jobs > 1 and len(args.paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(process_file, args.paths, [opts] * len(args.paths)))
    else:
        reports = [process_file(p, opts) for p in args.paths]
    sys.stdout.write(format_table(reports))
    if args.report:
        text = format_csv(reports)
        if args.report == "-":
            sys.stdout.write(text)
        else:
            Path(args.report).write_text(text, encoding="utf-8")
    return 1 if any(r.status.startswith("error") for r in reports) else 0


def cmd_check(args) -> int:
    path = args.path
    try:
        if path.endswith(".json"):
            s = load_document(path)
        else:
            s = load_structuring(path)
    except (TheoryError, OSError, UnicodeDecodeError) as exc:
        print(f"{path}: {type(exc).__name__}: {exc}")
        return 1
    diags = check_structuring(s)
    for d in diags:
        print(f"{path}: {d}")
    if not diags:
        ax, lem = s.counts()
        print(f"{path}: ok ({len(s.graph.nodes)} nodes, {len(s.graph.links)} links, {ax} axioms, {lem} lemmas)")
    return 1 if diags else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theoryforge", description="Structure flat first-order theories.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log rejected rule applications")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("structure", help="structure TSTP files and report the reduction")
    st.add_argument("paths", nargs="+")
    st.add_argument("--timeout", type=float, default=None, help="seconds per file (default 300 or $THEORYFORGE_TIMEOUT)")
    st.add_argument("--steps", type=int, default=None, help="maximal number of basic tactic applications")
    st.add_argument("--tactic", help="tactic expression to run instead of the automatic procedure")
    st.add_argument("--export-dot", metavar="DIR")
    st.add_argument("--export-json", metavar="DIR")
    st.add_argument("--report", metavar="FILE", help="write the CSV report here ('-' for stdout)")
    st.add_argument("--jobs", type=int, default=1, help="files processed in parallel")
    st.set_defaults(func=cmd_structure)

    ck = sub.add_parser("check", help="validate a graph document (.json) or a TSTP file")
    ck.add_argument("path")
    ck.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "timeout", None) is None and args.command == "structure":
        args.timeout = default_timeout()
    if args.command == "structure" and args.timeout <= 0:
        print("--timeout must be positive", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

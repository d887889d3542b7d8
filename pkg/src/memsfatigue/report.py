"""Rendering of a :class:`ComparisonReport` as text, JSON and plot-ready tables."""

from __future__ import annotations

import json
import os
from enum import Enum
from pathlib import Path

from .dut import as_axis
from .records import UNITS, Kind
from .stats import ComparisonBlock, ComparisonReport, StatsSummary, Verdict

REPORT_SCHEMA_VERSION = 1

#: Kinds that get one table file per axis (the output and resonance figures).
TABLE_KINDS = (Kind.OUTPUT_SIGNAL, Kind.RESONANCE)


class ReportFormat(str, Enum):
    TEXT = "human-text"
    STRUCTURED = "structured"
    TABLES = "table-data"


def _fmt(x, spec=".6g"):
    return "n/a" if x is None else format(x, spec)


def _text(report: ComparisonReport) -> str:
    lines = ["Before/after comparison", "======================="]
    for k, v in sorted(report.metadata.items()):
        lines.append(f"{k}: {v}")
    if report.metadata:
        lines.append("")
    head = f"{'axis':<4} {'kind':<13} {'n':>3} {'before mean':>13} {'disp%':>7} {'after mean':>13} {'disp%':>7} {'delta':>11} {'limit':>10}  verdict"
    lines += [head, "-" * len(head)]
    for b in report.blocks:
        unit = UNITS[b.kind]
        lines.append(
            f"{b.axis.value if b.axis else '-':<4} {b.kind.value:<13} {b.before.n:>3} "
            f"{_fmt(b.before.mean):>11} {unit:<2} {_fmt(b.before.dispersion_percent, '.3f'):>7} "
            f"{_fmt(b.after.mean):>11} {unit:<2} {_fmt(b.after.dispersion_percent, '.3f'):>7} "
            f"{b.mean_delta:>+11.3g} {b.threshold:>10.3g}  {b.verdict.value}"
        )
    if report.homogeneity:
        lines += ["", "Resonance homogeneity (dispersion relative to the most homogeneous axis):"]
        for stage, ratios in report.homogeneity.items():
            parts = "  ".join(f"{a.value} {_fmt(r, '.2f')}" for a, r in ratios.items())
            lines.append(f"  {stage}: {parts}")
    n_changed = sum(b.verdict is Verdict.CHANGED for b in report.blocks)
    lines += ["", "overall: " + ("unchanged" if not n_changed else f"changed ({n_changed} of {len(report.blocks)})")]
    return "\n".join(lines) + "\n"


def _summary_dict(s: StatsSummary) -> dict:
    return dict(vars(s))


def _block_dict(b: ComparisonBlock) -> dict:
    return {
        "axis": b.axis.value if b.axis else None,
        "kind": b.kind.value,
        "unit": UNITS[b.kind],
        "before": _summary_dict(b.before),
        "after": _summary_dict(b.after),
        "mean_delta": b.mean_delta,
        "threshold": b.threshold,
        "relative": b.relative,
        "verdict": b.verdict.value,
        "before_values": [list(p) for p in b.before_values],
        "after_values": [list(p) for p in b.after_values],
    }


def _structured(report: ComparisonReport) -> str:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "metadata": report.metadata,
        "blocks": [_block_dict(b) for b in report.blocks],
        "homogeneity": {
            stage: {a.value: r for a, r in ratios.items()} for stage, ratios in report.homogeneity.items()
        },
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def parse_report(text: str) -> ComparisonReport:
    """Inverse of the structured format."""
    doc = json.loads(text)
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {doc.get('schema_version')!r}")
    blocks = tuple(
        ComparisonBlock(
            axis=None if d["axis"] is None else as_axis(d["axis"]),
            kind=Kind(d["kind"]),
            before=StatsSummary(**d["before"]),
            after=StatsSummary(**d["after"]),
            mean_delta=d["mean_delta"],
            threshold=d["threshold"],
            relative=d["relative"],
            verdict=Verdict(d["verdict"]),
            before_values=tuple((s, v) for s, v in d["before_values"]),
            after_values=tuple((s, v) for s, v in d["after_values"]),
        )
        for d in doc["blocks"]
    )
    homogeneity = {
        stage: {as_axis(a): r for a, r in ratios.items()} for stage, ratios in doc["homogeneity"].items()
    }
    return ComparisonReport(blocks, homogeneity, doc["metadata"])


def _table(b: ComparisonBlock) -> str:
    # two gnuplot-style datasets (before, after), separated by two blank lines
    out = []
    for stage, values in (("before", b.before_values), ("after", b.after_values)):
        if out:
            out += ["", ""]
        out.append(f"# axis={b.axis.value} kind={b.kind.value} phase={stage} unit={UNITS[b.kind]}")
        out.append("# specimen_index value")
        out += [f"{i} {v!r}" for i, (_, v) in enumerate(values, start=1)]
    return "\n".join(out) + "\n"


def table_filename(b: ComparisonBlock) -> str:
    return f"{b.kind.value}_{b.axis.value}.dat"


def emit_report(report: ComparisonReport, fmt: ReportFormat | str = ReportFormat.TEXT):
    """Render ``report``; table-data returns ``{filename: contents}``, the rest a string."""
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.TEXT:
        return _text(report)
    if fmt is ReportFormat.STRUCTURED:
        return _structured(report)
    return {table_filename(b): _table(b) for b in report.blocks if b.kind in TABLE_KINDS and b.axis is not None}


def write_report(report: ComparisonReport, out_dir: str | os.PathLike) -> list[Path]:
    """Write report.txt, report.json and tables/*.dat under ``out_dir``."""
    out = Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    paths = [out / "report.txt", out / "report.json"]
    paths[0].write_text(emit_report(report, ReportFormat.TEXT), encoding="utf-8")
    paths[1].write_text(emit_report(report, ReportFormat.STRUCTURED), encoding="utf-8")
    for name, body in emit_report(report, ReportFormat.TABLES).items():
        p = out / "tables" / name
        p.write_text(body, encoding="utf-8")
        paths.append(p)
    return paths

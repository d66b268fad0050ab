"""
Decomposition tables
Rows mirror the "sources of predictive variation" table: one per factor,
then Predictions, then Total.
File location: ./panova/decompose/report.py
"""

# imports
from pathlib import Path
from typing import Any, Dict, List

from panova.core.tree import total_label
from panova.decompose.distribution import box_summary
from panova.infrastructure.io import table_frame, write_csv, write_json
from panova.types import DecompositionReport


def report_rows(report: DecompositionReport) -> List[Dict[str, Any]]:
    rows = [
        {"source": s, "interpretation": i, "variance": v, "proportion": p}
        for s, i, v, p in zip(report.sources, report.interpretations, report.terms, report.proportions)
    ]
    rows.append(
        {
            "source": "Total",
            "interpretation": total_label(report.weight_source),
            "variance": report.total,
            "proportion": 1.0 if report.total > 0.0 else 0.0,
        }
    )
    return rows


def report_to_json(report: DecompositionReport) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "factors": list(report.factors),
        "weight_source": report.weight_source,
        "rows": report_rows(report),
        "total": report.total,
        "term_sum": report.term_sum,
    }
    if report.box is not None:
        doc["box"] = [None if b is None else box_summary(b) for b in report.box]
    if report.residual_moments is not None:
        doc["residual_moments"] = report.residual_moments
    return doc


def write_report(report: DecompositionReport, out_dir: str | Path, stem: str = "decomposition") -> Dict[str, Path]:
    """CSV table plus JSON document"""
    out_dir = Path(out_dir)
    frame = table_frame(report_rows(report), rounded={"variance": 4, "proportion": 4})
    return {
        "csv": write_csv(out_dir / f"{stem}.csv", frame),
        "json": write_json(out_dir / f"{stem}.json", report_to_json(report)),
    }

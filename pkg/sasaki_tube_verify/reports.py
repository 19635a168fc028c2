#!/usr/bin/python
"""Report export: JSON documents, CSV tables and console summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from agent_utilities.base_utilities import get_logger

from sasaki_tube_verify.verification_models import GHClassReport, RunReport

logger = get_logger(__name__)

CSV_COLUMNS = (
    "check",
    "anchor",
    "region",
    "t",
    "value",
    "expected",
    "residual",
    "tolerance",
    "passed",
    "binding",
)


def _cell(value) -> str | float | bool:
    return "" if value is None else value


def write_csv(report: RunReport, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for record in report.records:
            writer.writerow(
                {
                    "check": record.name,
                    "anchor": record.anchor,
                    "region": _cell(record.region),
                    "t": _cell(record.t),
                    "value": _cell(record.value),
                    "expected": _cell(record.expected),
                    "residual": _cell(record.residual),
                    "tolerance": _cell(record.tolerance),
                    "passed": record.passed,
                    "binding": record.binding,
                }
            )


def export_table(report: RunReport, path: str | Path, format: str = "json") -> Path:
    """
    Write a run report as a JSON document or a flat CSV table.

    :param report: The run to export.
    :type report: RunReport
    :param path: Destination file; parent directories are created.
    :type path: str | Path
    :param format: ``json`` or ``csv``.
    :type format: str
    :return: The written path.
    :rtype: Path
    :raises ValueError: If ``format`` is not supported.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        write_csv(report, path)
    elif format == "json":
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    else:
        raise ValueError(f"Unsupported report format {format!r}; use 'json' or 'csv'")
    logger.info("Wrote %d records to %s", len(report.records), path)
    return path


def export_classification(report: GHClassReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_json_document(), indent=2), encoding="utf-8")
    return path


def summary_lines(report: RunReport) -> list[str]:
    """One line per binding failure, then a verdict line."""
    lines = [
        f"FAIL {r.name}: residual={r.residual} tolerance={r.tolerance}"
        + (f" value={r.value}" if r.value is not None and r.residual is None else "")
        for r in report.failures()
    ]
    binding = sum(1 for r in report.records if r.binding)
    verdict = "PASS" if report.passed else "FAIL"
    lines.append(
        f"{verdict} {report.suite} on {report.manifold}: {binding} binding checks, "
        f"{len(report.failures())} failed, {report.wall_time:.1f}s"
    )
    return lines


def classification_table(report: GHClassReport) -> list[str]:
    width = max(len(label) for label in report.classes)
    lines = [
        f"{label.ljust(width)}  {'yes' if entry.member else 'no ':3}  {entry.residual:.3e}"
        for label, entry in report.classes.items()
    ]
    if not report.valid_dimension:
        lines.append(f"note: dimension {report.dimension} is below the table's range")
    if not report.lattice_consistent:
        lines.append("note: memberships are not lattice consistent")
    return lines

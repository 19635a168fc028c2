import csv
import json

import pytest

from sasaki_tube_verify.reports import (
    CSV_COLUMNS,
    classification_table,
    export_classification,
    export_table,
    summary_lines,
)
from sasaki_tube_verify.verification_models import (
    CheckRecord,
    GHClassEntry,
    GHClassReport,
    RunReport,
    SuiteConfig,
)


def _report(records, passed=True):
    return RunReport(
        suite="deformation",
        manifold="sphere_fermi",
        records=records,
        wall_time=1.25,
        engine_version="0.1.0",
        config=SuiteConfig(manifold="sphere_fermi", suite="deformation"),
        passed=passed,
    )


RECORDS = [
    CheckRecord(
        name="deformed metric g[0][0]",
        anchor="value at the retracted point",
        residual=0.0,
        tolerance=1e-6,
        passed=True,
        region="annulus",
        t=0.3,
        value=0.96,
        expected=0.96,
    ),
    CheckRecord(name="adapted chart", residual=0.15, tolerance=1e-5, passed=False),
    CheckRecord(name="observation", passed=True, binding=False, value=1.0),
]


def test_csv_table(tmp_path):
    path = export_table(_report(RECORDS, passed=False), tmp_path / "out" / "run.csv", "csv")
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 3
    assert rows[0]["region"] == "annulus"
    assert float(rows[0]["t"]) == 0.3
    assert rows[1]["region"] == ""
    assert rows[1]["passed"] == "False"
    assert rows[2]["binding"] == "False"


def test_empty_csv_has_a_header(tmp_path):
    path = export_table(_report([]), tmp_path / "empty.csv", "csv")
    assert path.read_text(encoding="utf-8").strip() == ",".join(CSV_COLUMNS)


def test_json_document_reloads(tmp_path):
    report = _report(RECORDS, passed=False)
    path = export_table(report, tmp_path / "run.json")
    assert RunReport.model_validate_json(path.read_text(encoding="utf-8")).model_dump() == (
        report.model_dump()
    )


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export_table(_report([]), tmp_path / "run.xml", "xml")


def test_summary_lists_binding_failures_only():
    lines = summary_lines(_report(RECORDS, passed=False))
    assert lines[0] == "FAIL adapted chart: residual=0.15 tolerance=1e-05"
    assert lines[-1] == "FAIL deformation on sphere_fermi: 2 binding checks, 1 failed, 1.2s"
    assert len(lines) == 2


def test_classification_outputs(tmp_path):
    report = GHClassReport(
        manifold="euclidean2",
        dimension=2,
        table_n=1.0,
        valid_dimension=False,
        tolerance=1e-6,
        seed=0,
        points=2,
        vectors=2,
        classes={
            "K": GHClassEntry(member=True, residual=0.0, samples=4),
            "U1+U3": GHClassEntry(member=True, residual=0.0, samples=4),
        },
    )
    lines = classification_table(report)
    assert lines[0].startswith("K      yes")
    assert lines[-1] == "note: dimension 2 is below the table's range"
    path = export_classification(report, tmp_path / "classes.json")
    assert json.loads(path.read_text(encoding="utf-8"))["valid_dimension"] is False

import json
import math
from pathlib import Path

import pytest

from kstrunc.core.errors import ReportError
from kstrunc.core.results import (
    CheckResult,
    RefinementRow,
    ScenarioResult,
    SummabilityReport,
    TruncationRow,
    TruncationSweep,
)
from kstrunc.report import (
    CSV_COLUMNS,
    SUMMARY_NAME,
    emit_report,
    format_value,
    refinement_norm_name,
)

HEADER = "scenario_id,axis_name,axis_value,norm_name,value"


def swept_result(scenario_id: str = "checker") -> ScenarioResult:
    sweep = TruncationSweep(
        scenario_id=scenario_id,
        u_exponent=math.inf,
        rows=[
            TruncationRow(64.0, 0.125, 0.5, 1.0),
            TruncationRow(128.0, 0.125, 0.5, 1.0),
        ],
        changes=[{"psi_sup": 0.0, "grad_psi": 0.0, "u_norm": 0.0}],
        uniform=True,
    )
    refinement = SummabilityReport(
        scenario_id=scenario_id,
        p_grid=[2.0, 2.5],
        rows=[
            RefinementRow(cells, 1 / cells, 0.5 / cells**2, {2.0: 1.0, 2.5: 1.5})
            for cells in (4, 8, 16)
        ],
        empirical_exponent=2.5,
        m_dstar=math.inf,
        verdict="consistent",
    )
    return ScenarioResult(
        scenario_id,
        truncation=sweep,
        refinement=refinement,
        checks=[CheckResult(passed=True, name="positivity", value=0.0, threshold=0.0)],
        norms={"psi_sup": 0.125, "gn_ratio": 0.3},
        regime={"N": 3, "regime": "bounded"},
    )


def test_format_value() -> None:
    assert format_value(0.1) == "0.1"
    assert format_value(64) == "64.0"
    assert format_value(math.inf) == "inf"
    assert refinement_norm_name(2.5) == "L2.5"
    assert refinement_norm_name(math.inf) == "Linf"
    assert ",".join(CSV_COLUMNS) == HEADER


def test_empty_report(tmp_path: Path) -> None:
    written = emit_report([], tmp_path / "out")
    assert written == [tmp_path / "out" / SUMMARY_NAME]
    summary = json.loads(written[0].read_text())
    assert summary == {"count": 0, "passed": True, "scenarios": []}
    assert list((tmp_path / "out").glob("*.csv")) == []


def test_truncation_csv(tmp_path: Path) -> None:
    emit_report([swept_result()], tmp_path)
    lines = (tmp_path / "checker.truncation.psi_sup.csv").read_text().splitlines()
    assert lines == [
        HEADER,
        "checker,n,64.0,psi_sup,0.125",
        "checker,n,128.0,psi_sup,0.125",
    ]
    series = (tmp_path / "checker.truncation.psi_sup.dat").read_text()
    assert series == "64.0 0.125\n128.0 0.125\n"


def test_refinement_and_solve_csv(tmp_path: Path) -> None:
    emit_report([swept_result()], tmp_path)
    lines = (tmp_path / "checker.refinement.L2.5.csv").read_text().splitlines()
    assert lines[0] == HEADER
    assert lines[1:] == [
        "checker,h,0.25,L2.5,1.5",
        "checker,h,0.125,L2.5,1.5",
        "checker,h,0.0625,L2.5,1.5",
    ]
    solve = (tmp_path / "checker.solve.csv").read_text().splitlines()
    assert solve == [
        HEADER,
        "checker,run,0.0,gn_ratio,0.3",
        "checker,run,0.0,psi_sup,0.125",
    ]


def test_summary(tmp_path: Path) -> None:
    failing = ScenarioResult(
        "alpha",
        checks=[CheckResult(passed=False, name="mass_bound", value=1.0, threshold=0.0)],
    )
    emit_report([swept_result(), failing], tmp_path)
    summary = json.loads((tmp_path / SUMMARY_NAME).read_text())
    assert summary["count"] == 2
    assert summary["passed"] is False
    assert [s["id"] for s in summary["scenarios"]] == ["alpha", "checker"]

    checker = summary["scenarios"][1]
    assert checker["truncation"]["u_exponent"] == "inf"
    assert checker["truncation"]["levels"] == [64.0, 128.0]
    assert checker["refinement"]["verdict"] == "consistent"
    assert checker["refinement"]["cells"] == [4, 8, 16]
    assert checker["checks"][0]["name"] == "positivity"
    assert summary["scenarios"][0]["truncation"] is None


def test_report_is_deterministic(tmp_path: Path) -> None:
    first = emit_report([swept_result("b"), swept_result("a")], tmp_path / "one")
    second = emit_report([swept_result("a"), swept_result("b")], tmp_path / "two")
    assert [p.name for p in first] == [p.name for p in second]
    for a, b in zip(first, second, strict=True):
        assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "one" / SUMMARY_NAME).read_bytes().endswith(b"}\n")


def test_unwritable_directory(tmp_path: Path) -> None:
    blocker = tmp_path / "taken"
    blocker.write_text("not a directory")
    with pytest.raises(ReportError, match="Cannot write report file"):
        emit_report([swept_result()], blocker)

# SPDX-License-Identifier: MIT

"""Report files: long-format CSVs, two-column series and a JSON summary.

For every scenario the report directory receives

* ``<id>.solve.csv`` with the norms of the main run,
* ``<id>.truncation.<norm>.csv`` and ``<id>.refinement.<norm>.csv``, one
  file per sweep and norm, with one row per sweep point,
* a ``.dat`` series next to every sweep CSV (``x y`` per line),

and ``summary.json`` lists every scenario. Floats are written with ``repr``
and JSON keys are sorted, so identical results give identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

from .core.errors import ReportError
from .core.results import finite_or_str

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from .core.results import ScenarioResult, SummabilityReport, TruncationSweep
    from .core.typings import Document

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario_id", "axis_name", "axis_value", "norm_name", "value")
SUMMARY_NAME = "summary.json"
TRUNCATION_NORMS = ("psi_sup", "grad_psi", "u_norm")

Row = tuple[str, str, float, str, float]


def format_value(value: float) -> str:
    return repr(float(value))


def refinement_norm_name(p: float) -> str:
    """``L2``, ``L2.5``, ``Linf``."""
    return f"L{p:g}"


def solve_rows(result: ScenarioResult) -> list[Row]:
    return [
        (result.scenario_id, "run", 0.0, name, value)
        for name, value in sorted(result.norms.items())
    ]


def truncation_rows(sweep: TruncationSweep) -> dict[str, list[Row]]:
    """Rows of a truncation sweep, grouped by norm name.

    Args:
        sweep (TruncationSweep): The sweep.

    Returns:
        dict[str, list[Row]]: One row per truncation level and norm.
    """
    grouped: dict[str, list[Row]] = {name: [] for name in TRUNCATION_NORMS}
    for row in sweep.rows:
        for name in TRUNCATION_NORMS:
            grouped[name].append(
                (sweep.scenario_id, "n", row.n, name, getattr(row, name))
            )
    return grouped


def refinement_rows(report: SummabilityReport) -> dict[str, list[Row]]:
    """Rows of a refinement study, grouped by ``L^p`` norm.

    Args:
        report (SummabilityReport): The study.

    Returns:
        dict[str, list[Row]]: One row per grid and exponent.
    """
    grouped: dict[str, list[Row]] = {}
    for p in report.p_grid:
        name = refinement_norm_name(p)
        grouped[name] = [
            (report.scenario_id, "h", row.h, name, row.norms[p])
            for row in report.rows
        ]
    return grouped


def _write_csv(path: Path, rows: Iterable[Row]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for scenario_id, axis_name, axis_value, norm_name, value in rows:
            writer.writerow(
                (
                    scenario_id,
                    axis_name,
                    format_value(axis_value),
                    norm_name,
                    format_value(value),
                )
            )


def _write_series(path: Path, rows: Sequence[Row]) -> None:
    lines = [f"{format_value(row[2])} {format_value(row[4])}\n" for row in rows]
    path.write_text("".join(lines), encoding="utf-8")


def _sweep_summary(sweep: TruncationSweep) -> Document:
    return {
        "u_exponent": finite_or_str(sweep.u_exponent),
        "uniform": sweep.uniform,
        "levels": [row.n for row in sweep.rows],
        "changes": [
            {name: finite_or_str(value) for name, value in change.items()}
            for change in sweep.changes
        ],
    }


def _refinement_summary(report: SummabilityReport) -> Document:
    return {
        "cells": [row.cells for row in report.rows],
        "dt": [row.dt for row in report.rows],
        "p_grid": report.p_grid,
        "empirical_exponent": finite_or_str(report.empirical_exponent),
        "m_dstar": finite_or_str(report.m_dstar),
        "verdict": report.verdict,
    }


def scenario_summary(result: ScenarioResult) -> Document:
    """The summary record of one scenario.

    Args:
        result (ScenarioResult): The scenario result.

    Returns:
        Document: A JSON-ready document.
    """
    return {
        "id": result.scenario_id,
        "regime": result.regime,
        "passed": result.passed,
        "checks": [check.to_document() for check in result.checks],
        "norms": {name: finite_or_str(v) for name, v in result.norms.items()},
        "truncation": None
        if result.truncation is None
        else _sweep_summary(result.truncation),
        "refinement": None
        if result.refinement is None
        else _refinement_summary(result.refinement),
        "dump": result.dump_path,
    }


def _emit_scenario(result: ScenarioResult, path: Path) -> list[Path]:
    written: list[Path] = []
    stem = result.scenario_id

    if result.norms:
        target = path / f"{stem}.solve.csv"
        _write_csv(target, solve_rows(result))
        written.append(target)

    sweeps: list[tuple[str, dict[str, list[Row]]]] = []
    if result.truncation is not None:
        sweeps.append(("truncation", truncation_rows(result.truncation)))
    if result.refinement is not None:
        sweeps.append(("refinement", refinement_rows(result.refinement)))

    for kind, grouped in sweeps:
        for name, rows in grouped.items():
            target = path / f"{stem}.{kind}.{name}.csv"
            _write_csv(target, rows)
            series = target.with_suffix(".dat")
            _write_series(series, rows)
            written.extend((target, series))
    return written


def emit_report(results: Sequence[ScenarioResult], path: str | Path) -> list[Path]:
    """Write the report of an experiment into a directory.

    Args:
        results (Sequence[ScenarioResult]): The results, in any order.
        path (str | Path): The report directory, created if missing.

    Raises:
        ReportError: If a file cannot be written.

    Returns:
        list[Path]: Every written file, the summary last.
    """
    path = Path(path)
    ordered = sorted(results, key=lambda result: result.scenario_id)
    written: list[Path] = []
    try:
        path.mkdir(parents=True, exist_ok=True)
        for result in ordered:
            written.extend(_emit_scenario(result, path))

        summary = {
            "count": len(ordered),
            "passed": all(result.passed for result in ordered),
            "scenarios": [scenario_summary(result) for result in ordered],
        }
        target = path / SUMMARY_NAME
        target.write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(target)
    except OSError as e:
        failed = e.filename if e.filename is not None else path
        msg = f"Cannot write report file {failed}: {e.strerror}"
        raise ReportError(msg) from e

    logger.info("wrote %d report files to %s", len(written), path)
    return written

import math
from pathlib import Path

import pytest

from kstrunc.config import ExperimentConfig, ScenarioConfig
from kstrunc.core.errors import IterationLimitError, RunError
from kstrunc.core.typings import Task
from kstrunc.dump import read_trajectory
from kstrunc.harness import (
    MAX_RETRIES,
    refinement_study,
    run_experiment,
    run_scenario,
    run_with_retry,
    sweep_truncation,
    trajectory_norms,
    verify_trajectory,
)

CHECK_NAMES = [
    "ellipticity",
    "positivity",
    "mass_bound",
    "entropy_residual",
    "gn_ratio",
    "truncated_energy",
    "level_sets_monotone",
]


def scenario_document(scenario_id: str = "small", **overrides: object) -> dict:
    document = {
        "id": scenario_id,
        "dim": 2,
        "cells": 8,
        "theta": 0.5,
        "t_final": 0.01,
        "dt": 0.002,
        "source": {"kind": "constant", "value": 1.0},
        "A": {"family": "checkerboard", "values": [1.0, 10.0]},
        "solver_tol": 1e-12,
        "sweep": {
            "n_values": [128, 64],
            "grid_sizes": [4, 6, 8],
            "p_grid": [2, 4, 10],
        },
    }
    document.update(overrides)
    return document


def small_scenario(**overrides: object) -> ScenarioConfig:
    return ScenarioConfig.from_document(scenario_document(**overrides))


def test_run_with_retry_gives_up() -> None:
    scenario = small_scenario(cells=4, fp_max_iter=1)
    with pytest.raises(RunError) as info:
        run_with_retry(scenario.problem)
    assert info.value.step == 1
    assert MAX_RETRIES == 3


def test_run_with_retry_gives_up_on_linear_solver() -> None:
    scenario = small_scenario(cells=4, solver_max_iter=1)
    with pytest.raises(RunError) as info:
        run_with_retry(scenario.problem)
    assert info.value.step == 1
    assert isinstance(info.value.cause, IterationLimitError)


def test_run_with_retry_keeps_dt_on_success() -> None:
    scenario = small_scenario(cells=4)
    traj = run_with_retry(scenario.problem)
    assert traj.dt == scenario.problem.dt
    assert len(traj) == scenario.problem.steps + 1


def test_truncation_sweep_with_inactive_truncation() -> None:
    sweep = sweep_truncation(small_scenario())
    assert [row.n for row in sweep.rows] == [64.0, 128.0]
    assert len(sweep.changes) == 1
    assert sweep.u_exponent == math.inf
    assert sweep.changes[0]["psi_sup"] < 1e-8
    assert sweep.uniform


def test_psi_is_uniform_in_truncation_for_singular_source() -> None:
    scenario = small_scenario(
        dim=3,
        cells=12,
        t_final=0.05,
        dt=1e-3,
        source={"kind": "spatial-singularity", "m": "2"},
    )
    sweep = sweep_truncation(scenario, [128, 8, 32])
    assert [row.n for row in sweep.rows] == [8.0, 32.0, 128.0]
    assert sweep.changes[-1]["psi_sup"] < 0.05
    assert sweep.changes[-1]["grad_psi"] < 0.05
    assert sweep.uniform


def test_truncation_sweep_needs_two_levels() -> None:
    with pytest.raises(ValueError, match="at least two levels"):
        sweep_truncation(small_scenario(), [64.0])


def test_refinement_study_rows_and_verdict() -> None:
    scenario = small_scenario()
    # every slope counts as stable, so the largest exponent is reported
    report = refinement_study(scenario, slope_tol=100.0)
    assert [row.cells for row in report.rows] == [4, 6, 8]
    for row in report.rows:
        assert row.dt == min(0.5 * row.h**2, scenario.problem.t_final)
        assert sorted(row.norms) == [2.0, 4.0, 10.0]
    assert report.empirical_exponent == 10.0
    assert report.m_dstar == math.inf
    assert report.consistent


def test_refinement_study_without_stable_exponents() -> None:
    report = refinement_study(small_scenario(), slope_tol=-100.0)
    assert report.empirical_exponent == 0.0
    assert report.verdict == "inconsistent"


def test_refinement_study_needs_three_grids() -> None:
    with pytest.raises(ValueError, match="at least 3 grid sizes"):
        refinement_study(small_scenario(), [4, 8])


def test_solve_collects_norms() -> None:
    result = run_scenario(small_scenario(dim=3, cells=6), Task.SOLVE)
    assert result.truncation is None
    assert result.refinement is None
    assert result.checks == []
    assert result.regime["regime"] == "bounded"
    assert "L^inf(Omega_T)" in result.norms
    assert result.norms["mass_final"] <= result.norms["source_mass"]
    assert result.passed


def test_verify_passes_on_bounded_source() -> None:
    result = run_scenario(small_scenario(), Task.VERIFY)
    names = [check.name for check in result.checks]
    assert names == [*CHECK_NAMES, "psi_uniformity"]
    failed = [check for check in result.checks if not check.passed]
    assert failed == []
    assert result.truncation is not None
    assert result.refinement is None


def test_verify_passes_on_singular_source() -> None:
    source = {"kind": "spatial-singularity", "m": "3/2", "margin": 0.2}
    result = run_scenario(
        small_scenario(source=source, sweep={"entropy_levels": [0.0, 0.5, 2.0]}),
        Task.VERIFY,
    )
    assert [check.name for check in result.checks] == CHECK_NAMES
    assert result.passed


def test_sweep_runs_both_studies() -> None:
    result = run_scenario(small_scenario(), Task.SWEEP, slope_tol=100.0)
    assert result.truncation is not None
    assert result.refinement is not None
    assert result.norms == {}


def test_dump_rederives_norms(tmp_path: Path) -> None:
    scenario = small_scenario(dump=True)
    result = run_scenario(scenario, Task.SOLVE, output_dir=tmp_path, compressor="zlib")
    assert result.dump_path == "dumps/small.ksd"

    traj = read_trajectory(tmp_path / result.dump_path)
    again = trajectory_norms(scenario, traj)
    assert again.keys() == result.norms.keys()
    for name, value in result.norms.items():
        assert again[name] == pytest.approx(value, rel=1e-12, abs=1e-12)


@pytest.mark.asyncio()
async def test_run_experiment_sorts_by_id(tmp_path: Path) -> None:
    config = ExperimentConfig.from_document(
        {
            "scenarios": [
                scenario_document("zeta", cells=4),
                scenario_document("alpha", cells=4),
                scenario_document("mid", cells=4),
            ],
            "output_dir": str(tmp_path),
        }
    )
    results = await run_experiment(config, Task.SOLVE)
    assert [result.scenario_id for result in results] == ["alpha", "mid", "zeta"]
    # identical scenarios under different ids give identical norms
    assert results[0].norms == results[2].norms


@pytest.mark.asyncio()
async def test_run_experiment_without_scenarios() -> None:
    config = ExperimentConfig.from_document({"scenarios": []})
    assert await run_experiment(config, Task.VERIFY) == []


def test_ellipticity_catches_wrong_declared_bound() -> None:
    # the checkerboard reaches 10, above the declared beta
    A = {"family": "checkerboard", "values": [1.0, 10.0], "beta": 2.0}
    scenario = small_scenario(cells=4, A=A)
    traj = run_with_retry(scenario.problem)
    check = verify_trajectory(scenario, traj)[0]
    assert check.name == "ellipticity"
    assert not check.passed
    assert check.value < 0


def test_ellipticity_sampling_follows_seed() -> None:
    A = {"family": "time-modulated", "values": [2.0], "amplitude": 0.5}

    def ellipticity(seed: int) -> float:
        scenario = small_scenario(cells=4, A=A, t_final=0.004, seed=seed)
        traj = run_with_retry(scenario.problem)
        check = verify_trajectory(scenario, traj)[0]
        assert check.passed
        return check.value

    assert ellipticity(3) == ellipticity(3)
    assert ellipticity(3) != ellipticity(4)

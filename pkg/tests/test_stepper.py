import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from kstrunc.coefficients import CoefficientField
from kstrunc.config import load_config
from kstrunc.core.errors import (
    ConfigError,
    FixedPointError,
    IterationLimitError,
    RunError,
)
from kstrunc.grid import ScalarField, SpaceGrid
from kstrunc.norms import mass, source_mass
from kstrunc.sources import SourceSpec
from kstrunc.stepper import (
    FP_DT_THRESHOLD,
    FP_ITERATION_BOUND,
    CoupledStepper,
    ProblemConfig,
    courant_number,
    drift_flux,
    face_velocities,
    run,
    schauder_step,
)


def constant_problem(**overrides: object) -> ProblemConfig:
    settings: dict = {
        "grid": SpaceGrid(3, 12),
        "theta": 0.5,
        "t_final": 0.05,
        "dt": 1e-3,
        "source": SourceSpec.constant(1.0),
    }
    settings.update(overrides)
    return ProblemConfig(**settings)


def test_theta_range() -> None:
    with pytest.raises(ConfigError, match="theta must lie in"):
        constant_problem(theta=0.7)
    with pytest.raises(ConfigError, match="theta must lie in"):
        constant_problem(theta=0.0)
    # 2/N with N = 2 is excluded, just below is fine
    with pytest.raises(ConfigError, match="theta must lie in"):
        constant_problem(grid=SpaceGrid(2, 8), theta=1.0)
    constant_problem(grid=SpaceGrid(2, 8), theta=0.99)


def test_time_step_validation() -> None:
    with pytest.raises(ConfigError, match="Time step"):
        constant_problem(dt=0.1)
    with pytest.raises(ConfigError, match="Truncation level"):
        constant_problem(n_trunc=0.5)
    with pytest.raises(ConfigError, match="must not depend on time"):
        constant_problem(M=CoefficientField.time_modulated(1.0, 0.5))


def test_non_diagonal_coefficient_is_rejected() -> None:
    full = CoefficientField.full([[2.0, 1.0], [1.0, 2.0]], alpha=1.0, beta=3.0)
    with pytest.raises(ConfigError, match="only diagonal families"):
        constant_problem(grid=SpaceGrid(2, 8), M=full)
    with pytest.raises(ConfigError, match="Coefficient A uses the full family"):
        constant_problem(grid=SpaceGrid(2, 8), A=full)


def test_step_count() -> None:
    assert constant_problem().steps == 50
    assert constant_problem(t_final=0.0105).steps == 11


def test_drift_flux_upwinds_and_reads_boundary_as_zero() -> None:
    grid = SpaceGrid(2, 4)
    psi = ScalarField.from_function(grid, lambda x, _: x)
    u = ScalarField(grid, np.arange(1, 10, dtype=float).reshape(3, 3))
    flux = drift_flux(u, psi, CoefficientField.identity(), math.inf)

    along = flux.components[0]
    # velocity +1 on interior faces: the low node is upstream
    np.testing.assert_allclose(along[1:-1], u.values[:-1])
    # boundary faces take their density from the boundary
    assert np.all(along[0] == 0)
    assert np.all(along[-1] == 0)
    # psi is constant across the second axis away from the boundary
    np.testing.assert_array_equal(flux.components[1][:, 1:-1], 0)


def test_drift_flux_truncates_density() -> None:
    grid = SpaceGrid(2, 4)
    psi = ScalarField.from_function(grid, lambda x, _: x)
    u = ScalarField.constant(grid, 5.0)
    flux = drift_flux(u, psi, CoefficientField.layered([2.0]), n_trunc=1.0)
    np.testing.assert_allclose(flux.components[0][1:-1], 2.0)


def test_drift_flux_reverses_with_potential() -> None:
    grid = SpaceGrid(2, 4)
    psi = ScalarField.from_function(grid, lambda x, _: -x)
    u = ScalarField(grid, np.arange(1, 10, dtype=float).reshape(3, 3))
    flux = drift_flux(u, psi, CoefficientField.identity(), math.inf)
    # velocity -1: the high node is upstream
    np.testing.assert_allclose(flux.components[0][1:-1], -u.values[1:])


def test_courant_number() -> None:
    grid = SpaceGrid(2, 4)
    psi = ScalarField.from_function(grid, lambda x, _: x)
    velocities = face_velocities(psi, (np.ones((4, 3)), np.ones((3, 4))))
    assert courant_number(velocities, 0.01, grid.h) > 0


def test_zero_source_stays_zero() -> None:
    problem = constant_problem(
        grid=SpaceGrid(2, 8), source=SourceSpec.constant(0.0), t_final=0.01
    )
    traj = run(problem)
    assert len(traj) == problem.steps + 1
    assert all(np.all(u.values == 0) for u in traj.u)
    assert all(np.all(psi.values == 0) for psi in traj.psi)


def test_mass_bound_and_positivity_constant_source() -> None:
    traj = run(constant_problem())
    for j in range(len(traj)):
        assert mass(traj.u[j]) <= source_mass(traj, j) + 1e-10
    assert min(float(u.values.min()) for u in traj.u) >= 0
    assert min(float(psi.values.min()) for psi in traj.psi) >= 0
    assert all(info.iterations >= 1 for info in traj.steps)


def test_positivity_singular_source() -> None:
    problem = constant_problem(
        source=SourceSpec.singular(Fraction(2)),
        A=CoefficientField.checkerboard(1.0, 10.0),
        t_final=0.01,
        n_trunc=128.0,
    )
    traj = run(problem)
    assert min(float(u.values.min()) for u in traj.u) >= 0
    assert min(float(psi.values.min()) for psi in traj.psi) >= 0
    for j in range(len(traj)):
        assert mass(traj.u[j]) <= source_mass(traj, j) + 1e-10


def test_inactive_truncation_gives_identical_runs() -> None:
    coarse = constant_problem(grid=SpaceGrid(3, 8), t_final=0.02, solver_tol=1e-12)
    low = run(coarse.with_truncation(64.0))
    high = run(coarse.with_truncation(128.0))
    for a, b in zip(low.u, high.u, strict=True):
        np.testing.assert_allclose(a.values, b.values, atol=1e-11, rtol=0)


def test_schauder_step_matches_stepper() -> None:
    problem = constant_problem(grid=SpaceGrid(2, 8), t_final=0.01)
    zero = ScalarField.zeros(problem.grid)
    outcome = schauder_step(zero, 0.0, problem)
    again = CoupledStepper(problem).schauder_step(zero, 0.0)
    np.testing.assert_array_equal(outcome.u.values, again.u.values)
    assert outcome.iterations == outcome.info.iterations
    assert outcome.info.change <= problem.fp_tol


def test_fixed_point_budget_exhausted() -> None:
    problem = constant_problem(grid=SpaceGrid(2, 8), fp_max_iter=1)
    with pytest.raises(FixedPointError) as info:
        schauder_step(ScalarField.zeros(problem.grid), 0.0, problem)
    assert info.value.iterations == 1

    with pytest.raises(RunError) as run_info:
        run(problem)
    assert run_info.value.step == 1
    assert isinstance(run_info.value.cause, FixedPointError)


def test_linear_solver_failure_is_a_run_error() -> None:
    problem = constant_problem(
        grid=SpaceGrid(2, 8), t_final=0.02, dt=0.01, solver_max_iter=1
    )
    with pytest.raises(RunError) as info:
        run(problem)
    assert info.value.step == 1
    assert isinstance(info.value.cause, IterationLimitError)


def test_time_modulated_diffusion_runs() -> None:
    problem = constant_problem(
        grid=SpaceGrid(2, 8),
        A=CoefficientField.time_modulated(1.0, 0.5, period=0.01),
        t_final=0.01,
    )
    traj = run(problem)
    assert traj.u[-1].values.max() > 0


def test_shipped_scenarios_settle_quickly() -> None:
    path = Path(__file__).parent.parent / "experiments" / "checkerboard.json"
    config = load_config(path)
    assert config.scenarios
    for scenario in config.scenarios:
        problem = scenario.problem
        assert problem.dt <= FP_DT_THRESHOLD
        traj = run(problem)
        assert max(info.iterations for info in traj.steps) <= FP_ITERATION_BOUND

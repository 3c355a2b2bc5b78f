# SPDX-License-Identifier: MIT

"""Sweeps, refinement studies and the invariant suite over configured scenarios."""

from __future__ import annotations

import asyncio
import functools
import logging
import math
from itertools import pairwise
from typing import TYPE_CHECKING

import numpy as np

from .coefficients import verify_ellipticity
from .core.errors import RunError
from .core.results import (
    CheckResult,
    RefinementRow,
    ScenarioResult,
    SummabilityReport,
    TruncationRow,
    TruncationSweep,
)
from .core.typings import Task
from .dump import write_trajectory
from .elliptic import psi_apriori_report
from .grid import ScalarField, lp_norm
from .norms import (
    MIN_REFINEMENTS,
    SLOPE_TOL,
    BochnerSpec,
    bochner_norm,
    empirical_exponent,
    entropy_terms,
    gn_ratio,
    gradient_norm,
    level_set_profile,
    mass,
    source_mass,
    space_time_lp_norm,
    truncated_energy,
)
from .stepper import run
from .truncations import nonnegative_power, t_k

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from .config import ExperimentConfig, ScenarioConfig
    from .stepper import ProblemConfig, Trajectory

logger = logging.getLogger(__name__)

MAX_RETRIES = 3
UNIFORMITY_TOL = 0.05
CONSISTENCY_FACTOR = 0.8
MASS_TOL = 1e-10
ENTROPY_RTOL = 1e-6
ENERGY_RTOL = 1e-12
LEVEL_SET_SAMPLES = 9
ELLIPTICITY_SAMPLES = 1000
DUMP_SUFFIX = ".ksd"


def run_with_retry(problem: ProblemConfig) -> Trajectory:
    """Run a problem, halving dt after a failed step up to MAX_RETRIES times.

    Args:
        problem (ProblemConfig): The problem.

    Raises:
        RunError: If the last attempt still fails.

    Returns:
        Trajectory: The trajectory of the first successful attempt.
    """
    attempt = 0
    while True:
        try:
            return run(problem)
        except RunError as e:
            attempt += 1
            if attempt > MAX_RETRIES:
                raise
            logger.warning(
                "step %d failed (%s), retrying with dt=%g",
                e.step,
                e.cause,
                problem.dt / 2,
            )
            problem = problem.with_dt(problem.dt / 2)


def _relative_change(before: float, after: float) -> float:
    if before == after:
        return 0.0
    return abs(after - before) / max(abs(before), abs(after))


def _psi_sup(traj: Trajectory) -> float:
    return max(lp_norm(psi, math.inf) for psi in traj.psi)


def _grad_psi(traj: Trajectory) -> float:
    return max(gradient_norm(psi, 2) for psi in traj.psi)


def sweep_truncation(
    scenario: ScenarioConfig, n_values: Sequence[float] | None = None
) -> TruncationSweep:
    """Run a scenario at several truncation levels.

    Args:
        scenario (ScenarioConfig): The scenario.
        n_values (Sequence[float] | None, optional): Levels, defaults to the
            scenario's sweep axis.

    Raises:
        ValueError: If fewer than two levels are given.
        RunError: If a run fails after all retries.

    Returns:
        TruncationSweep: One row per level, in increasing order.
    """
    levels = sorted(n_values if n_values is not None else scenario.sweep.n_values)
    if len(levels) < 2:  # noqa: PLR2004
        msg = "A truncation sweep needs at least two levels"
        raise ValueError(msg)

    exponent = float(scenario.regime.u_exponent)
    rows: list[TruncationRow] = []
    for n in levels:
        traj = run_with_retry(scenario.problem.with_truncation(n))
        rows.append(
            TruncationRow(
                n=n,
                psi_sup=_psi_sup(traj),
                grad_psi=_grad_psi(traj),
                u_norm=space_time_lp_norm(traj, exponent),
            )
        )
        logger.info("%s: n=%g done, %s", scenario.id, n, rows[-1])

    changes = [
        {
            name: _relative_change(getattr(before, name), getattr(after, name))
            for name in ("psi_sup", "grad_psi", "u_norm")
        }
        for before, after in pairwise(rows)
    ]
    last = changes[-1]
    return TruncationSweep(
        scenario_id=scenario.id,
        u_exponent=exponent,
        rows=rows,
        changes=changes,
        uniform=last["psi_sup"] < UNIFORMITY_TOL and last["grad_psi"] < UNIFORMITY_TOL,
    )


def refinement_study(
    scenario: ScenarioConfig,
    grid_sizes: Sequence[int] | None = None,
    *,
    p_grid: Sequence[float] | None = None,
    slope_tol: float = SLOPE_TOL,
) -> SummabilityReport:
    """Measure the summability of u under mesh refinement.

    Every run uses ``dt = dt_factor * h^2``. The verdict is ``consistent``
    when the empirical exponent reaches ``0.8 * min(m**, max p_grid)``.

    Args:
        scenario (ScenarioConfig): The scenario.
        grid_sizes (Sequence[int] | None, optional): Cells per axis, defaults
            to the scenario's sweep axis.
        p_grid (Sequence[float] | None, optional): Exponents, defaults to the
            scenario's sweep axis.
        slope_tol (float, optional): Stability threshold. Defaults to SLOPE_TOL.

    Raises:
        ValueError: If fewer than three grid sizes are given.
        RunError: If a run fails after all retries.

    Returns:
        SummabilityReport: Norms per grid, the empirical exponent and a verdict.
    """
    sizes = sorted(
        grid_sizes if grid_sizes is not None else scenario.sweep.grid_sizes
    )
    if len(sizes) < MIN_REFINEMENTS:
        msg = f"A refinement study needs at least {MIN_REFINEMENTS} grid sizes"
        raise ValueError(msg)
    exponents = sorted(p_grid if p_grid is not None else scenario.sweep.p_grid)

    rows: list[RefinementRow] = []
    for cells in sizes:
        h = 1.0 / cells
        moved = scenario.on_grid(cells, scenario.sweep.dt_factor * h**2)
        traj = run_with_retry(moved.problem)
        rows.append(
            RefinementRow(
                cells=cells,
                h=h,
                dt=traj.dt,
                norms={p: space_time_lp_norm(traj, p) for p in exponents},
            )
        )
        logger.info("%s: n_x=%d done", scenario.id, cells)

    samples = {p: [(row.h, row.norms[p]) for row in rows] for p in exponents}
    exponent = empirical_exponent(samples, exponents, slope_tol)
    m_dstar = float(scenario.regime.u_exponent)
    target = min(m_dstar, max(exponents))
    verdict = (
        "consistent" if exponent >= CONSISTENCY_FACTOR * target else "inconsistent"
    )
    return SummabilityReport(
        scenario_id=scenario.id,
        p_grid=exponents,
        rows=rows,
        empirical_exponent=exponent,
        m_dstar=m_dstar,
        verdict=verdict,
    )


def trajectory_norms(scenario: ScenarioConfig, traj: Trajectory) -> dict[str, float]:
    """Norms of a run in every space the theory predicts, plus requested pairs.

    Spaces predicted only strictly below an exponent are skipped.

    Args:
        scenario (ScenarioConfig): The scenario.
        traj (Trajectory): Its trajectory.

    Returns:
        dict[str, float]: Norms keyed by space.
    """
    norms: dict[str, float] = {}
    for space in scenario.regime.predicted_spaces:
        if space.strict:
            continue
        spec = BochnerSpec(space.outer, space.inner, with_gradient=space.with_gradient)
        norms[space.describe()] = bochner_norm(traj, spec)
    for r, q in scenario.sweep.bochner_pairs:
        norms[f"L^{r:g}(0,T;L^{q:g})"] = bochner_norm(traj, BochnerSpec(r, q))

    final = traj.u[-1]
    density = nonnegative_power(t_k(final.values, traj.n_trunc), traj.theta)
    psi = psi_apriori_report(
        traj.psi[-1],
        ScalarField(traj.grid, density),
        source_mass(traj),
        traj.theta,
    )
    norms["psi_sup"] = _psi_sup(traj)
    norms["grad_psi_sup_l2"] = _grad_psi(traj)
    norms["psi_ratio"] = psi.psi_ratio
    norms["grad_psi_ratio"] = psi.grad_ratio
    norms["mass_final"] = mass(final)
    norms["source_mass"] = source_mass(traj)
    norms["gn_ratio"] = gn_ratio(traj)
    return norms


def _positivity(traj: Trajectory) -> CheckResult:
    lowest = min(
        float(field.values.min(initial=0.0)) for field in (*traj.u, *traj.psi)
    )
    return CheckResult(
        passed=lowest >= 0, name="positivity", value=lowest, threshold=0.0
    )


def _mass_bound(traj: Trajectory) -> CheckResult:
    excess = max(
        mass(traj.u[j]) - source_mass(traj, j) for j in range(len(traj))
    )
    return CheckResult(
        passed=excess <= MASS_TOL, name="mass_bound", value=excess, threshold=MASS_TOL
    )


def _entropy_stamps(traj: Trajectory) -> list[int]:
    last = len(traj) - 1
    if last == 0:
        return [0]
    return sorted({max(1, last * i // 3) for i in (1, 2, 3)})


def _entropy(traj: Trajectory, levels: Sequence[float], u_max: float) -> CheckResult:
    worst = -math.inf
    for level in levels:
        k = level * u_max
        for t_index in _entropy_stamps(traj):
            terms = entropy_terms(traj, k, t_index)
            relative = terms.residual / terms.scale if terms.scale > 0 else 0.0
            worst = max(worst, relative)
    return CheckResult(
        passed=worst <= ENTROPY_RTOL,
        name="entropy_residual",
        value=worst,
        threshold=ENTROPY_RTOL,
    )


def _truncated_energy(
    traj: Trajectory, levels: Sequence[float], u_max: float
) -> CheckResult:
    full = truncated_energy(traj, math.inf)
    ratios = [
        truncated_energy(traj, level * u_max) / full if full > 0 else 0.0
        for level in levels
        if level > 0
    ]
    worst = max(ratios, default=0.0)
    return CheckResult(
        passed=worst <= 1 + ENERGY_RTOL,
        name="truncated_energy",
        value=worst,
        threshold=1.0,
    )


def _level_sets(traj: Trajectory, u_max: float) -> CheckResult:
    profile = level_set_profile(traj, np.linspace(0.0, u_max, LEVEL_SET_SAMPLES))
    increase = max(
        (after - before for before, after in pairwise(profile)), default=0.0
    )
    return CheckResult(
        passed=increase <= 0, name="level_sets_monotone", value=increase, threshold=0.0
    )


def _ellipticity(scenario: ScenarioConfig) -> CheckResult:
    problem = scenario.problem
    worst = math.inf
    passed = True
    for offset, coefficient in enumerate((problem.A, problem.M)):
        report = verify_ellipticity(
            coefficient,
            ELLIPTICITY_SAMPLES,
            dim=problem.grid.dim,
            t_final=problem.t_final,
            seed=scenario.seed + offset,
        )
        passed = passed and report.passed
        # margin of the sampled bounds against the declared ones, negative on failure
        margin = min(
            report.min_rayleigh / coefficient.alpha - 1,
            1 - report.max_gain / coefficient.beta,
        )
        worst = min(worst, margin)
    return CheckResult(passed=passed, name="ellipticity", value=worst, threshold=0.0)


def verify_trajectory(
    scenario: ScenarioConfig,
    traj: Trajectory,
    truncation: TruncationSweep | None = None,
) -> list[CheckResult]:
    """Run the invariant suite on a solver trajectory.

    Args:
        scenario (ScenarioConfig): The scenario.
        traj (Trajectory): Its trajectory.
        truncation (TruncationSweep | None, optional): A truncation sweep to
            judge psi uniformity on.

    Returns:
        list[CheckResult]: One result per check, in a fixed order.
    """
    u_max = max(lp_norm(u, math.inf) for u in traj.u)
    levels = scenario.sweep.entropy_levels
    gn = gn_ratio(traj)
    checks = [
        _ellipticity(scenario),
        _positivity(traj),
        _mass_bound(traj),
        _entropy(traj, levels, u_max),
        CheckResult(
            passed=math.isfinite(gn), name="gn_ratio", value=gn, threshold=math.inf
        ),
        _truncated_energy(traj, levels, u_max),
        _level_sets(traj, u_max),
    ]
    if truncation is not None:
        last = truncation.changes[-1]
        checks.append(
            CheckResult(
                passed=truncation.uniform,
                name="psi_uniformity",
                value=max(last["psi_sup"], last["grad_psi"]),
                threshold=UNIFORMITY_TOL,
            )
        )
    for check in checks:
        logger.debug("%s: %s", scenario.id, check)
    return checks


def run_scenario(
    scenario: ScenarioConfig,
    task: Task,
    *,
    slope_tol: float = SLOPE_TOL,
    output_dir: Path | None = None,
    compressor: str = "noop",
) -> ScenarioResult:
    """Run everything ``task`` asks for on one scenario.

    Args:
        scenario (ScenarioConfig): The scenario.
        task (Task): ``solve``, ``sweep`` or ``verify``.
        slope_tol (float, optional): For refinement studies. Defaults to SLOPE_TOL.
        output_dir (Path | None, optional): Where dumps go.
        compressor (str, optional): Dump compressor. Defaults to "noop".

    Returns:
        ScenarioResult: The collected results.
    """
    logger.info("%s: %s", scenario.id, task.value)
    result = ScenarioResult(scenario.id, regime=scenario.regime.to_document())

    traj: Trajectory | None = None
    if task in (Task.SOLVE, Task.VERIFY):
        traj = run_with_retry(scenario.problem)
        result.norms = trajectory_norms(scenario, traj)
        if scenario.dump and output_dir is not None:
            relative = f"dumps/{scenario.id}{DUMP_SUFFIX}"
            write_trajectory(traj, output_dir / relative, compressor=compressor)
            result.dump_path = relative

    if task in (Task.SWEEP, Task.VERIFY) and scenario.sweep.n_values:
        result.truncation = sweep_truncation(scenario)
    if task is Task.SWEEP and scenario.sweep.grid_sizes:
        result.refinement = refinement_study(scenario, slope_tol=slope_tol)
    if task is Task.VERIFY and traj is not None:
        result.checks = verify_trajectory(scenario, traj, result.truncation)
    return result


async def run_experiment(config: ExperimentConfig, task: Task) -> list[ScenarioResult]:
    """Run all scenarios of an experiment concurrently.

    Each scenario runs its strictly sequential solver on the default executor.

    Args:
        config (ExperimentConfig): The experiment.
        task (Task): What to run.

    Returns:
        list[ScenarioResult]: Results sorted by scenario id.
    """
    loop = asyncio.get_running_loop()
    futures = [
        loop.run_in_executor(
            None,
            functools.partial(
                run_scenario,
                scenario,
                task,
                slope_tol=config.slope_tol,
                output_dir=config.output_dir,
                compressor=config.compressor,
            ),
        )
        for scenario in config.scenarios
    ]
    results = await asyncio.gather(*futures)
    return sorted(results, key=lambda result: result.scenario_id)

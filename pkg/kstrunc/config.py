# SPDX-License-Identifier: MIT

"""Experiment configuration: JSON documents parsed into frozen dataclasses.

Every rule is checked at parse time and reported as a :class:`ConfigError`
with its own message, so a bad experiment never starts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING

from .coefficients import CoefficientField
from .core.compressors import compressor_registry
from .core.errors import ConfigError
from .grid import MIN_CELLS, SpaceGrid
from .norms import MIN_REFINEMENTS, SLOPE_TOL
from .regime import classify
from .sources import SourceSpec
from .stepper import (
    DEFAULT_FP_MAX_ITER,
    DEFAULT_FP_TOL,
    DEFAULT_N_TRUNC,
    ProblemConfig,
)

if TYPE_CHECKING:
    from .core.typings import ExperimentDocument, ScenarioDocument, SweepDocument
    from .regime import RegimeReport

logger = logging.getLogger(__name__)

DEFAULT_DT_FACTOR = 0.5
DEFAULT_P_GRID = (2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0)
DEFAULT_ENTROPY_LEVELS = (0.0, 0.5, 2.0)
DEFAULT_SOLVER_TOL = 1e-10
DEFAULT_SOLVER_MAX_ITER = 10_000


@dataclass(frozen=True)
class SweepAxes:
    """Sweep axes of one scenario. Empty axes are skipped."""

    grid_sizes: tuple[int, ...] = ()
    n_values: tuple[float, ...] = ()
    dt_factor: float = DEFAULT_DT_FACTOR
    """Refinement runs use ``dt = dt_factor * h^2``."""
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    entropy_levels: tuple[float, ...] = DEFAULT_ENTROPY_LEVELS
    """Entropy checks run at ``k = level * max u``."""
    bochner_pairs: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.grid_sizes and len(self.grid_sizes) < MIN_REFINEMENTS:
            msg = f"A refinement study needs at least {MIN_REFINEMENTS} grid sizes"
            raise ConfigError(msg)
        if any(cells < MIN_CELLS for cells in self.grid_sizes):
            msg = f"Grid sizes must be at least {MIN_CELLS} cells per axis"
            raise ConfigError(msg)
        if len(self.n_values) == 1:
            msg = "A truncation sweep needs at least two levels"
            raise ConfigError(msg)
        if any(not n >= 1 for n in self.n_values):
            msg = "Truncation levels must satisfy n >= 1"
            raise ConfigError(msg)
        if not self.dt_factor > 0:
            msg = f"dt_factor must be positive, got {self.dt_factor}"
            raise ConfigError(msg)
        if not self.p_grid or any(not p >= 1 for p in self.p_grid):
            msg = "p_grid must be a nonempty list of exponents >= 1"
            raise ConfigError(msg)
        if any(not level >= 0 for level in self.entropy_levels):
            msg = "Entropy levels must be nonnegative"
            raise ConfigError(msg)
        if any(not (r >= 1 and q >= 1) for r, q in self.bochner_pairs):
            msg = "Bochner pairs must have both exponents >= 1"
            raise ConfigError(msg)

    @classmethod
    def from_document(cls, document: SweepDocument) -> SweepAxes:
        try:
            return cls(
                grid_sizes=tuple(int(c) for c in document.get("grid_sizes", ())),
                n_values=tuple(float(n) for n in document.get("n_values", ())),
                dt_factor=float(document.get("dt_factor", DEFAULT_DT_FACTOR)),
                p_grid=tuple(
                    float(p) for p in document.get("p_grid", DEFAULT_P_GRID)
                ),
                entropy_levels=tuple(
                    float(level)
                    for level in document.get("entropy_levels", DEFAULT_ENTROPY_LEVELS)
                ),
                bochner_pairs=tuple(
                    (float(r), float(q)) for r, q in document.get("bochner_pairs", ())
                ),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            msg = f"Malformed sweep axes: {e}"
            raise ConfigError(msg) from e


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    id: str
    problem: ProblemConfig
    sweep: SweepAxes = field(default_factory=SweepAxes)
    seed: int = 0
    dump: bool = False

    @classmethod
    def from_document(cls, document: ScenarioDocument) -> ScenarioConfig:
        """Parse and validate one scenario.

        Args:
            document (ScenarioDocument): The scenario document.

        Raises:
            ConfigError: On the first violated rule.

        Returns:
            ScenarioConfig: The scenario.
        """
        scenario_id = document.get("id")
        if not isinstance(scenario_id, str) or not scenario_id:
            msg = "Every scenario needs a nonempty string id"
            raise ConfigError(msg)
        try:
            try:
                grid = SpaceGrid(int(document["dim"]), int(document["cells"]))
            except ValueError as e:
                raise ConfigError(str(e)) from e
            problem = ProblemConfig(
                grid=grid,
                theta=float(document["theta"]),
                t_final=float(document["t_final"]),
                dt=float(document["dt"]),
                A=CoefficientField.from_document(
                    document.get("A", {"family": "identity"})
                ),
                M=CoefficientField.from_document(
                    document.get("M", {"family": "identity"})
                ),
                source=SourceSpec.from_document(document["source"]),
                n_trunc=float(document.get("n_trunc", DEFAULT_N_TRUNC)),
                fp_tol=float(document.get("fp_tol", DEFAULT_FP_TOL)),
                fp_max_iter=int(document.get("fp_max_iter", DEFAULT_FP_MAX_ITER)),
                solver_tol=float(document.get("solver_tol", DEFAULT_SOLVER_TOL)),
                solver_max_iter=int(
                    document.get("solver_max_iter", DEFAULT_SOLVER_MAX_ITER)
                ),
            )
        except KeyError as e:
            msg = f"Scenario {scenario_id!r} is missing required key {e.args[0]!r}"
            raise ConfigError(msg) from e
        except ConfigError as e:
            msg = f"Scenario {scenario_id!r}: {e}"
            raise ConfigError(msg) from e
        except (TypeError, ValueError) as e:
            msg = f"Scenario {scenario_id!r} has a malformed value: {e}"
            raise ConfigError(msg) from e

        return cls(
            id=scenario_id,
            problem=problem,
            sweep=SweepAxes.from_document(document.get("sweep", {})),
            seed=int(document.get("seed", 0)),
            dump=bool(document.get("dump", False)),
        )

    def to_document(self) -> ScenarioDocument:
        problem = self.problem
        return {
            "id": self.id,
            "dim": problem.grid.dim,
            "cells": problem.grid.cells_per_axis,
            "theta": problem.theta,
            "t_final": problem.t_final,
            "dt": problem.dt,
            "source": problem.source.to_document(),
            "n_trunc": problem.n_trunc,
            "fp_tol": problem.fp_tol,
            "fp_max_iter": problem.fp_max_iter,
            "solver_tol": problem.solver_tol,
            "solver_max_iter": problem.solver_max_iter,
            "A": problem.A.to_document(),
            "M": problem.M.to_document(),
            "seed": self.seed,
            "dump": self.dump,
        }

    @property
    def regime(self) -> RegimeReport:
        return classify(self.problem.source.summability, self.problem.grid.dim)

    def on_grid(self, cells: int, dt: float) -> ScenarioConfig:
        """The same scenario on a different grid and time step.

        Args:
            cells (int): Cells per axis.
            dt (float): The time step, capped at ``t_final``.

        Returns:
            ScenarioConfig: The moved scenario.
        """
        problem = self.problem
        grid = SpaceGrid(problem.grid.dim, cells)
        return replace(
            self,
            problem=replace(problem, grid=grid, dt=min(dt, problem.t_final)),
        )


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    scenarios: tuple[ScenarioConfig, ...]
    output_dir: Path = Path("results")
    slope_tol: float = SLOPE_TOL
    compressor: str = "noop"

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for scenario in self.scenarios:
            if scenario.id in seen:
                msg = f"Duplicate scenario id {scenario.id!r}"
                raise ConfigError(msg)
            seen.add(scenario.id)
        if not self.slope_tol > 0:
            msg = f"slope_tol must be positive, got {self.slope_tol}"
            raise ConfigError(msg)
        if self.compressor not in compressor_registry:
            msg = f"Unknown compressor {self.compressor!r}"
            raise ConfigError(msg)

    @classmethod
    def from_document(
        cls, document: ExperimentDocument, base_dir: Path | None = None
    ) -> ExperimentConfig:
        """Parse and validate an experiment.

        Args:
            document (ExperimentDocument): The experiment document.
            base_dir (Path | None, optional): Directory relative output paths
                are resolved against.

        Raises:
            ConfigError: On the first violated rule.

        Returns:
            ExperimentConfig: The experiment.
        """
        if not isinstance(document, dict):
            msg = "The experiment document must be an object"
            raise ConfigError(msg)
        scenarios = document.get("scenarios", [])
        if not isinstance(scenarios, list):
            msg = "scenarios must be a list"
            raise ConfigError(msg)

        output_dir = Path(document.get("output_dir", "results"))
        if base_dir is not None and not output_dir.is_absolute():
            output_dir = base_dir / output_dir

        return cls(
            scenarios=tuple(ScenarioConfig.from_document(s) for s in scenarios),
            output_dir=output_dir,
            slope_tol=float(document.get("slope_tol", SLOPE_TOL)),
            compressor=str(document.get("compressor", "noop")),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment from a JSON file.

    Args:
        path (str | Path): The file.

    Raises:
        ConfigError: If the file cannot be read or fails validation.

    Returns:
        ExperimentConfig: The experiment, with ``output_dir`` resolved
            against the file's directory.
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        msg = f"Cannot read configuration {path}: {e.strerror}"
        raise ConfigError(msg) from e
    except json.JSONDecodeError as e:
        msg = f"Invalid JSON in {path}: {e.msg} (line {e.lineno})"
        raise ConfigError(msg) from e

    config = ExperimentConfig.from_document(document, base_dir=path.parent)
    logger.debug("loaded %d scenarios from %s", len(config.scenarios), path)
    return config


def parse_rational(value: str) -> Fraction:
    """Parse ``"6/5"``, ``"1.2"`` or ``"2"`` exactly.

    Args:
        value (str): The text.

    Raises:
        ConfigError: If it is not a rational number.

    Returns:
        Fraction: The exact value.
    """
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        msg = f"Not a rational number: {value!r}"
        raise ConfigError(msg) from e

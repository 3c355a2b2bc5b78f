# SPDX-License-Identifier: MIT

"""kstrunc - A truncation-based Keller-Segel solver with a verification harness."""

__all__ = (
    "ExperimentConfig",
    "ProblemConfig",
    "ScenarioConfig",
    "Trajectory",
    "classify",
    "emit_report",
    "load_config",
    "run",
    "run_experiment",
)

from .config import ExperimentConfig, ScenarioConfig, load_config
from .harness import run_experiment
from .regime import classify
from .report import emit_report
from .stepper import ProblemConfig, Trajectory, run

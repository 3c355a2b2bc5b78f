# SPDX-License-Identifier: MIT
from __future__ import annotations

from enum import Enum, IntEnum
from typing import Any, TypeAlias, TypedDict


class _CoefficientRequired(TypedDict):
    family: str


class CoefficientDocument(_CoefficientRequired, total=False):
    values: list[float]
    period: float
    amplitude: float
    alpha: float
    beta: float
    matrix: list[list[float]]


class _SourceRequired(TypedDict):
    kind: str


class SourceDocument(_SourceRequired, total=False):
    value: float
    m: str
    margin: float
    center: list[float]


class SweepDocument(TypedDict, total=False):
    grid_sizes: list[int]
    n_values: list[float]
    dt_factor: float
    p_grid: list[float]
    entropy_levels: list[float]
    bochner_pairs: list[list[float]]


class _ScenarioRequired(TypedDict):
    id: str
    dim: int
    cells: int
    theta: float
    t_final: float
    dt: float
    source: SourceDocument


class ScenarioDocument(_ScenarioRequired, total=False):
    n_trunc: float
    fp_tol: float
    fp_max_iter: int
    solver_tol: float
    solver_max_iter: int
    A: CoefficientDocument
    M: CoefficientDocument
    sweep: SweepDocument
    seed: int
    dump: bool


class ExperimentDocument(TypedDict, total=False):
    scenarios: list[ScenarioDocument]
    output_dir: str
    slope_tol: float
    compressor: str


class DumpOpCode(IntEnum):
    RAW = 1
    COMPRESSED = 2


class SectionKind(IntEnum):
    BODY = 0
    FRAME_SEQUENCE = 1


class Regime(str, Enum):
    BOUNDED = "bounded"
    FINITE_ENERGY = "finite_energy"
    DISTRIBUTIONAL = "distributional"
    ENTROPY = "entropy"
    OUTSIDE_THEORY = "outside_theory"


Document: TypeAlias = dict[str, Any]


class Task(str, Enum):
    SOLVE = "solve"
    SWEEP = "sweep"
    VERIFY = "verify"

# SPDX-License-Identifier: MIT
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

if TYPE_CHECKING:
    from .typings import Document


@dataclass
class Result:
    passed: bool


@dataclass
class EllipticityReport(Result):
    """The result of sampling a coefficient against its declared bounds."""

    min_rayleigh: float
    """Smallest sampled xi.K xi / |xi|^2."""

    max_gain: float
    """Largest sampled |K xi| / |xi|."""


@dataclass
class PsiReport:
    """A priori quantities of one elliptic solve against ||f||_1^theta."""

    psi_sup: float
    grad_psi_l2: float
    psi_ratio: float
    grad_ratio: float
    source_work: float
    """<g, psi>, which bounds alpha ||grad psi||_2^2 from above."""


@dataclass
class StampacchiaReport:
    hypothesis_holds: bool
    d: float
    psi_at_d: float
    worst_ratio: float
    """Largest psi(h) / (M psi(k)^delta / (h - k)^gamma) over the mesh."""

    @property
    def zero_reached(self) -> bool:
        return self.psi_at_d <= ZERO_TOLERANCE


ZERO_TOLERANCE = 1e-12


@dataclass
class CheckResult(Result):
    """One invariant check of the verify suite."""

    name: str
    value: float
    threshold: float

    def to_document(self) -> Document:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": finite_or_str(self.value),
            "threshold": finite_or_str(self.threshold),
        }


class TruncationRow(NamedTuple):
    n: float
    psi_sup: float
    """max over t of ||psi_n(t)||_inf."""
    grad_psi: float
    """max over t of ||grad psi_n(t)||_2."""
    u_norm: float
    """||u_n|| in L^{m**}(Omega_T), or L^inf(Omega_T) for bounded data."""


@dataclass
class TruncationSweep:
    scenario_id: str
    u_exponent: float
    rows: list[TruncationRow]
    changes: list[dict[str, float]] = field(default_factory=list)
    """Relative changes between consecutive rows."""
    uniform: bool = False


@dataclass
class RefinementRow:
    cells: int
    h: float
    dt: float
    norms: dict[float, float]


@dataclass
class SummabilityReport:
    scenario_id: str
    p_grid: list[float]
    rows: list[RefinementRow]
    empirical_exponent: float
    m_dstar: float
    verdict: str

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


@dataclass
class ScenarioResult:
    scenario_id: str
    truncation: TruncationSweep | None = None
    refinement: SummabilityReport | None = None
    checks: list[CheckResult] = field(default_factory=list)
    norms: dict[str, float] = field(default_factory=dict)
    """Norms of the main run, keyed by a readable space name."""
    regime: Document = field(default_factory=dict)
    dump_path: str | None = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def finite_or_str(value: float) -> float | str:
    return value if math.isfinite(value) else str(value)

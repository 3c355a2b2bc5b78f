# SPDX-License-Identifier: MIT

"""Exponent calculus, regime classification and Stampacchia's lemma.

Exponent arithmetic is exact: every function here takes and returns
:class:`fractions.Fraction`, so the threshold comparisons that separate the
regimes never suffer from rounding. Only the Stampacchia numerics use floats.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .core.errors import (
    HypothesisViolationError,
    InvalidExponentError,
    UndefinedExponentError,
)
from .core.models import PredictedSpace
from .core.results import StampacchiaReport
from .core.typings import Regime

if TYPE_CHECKING:
    from collections.abc import Callable

    from .core.models import Exponent
    from .core.typings import Document

logger = logging.getLogger(__name__)

INF = math.inf
# relative slack when comparing both sides of the Stampacchia hypothesis
STAMPACCHIA_RTOL = 1e-9


def _rational(value: Fraction | int | str) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def star(p: Fraction | int | str, N: int) -> Fraction:
    """The parabolic Sobolev exponent ``p* = (N + 2) p / (N + 2 - p)``.

    Args:
        p (Fraction | int | str): The exponent, ``1 <= p < N + 2``.
        N (int): The space dimension.

    Raises:
        InvalidExponentError: If ``p < 1``.
        UndefinedExponentError: If ``p >= N + 2``.

    Returns:
        Fraction: ``p*``, exact.
    """
    p = _rational(p)
    if p < 1:
        raise InvalidExponentError(InvalidExponentError.msg)
    if p >= N + 2:
        msg = f"p* is defined for p < N + 2 = {N + 2}, got p = {p}"
        raise UndefinedExponentError(msg)
    return (N + 2) * p / (N + 2 - p)


def dstar(p: Fraction | int | str, N: int) -> Fraction:
    """The exponent ``p** = (N + 2) p / (N + 2 - 2p)``.

    Args:
        p (Fraction | int | str): The exponent, ``1 <= p < (N + 2) / 2``.
        N (int): The space dimension.

    Raises:
        InvalidExponentError: If ``p < 1``.
        UndefinedExponentError: If ``p >= (N + 2) / 2``.

    Returns:
        Fraction: ``p**``, exact.
    """
    p = _rational(p)
    if p < 1:
        raise InvalidExponentError(InvalidExponentError.msg)
    if 2 * p >= N + 2:
        msg = (
            f"p** is defined for p < (N + 2) / 2 = {Fraction(N + 2, 2)}, "
            f"got p = {p}"
        )
        raise UndefinedExponentError(msg)
    return (N + 2) * p / (N + 2 - 2 * p)


def gamma(m: Fraction | int | str, N: int) -> Fraction:
    """``gamma = N m / (2 (N + 2 - 2m))``.

    This is the power used to test with ``u^(2 gamma - 1)``.

    Args:
        m (Fraction | int | str): The summability, ``1 < m < (N + 2) / 2``.
        N (int): The space dimension.

    Raises:
        UndefinedExponentError: If ``m`` is out of range.

    Returns:
        Fraction: ``gamma``, exact.
    """
    m = _rational(m)
    if not 1 < m < Fraction(N + 2, 2):
        msg = f"gamma is defined for 1 < m < {Fraction(N + 2, 2)}, got m = {m}"
        raise UndefinedExponentError(msg)
    return N * m / (2 * (N + 2 - 2 * m))


def conjugate(m: Fraction | int | str) -> Fraction:
    """The Hoelder conjugate ``m / (m - 1)`` of ``m > 1``."""
    m = _rational(m)
    if m <= 1:
        msg = f"The conjugate exponent needs m > 1, got m = {m}"
        raise UndefinedExponentError(msg)
    return m / (m - 1)


def energy_threshold(N: int) -> Fraction:
    """``(2N + 4) / (N + 4)``, the lower end of the finite-energy range."""
    return Fraction(2 * N + 4, N + 4)


def distributional_threshold(N: int) -> Fraction:
    """``(2N + 4) / (N + 6)``, the lower end of the distributional range."""
    return Fraction(2 * N + 4, N + 6)


@dataclass
class RegimeReport:
    """What the existence theory predicts for data in ``L^m(Omega_T)``."""

    N: int
    m: Exponent
    regime: Regime
    m_star: Fraction | None = None
    m_dstar: Fraction | None = None
    gamma: Fraction | None = None
    predicted_spaces: list[PredictedSpace] = field(default_factory=list)

    @property
    def u_exponent(self) -> Exponent:
        """The space-time exponent u is predicted to reach: ``m**``, or ``inf``."""
        if self.regime is Regime.BOUNDED:
            return INF
        return self.m_dstar if self.m_dstar is not None else INF

    def to_document(self) -> Document:
        def render(value: Exponent | None) -> str | None:
            return None if value is None else str(value)

        return {
            "N": self.N,
            "m": render(self.m),
            "regime": self.regime.value,
            "m_star": render(self.m_star),
            "m_dstar": render(self.m_dstar),
            "gamma": render(self.gamma),
            "predicted_spaces": [space.describe() for space in self.predicted_spaces],
        }

    def table(self) -> list[tuple[str, str]]:
        """Rows of a two-column table, in a fixed order.

        Returns:
            list[tuple[str, str]]: ``(name, value)`` pairs.
        """
        document = self.to_document()
        rows = [
            (name, "-" if document[name] is None else str(document[name]))
            for name in ("N", "m", "regime", "m_star", "m_dstar", "gamma")
        ]
        rows.extend(("predicts", space) for space in document["predicted_spaces"])
        return rows


def _predicted_spaces(regime: Regime, m: Fraction, N: int) -> list[PredictedSpace]:
    if regime is Regime.BOUNDED:
        return [
            PredictedSpace(INF, 2),
            PredictedSpace(2, 2, with_gradient=True),
            PredictedSpace(INF, INF),
        ]
    if 2 * m == N + 2:
        # borderline: every finite exponent, no m**
        return [
            PredictedSpace(INF, INF, strict=True),
            PredictedSpace(2, 2, with_gradient=True),
        ]

    m_star = star(m, N)
    m_dstar = dstar(m, N)
    if regime is Regime.FINITE_ENERGY:
        return [
            PredictedSpace(INF, N * m / (N + 2 - 2 * m)),
            PredictedSpace(2, 2, with_gradient=True),
            PredictedSpace(m_dstar, m_dstar),
        ]
    if regime is Regime.DISTRIBUTIONAL:
        return [
            PredictedSpace(INF, N * m / (N + 2 - 2 * m)),
            PredictedSpace(m_star, m_star, with_gradient=True),
            PredictedSpace(m_dstar, m_dstar),
        ]
    if m > 1:
        return [
            PredictedSpace(INF, 1),
            PredictedSpace(m_dstar, m_dstar),
            PredictedSpace(m_star, m_star, with_gradient=True),
        ]
    return [
        PredictedSpace(INF, 1),
        PredictedSpace(m_dstar, m_dstar, strict=True),
        PredictedSpace(m_star, m_star, with_gradient=True, strict=True),
    ]


def classify(m: Exponent | int | str, N: int) -> RegimeReport:
    """Place ``f in L^m(Omega_T)`` in one of the four existence regimes.

    The lower thresholds belong to the upper regime. ``m = (N + 2) / 2``
    counts as finite energy with every finite exponent predicted. ``N = 2``
    gets its exponents but is tagged ``outside_theory``.

    Args:
        m (Exponent | int | str): The summability of f, exact or ``inf``.
        N (int): The space dimension.

    Raises:
        InvalidExponentError: If ``m < 1`` or ``N < 2``.

    Returns:
        RegimeReport: The classification.
    """
    if N < 2:  # noqa: PLR2004
        msg = f"Regime analysis needs N >= 2, got N = {N}"
        raise InvalidExponentError(msg)
    if isinstance(m, float) and math.isinf(m):
        regime = Regime.BOUNDED if N > 2 else Regime.OUTSIDE_THEORY  # noqa: PLR2004
        spaces = _predicted_spaces(Regime.BOUNDED, Fraction(0), N)
        return RegimeReport(
            N, INF, regime, predicted_spaces=spaces if N > 2 else []  # noqa: PLR2004
        )

    m = _rational(m)
    if m < 1:
        msg = f"Source summability must satisfy m >= 1, got m = {m}"
        raise InvalidExponentError(msg)

    if 2 * m > N + 2:
        regime = Regime.BOUNDED
    elif m >= energy_threshold(N):
        regime = Regime.FINITE_ENERGY
    elif m >= distributional_threshold(N):
        regime = Regime.DISTRIBUTIONAL
    else:
        regime = Regime.ENTROPY

    report = RegimeReport(
        N,
        m,
        regime,
        m_star=star(m, N) if m < N + 2 else None,
        m_dstar=dstar(m, N) if 2 * m < N + 2 else None,
        gamma=gamma(m, N) if 1 < m < Fraction(N + 2, 2) else None,
        predicted_spaces=_predicted_spaces(regime, m, N),
    )
    if N == 2:  # noqa: PLR2004
        report.regime = Regime.OUTSIDE_THEORY
        report.predicted_spaces = []
    logger.debug("classified m=%s N=%d as %s", m, N, report.regime.value)
    return report


def stampacchia_zero(
    M_const: float,
    delta: float,
    gamma_exp: float,
    psi0: float,
) -> float:
    """The level ``d`` past which ``psi`` vanishes.

    ``d^gamma = M psi(0)^(delta - 1) 2^(delta gamma / (delta - 1))``.

    Args:
        M_const (float): The constant of the hypothesis, positive.
        delta (float): The power on ``psi(k)``, above 1.
        gamma_exp (float): The power on ``h - k``, positive.
        psi0 (float): ``psi(0)``, nonnegative.

    Raises:
        HypothesisViolationError: If a parameter is out of range.

    Returns:
        float: ``d``; ``psi(d) = 0`` whenever the hypothesis holds.
    """
    if not delta > 1:
        msg = f"Stampacchia's lemma needs delta > 1, got {delta}"
        raise HypothesisViolationError(msg)
    if not (M_const > 0 and gamma_exp > 0 and psi0 >= 0):
        msg = "Stampacchia's lemma needs M > 0, gamma > 0 and psi(0) >= 0"
        raise HypothesisViolationError(msg)
    power = M_const * psi0 ** (delta - 1) * 2 ** (delta * gamma_exp / (delta - 1))
    return power ** (1 / gamma_exp)


def _ratios(
    sampler: Callable[[float], float],
    delta: float,
    gamma_exp: float,
    h_max: float,
    samples: int,
) -> np.ndarray:
    mesh = np.linspace(0.0, h_max, samples)
    values = np.array([sampler(float(h)) for h in mesh])
    k, h = np.triu_indices(samples, 1)
    numerator = values[h] * (mesh[h] - mesh[k]) ** gamma_exp
    denominator = values[k] ** delta
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(numerator > 0, numerator / denominator, 0.0)
    return ratios


def fit_stampacchia_constant(
    sampler: Callable[[float], float],
    delta: float,
    gamma_exp: float,
    h_max: float,
    samples: int = 201,
) -> float:
    """The smallest M for which the hypothesis holds on the sample mesh.

    Args:
        sampler (Callable[[float], float]): A nonincreasing nonnegative function.
        delta (float): The power on ``psi(k)``.
        gamma_exp (float): The power on ``h - k``.
        h_max (float): The end of the mesh.
        samples (int, optional): Mesh points. Defaults to 201.

    Returns:
        float: ``max psi(h) (h - k)^gamma / psi(k)^delta`` over ``k < h``.
    """
    ratios = _ratios(sampler, delta, gamma_exp, h_max, samples)
    return float(np.max(ratios, initial=0.0))


def stampacchia_verify(
    sampler: Callable[[float], float],
    M_const: float,
    delta: float,
    gamma_exp: float,
    h_max: float,
    samples: int = 201,
) -> StampacchiaReport:
    """Check the hypothesis on a mesh, then check that ``psi`` vanishes at ``d``.

    Failures are reported, never raised.

    Args:
        sampler (Callable[[float], float]): ``psi``, nonincreasing on ``[0, h_max]``.
        M_const (float): The constant of the hypothesis.
        delta (float): The power on ``psi(k)``.
        gamma_exp (float): The power on ``h - k``.
        h_max (float): The end of the mesh.
        samples (int, optional): Mesh points. Defaults to 201.

    Returns:
        StampacchiaReport: Whether the hypothesis holds, ``d`` and ``psi(d)``.
    """
    psi0 = float(sampler(0.0))
    try:
        d = stampacchia_zero(M_const, delta, gamma_exp, psi0)
    except HypothesisViolationError as e:
        logger.warning("stampacchia: %s", e)
        return StampacchiaReport(
            hypothesis_holds=False, d=math.nan, psi_at_d=math.nan, worst_ratio=math.inf
        )

    ratios = _ratios(sampler, delta, gamma_exp, h_max, samples)
    worst = float(np.max(ratios, initial=0.0)) / M_const
    holds = worst <= 1 + STAMPACCHIA_RTOL
    psi_at_d = float(sampler(d))
    logger.debug(
        "stampacchia: worst ratio %.4g, d=%.6g, psi(d)=%.3e", worst, d, psi_at_d
    )
    return StampacchiaReport(
        hypothesis_holds=holds,
        d=d,
        psi_at_d=psi_at_d,
        worst_ratio=worst,
    )

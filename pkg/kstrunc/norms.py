# SPDX-License-Identifier: MIT

"""Bochner norms of trajectories and the inequality diagnostics built on them.

Time integrals use the left-endpoint rule: stamps ``j = 0 .. J - 1`` with
weight ``dt``, where ``J = len(traj) - 1``. A single-stamp trajectory counts
its only stamp once. ``L^inf`` in time takes the maximum over every stamp.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .coefficients import face_coefficients
from .core.errors import InvalidExponentError, InvalidLevelError
from .grid import (
    FluxField,
    ScalarField,
    gradient,
    level_set_measure,
    weighted_lp_norm,
)
from .stepper import drift_flux
from .truncations import t_k, theta_k

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from .core.models import Exponent
    from .stepper import Trajectory

logger = logging.getLogger(__name__)

SLOPE_TOL = 0.05
MIN_REFINEMENTS = 3


@dataclass(frozen=True)
class BochnerSpec:
    """The Bochner space ``L^outer(0, T; L^inner)``.

    With ``with_gradient`` the space factor is ``W^{1,inner}_0`` instead.
    """

    outer: Exponent
    inner: Exponent
    with_gradient: bool = False

    def __post_init__(self) -> None:
        if not (self.outer >= 1 and self.inner >= 1):
            raise InvalidExponentError(InvalidExponentError.msg)


def _left_stamps(traj: Trajectory) -> range:
    return range(max(len(traj) - 1, 1))


def gradient_norm(field: ScalarField, q: Exponent) -> float:
    """``(h^N sum_axes sum_faces |d v|^q)^(1/q)``, or the largest face difference.

    Args:
        field (ScalarField): The field.
        q (Exponent): The exponent.

    Raises:
        InvalidExponentError: If ``q < 1``.

    Returns:
        float: The discrete ``||grad v||_q``.
    """
    flux = gradient(field)
    flat = np.concatenate([c.ravel() for c in flux.components])
    return weighted_lp_norm(flat, float(q), field.grid.cell_volume)


def _spatial(field: ScalarField, spec: BochnerSpec) -> float:
    if spec.with_gradient:
        return gradient_norm(field, spec.inner)
    return weighted_lp_norm(
        field.values, float(spec.inner), field.grid.cell_volume
    )


def bochner_norm(traj: Trajectory, spec: BochnerSpec) -> float:
    """Discrete ``||u||`` in the Bochner space described by ``spec``.

    Args:
        traj (Trajectory): The trajectory.
        spec (BochnerSpec): The space.

    Raises:
        InvalidExponentError: If an exponent is below 1.

    Returns:
        float: The norm.
    """
    if math.isinf(spec.outer):
        return max(_spatial(u, spec) for u in traj.u)

    r = float(spec.outer)
    total = sum(_spatial(traj.u[j], spec) ** r for j in _left_stamps(traj))
    return float((traj.dt * total) ** (1.0 / r))


def space_time_lp_norm(traj: Trajectory, p: Exponent) -> float:
    """``||u||_{L^p(Omega_T)}`` over the flattened left-endpoint stamps.

    Args:
        traj (Trajectory): The trajectory.
        p (Exponent): The exponent.

    Raises:
        InvalidExponentError: If ``p < 1``.

    Returns:
        float: The norm; ``p = inf`` takes every stamp.
    """
    stamps = range(len(traj)) if math.isinf(p) else _left_stamps(traj)
    flat = np.concatenate([traj.u[j].values.ravel() for j in stamps])
    return weighted_lp_norm(flat, float(p), traj.dt * traj.grid.cell_volume)


def mass(field: ScalarField) -> float:
    """``h^N sum |u|``."""
    return field.grid.cell_volume * float(np.sum(np.abs(field.values)))


def source_mass(traj: Trajectory, t_index: int | None = None) -> float:
    """``||T_n(f)||_{L^1(Omega_t)}`` as the solver integrated it, step by step.

    Args:
        traj (Trajectory): The trajectory.
        t_index (int | None, optional): Last stamp, defaults to the final one.

    Returns:
        float: ``dt * sum_{j=1..t_index} h^N sum |T_n(f_j)|``.
    """
    last = len(traj) - 1 if t_index is None else t_index
    total = sum(
        float(np.sum(np.abs(t_k(traj.sources[j].values, traj.n_trunc))))
        for j in range(1, last + 1)
    )
    return traj.dt * traj.grid.cell_volume * total


def gn_ratio(traj: Trajectory) -> float:
    """Left side over right side of the parabolic Gagliardo-Nirenberg inequality.

    ``int |u|^{2(N+2)/N}`` against
    ``||u||_{L^inf(L^2)}^{4/N} ||grad u||_{L^2(Omega_T)}^2``.
    Both sides are homogeneous of the same degree, so the ratio does not
    change under ``u -> lambda u``.

    Args:
        traj (Trajectory): The trajectory.

    Returns:
        float: The ratio, 0 for a zero trajectory.
    """
    grid = traj.grid
    dim = grid.dim
    power = 2 * (dim + 2) / dim
    stamps = _left_stamps(traj)

    lhs = traj.dt * grid.cell_volume * sum(
        float(np.sum(np.abs(traj.u[j].values) ** power)) for j in stamps
    )
    if lhs == 0:
        return 0.0
    sup_l2 = max(
        weighted_lp_norm(u.values, 2.0, grid.cell_volume) for u in traj.u
    )
    energy = traj.dt * sum(gradient_norm(traj.u[j], 2) ** 2 for j in stamps)
    return lhs / (sup_l2 ** (4 / dim) * energy)


def truncated_energy(traj: Trajectory, k: float) -> float:
    """``||grad T_k(u)||_{L^2(Omega_T)}^2``; ``k = inf`` gives the full energy.

    Args:
        traj (Trajectory): The trajectory.
        k (float): The level.

    Raises:
        InvalidLevelError: If ``k < 0``.

    Returns:
        float: The truncated energy.
    """
    grid = traj.grid
    return traj.dt * sum(
        gradient_norm(ScalarField(grid, t_k(traj.u[j].values, k)), 2) ** 2
        for j in _left_stamps(traj)
    )


def level_set_profile(traj: Trajectory, levels: Sequence[float]) -> list[float]:
    """Space-time measure of ``{u >= k}`` for every level.

    Args:
        traj (Trajectory): The trajectory.
        levels (Sequence[float]): The levels.

    Returns:
        list[float]: ``dt * sum_j |{u_j >= k}|``, nonincreasing in ``k``.
    """
    stamps = _left_stamps(traj)
    return [
        traj.dt * sum(level_set_measure(traj.u[j], k) for j in stamps)
        for k in levels
    ]


def _face_dot(first: FluxField, second: FluxField) -> float:
    return sum(
        float(np.sum(a * b))
        for a, b in zip(first.components, second.components, strict=True)
    )


class EntropyTerms(NamedTuple):
    """The integrals of the entropy inequality with ``phi = 0``."""

    energy: float
    """``int Theta_k(u(t)) - int Theta_k(u(0))``."""
    dissipation: float
    """``int int A grad u . grad T_k(u)``."""
    drift: float
    """``int int u M grad psi . grad T_k(u)``."""
    source: float
    """``int int T_n(f) T_k(u)``."""

    @property
    def residual(self) -> float:
        return self.energy + self.dissipation - self.drift - self.source

    @property
    def scale(self) -> float:
        """Sum of magnitudes, the size the residual is compared against."""
        return (
            abs(self.energy)
            + abs(self.dissipation)
            + abs(self.drift)
            + abs(self.source)
        )


def entropy_terms(traj: Trajectory, k: float, t_index: int) -> EntropyTerms:
    """Evaluate the entropy inequality terms up to stamp ``t_index``.

    Every backward-Euler step is integrated at its own end time ``t_j``: the
    flux of step ``j`` is read from ``u_j``, ``psi_j`` and ``A(t_j)``. The drift
    uses the untruncated density with the solver's upwinding.

    Args:
        traj (Trajectory): The trajectory.
        k (float): The level.
        t_index (int): The stamp ``t`` is evaluated at.

    Raises:
        InvalidLevelError: If ``k < 0``.
        IndexError: If ``t_index`` is not a stamp.

    Returns:
        EntropyTerms: The four terms.
    """
    if not k >= 0:
        raise InvalidLevelError(InvalidLevelError.msg)
    if not 0 <= t_index < len(traj):
        msg = f"Stamp {t_index} outside 0 .. {len(traj) - 1}"
        raise IndexError(msg)

    grid = traj.grid
    volume = grid.cell_volume
    energy = volume * float(
        np.sum(theta_k(traj.u[t_index].values, k))
        - np.sum(theta_k(traj.u[0].values, k))
    )

    m_faces = face_coefficients(traj.M, grid, 0.0)
    dissipation = drift = source = 0.0
    for j in range(1, t_index + 1):
        u = traj.u[j]
        truncated = ScalarField(grid, t_k(u.values, k))
        test = gradient(truncated)
        a_faces = face_coefficients(traj.A, grid, j * traj.dt)
        diffusive = FluxField(
            grid,
            tuple(
                c * d for c, d in zip(a_faces, gradient(u).components, strict=True)
            ),
        )
        transport = drift_flux(u, traj.psi[j], traj.M, math.inf, faces=m_faces)
        dissipation += _face_dot(diffusive, test)
        drift += _face_dot(transport, test)
        source += float(
            np.sum(t_k(traj.sources[j].values, traj.n_trunc) * truncated.values)
        )

    weight = traj.dt * volume
    return EntropyTerms(energy, weight * dissipation, weight * drift, weight * source)


def entropy_residual(traj: Trajectory, k: float, t_index: int) -> float:
    """LHS - RHS of the entropy inequality with ``phi = 0``.

    On solver output this is at most round-off.

    Args:
        traj (Trajectory): The trajectory.
        k (float): The level.
        t_index (int): The stamp.

    Returns:
        float: The residual, exactly 0 for ``k = 0``.
    """
    return entropy_terms(traj, k, t_index).residual


def _slope(samples: Sequence[tuple[float, float]]) -> float:
    h = np.array([sample[0] for sample in samples], dtype=np.float64)
    values = np.array([sample[1] for sample in samples], dtype=np.float64)
    if np.all(values == 0):
        return 0.0
    if np.any(values <= 0):
        return math.inf
    slope, _ = np.polyfit(np.log(1.0 / h), np.log(values), 1)
    return float(slope)


def empirical_exponent(
    norms: Mapping[float, Sequence[tuple[float, float]]],
    p_grid: Sequence[float],
    slope_tol: float = SLOPE_TOL,
) -> float:
    """The largest exponent whose norms stay put under refinement.

    Args:
        norms (Mapping[float, Sequence[tuple[float, float]]]): ``(h, ||u_h||_p)``
            samples per exponent ``p``.
        p_grid (Sequence[float]): The exponents to consider.
        slope_tol (float, optional): Largest slope of ``log ||u_h||_p`` against
            ``log(1/h)`` that still counts as stable. Defaults to SLOPE_TOL.

    Raises:
        ValueError: If an exponent has fewer than three refinement levels.

    Returns:
        float: The largest stable ``p``, or 0 if none is stable.
    """
    stable = 0.0
    for p in p_grid:
        samples = norms[p]
        if len(samples) < MIN_REFINEMENTS:
            msg = (
                f"Need at least {MIN_REFINEMENTS} refinement levels, "
                f"got {len(samples)}"
            )
            raise ValueError(msg)
        slope = _slope(samples)
        logger.debug("p=%g: slope %.4f", p, slope)
        if slope <= slope_tol:
            stable = max(stable, float(p))
    return stable

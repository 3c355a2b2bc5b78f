# SPDX-License-Identifier: MIT

"""Time integration of the truncated approximating system.

Each backward-Euler step freezes an iterate ``w`` in both equations, solves
the elliptic equation for ``eta`` and the linear parabolic equation for
``v``, and repeats with ``w = v`` until the iterates settle: the discrete
counterpart of the Schauder map ``w -> v``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientField, face_coefficients
from .core.errors import (
    ConfigError,
    FixedPointError,
    IterationLimitError,
    PositivityError,
    RunError,
    StepError,
)
from .core.models import StepInfo
from .elliptic import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    assemble_operator,
    conjugate_gradient,
)
from .grid import FluxField, ScalarField, SpaceGrid, divergence, gradient, pad_axis
from .sources import SourceSpec, generate_source
from .truncations import nonnegative_part, nonnegative_power, t_k

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

DEFAULT_FP_TOL = 1e-8
DEFAULT_FP_MAX_ITER = 50
# at or below FP_DT_THRESHOLD the shipped scenarios settle within
# FP_ITERATION_BOUND fixed-point iterations per step
FP_ITERATION_BOUND = 10
FP_DT_THRESHOLD = 1e-3
DEFAULT_N_TRUNC = 1000.0


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """Everything one run of the approximating system needs."""

    grid: SpaceGrid
    theta: float
    t_final: float
    dt: float
    A: CoefficientField = field(default_factory=CoefficientField.identity)
    M: CoefficientField = field(default_factory=CoefficientField.identity)
    source: SourceSpec = field(default_factory=SourceSpec.constant)
    n_trunc: float = DEFAULT_N_TRUNC
    fp_tol: float = DEFAULT_FP_TOL
    fp_max_iter: int = DEFAULT_FP_MAX_ITER
    solver_tol: float = DEFAULT_TOL
    solver_max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        dim = self.grid.dim
        if not 0 < self.theta < 2 / dim:
            msg = f"theta must lie in (0, 2/N) = (0, {2 / dim:g}), got {self.theta}"
            raise ConfigError(msg)
        if not self.t_final > 0:
            msg = f"Final time must be positive, got {self.t_final}"
            raise ConfigError(msg)
        if not 0 < self.dt <= self.t_final:
            msg = f"Time step must lie in (0, T_final], got {self.dt}"
            raise ConfigError(msg)
        if not self.n_trunc >= 1:
            msg = f"Truncation level must satisfy n >= 1, got {self.n_trunc}"
            raise ConfigError(msg)
        if self.M.time_dependent:
            msg = "The drift coefficient M must not depend on time"
            raise ConfigError(msg)
        for name, coefficient in (("A", self.A), ("M", self.M)):
            if not coefficient.diagonal:
                msg = (
                    f"Coefficient {name} uses the {coefficient.family.value} family, "
                    "only diagonal families can be discretized"
                )
                raise ConfigError(msg)
        if not 0 < self.fp_tol < 1 or self.fp_max_iter < 1:
            msg = "Fixed-point tolerance must lie in (0, 1) with at least one iteration"
            raise ConfigError(msg)
        self.source.validate(self.grid)

    @property
    def steps(self) -> int:
        # round first so that 0.05 / 0.001 counts 50 steps, not 51
        return max(1, math.ceil(round(self.t_final / self.dt, 9)))

    def with_dt(self, dt: float) -> ProblemConfig:
        return replace(self, dt=dt)

    def with_truncation(self, n_trunc: float) -> ProblemConfig:
        return replace(self, n_trunc=n_trunc)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fields at the stamps ``t_j = j * dt`` with per-step metadata.

    Solver trajectories start from ``u_0 = psi_0 = 0``. ``sources`` holds the
    untruncated f(., t_j); ``steps[j - 1]`` describes the step that produced
    stamp ``j``.
    """

    grid: SpaceGrid
    dt: float
    u: tuple[ScalarField, ...]
    psi: tuple[ScalarField, ...]
    sources: tuple[ScalarField, ...]
    A: CoefficientField = field(default_factory=CoefficientField.identity)
    M: CoefficientField = field(default_factory=CoefficientField.identity)
    theta: float = 0.5
    n_trunc: float = math.inf
    steps: tuple[StepInfo, ...] = ()

    def __post_init__(self) -> None:
        if not self.u:
            msg = "A trajectory needs at least one stamp"
            raise ValueError(msg)
        if not len(self.u) == len(self.psi) == len(self.sources):
            msg = "u, psi and sources must have one field per stamp"
            raise ValueError(msg)

    @classmethod
    def from_fields(
        cls,
        grid: SpaceGrid,
        dt: float,
        u: Sequence[ScalarField],
        psi: Sequence[ScalarField] | None = None,
    ) -> Trajectory:
        """Wrap given u fields, with psi and sources defaulting to zero.

        Args:
            grid (SpaceGrid): The grid.
            dt (float): The stamp spacing.
            u (Sequence[ScalarField]): One field per stamp.
            psi (Sequence[ScalarField] | None, optional): One field per stamp.

        Returns:
            Trajectory: The trajectory.
        """
        zero = ScalarField.zeros(grid)
        return cls(
            grid,
            dt,
            tuple(u),
            tuple(psi) if psi is not None else (zero,) * len(u),
            (zero,) * len(u),
        )

    @property
    def times(self) -> NDArray[np.float64]:
        return np.arange(len(self.u)) * self.dt

    def __len__(self) -> int:
        return len(self.u)


class StepOutcome(NamedTuple):
    u: ScalarField
    psi: ScalarField
    iterations: int
    info: StepInfo
    source: ScalarField


def _neighbours(
    values: NDArray[np.float64], axis: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Values at the low and high node of every face on ``axis``."""
    padded = pad_axis(values, axis)
    low = [slice(None)] * values.ndim
    high = [slice(None)] * values.ndim
    low[axis] = slice(None, -1)
    high[axis] = slice(1, None)
    return padded[tuple(low)], padded[tuple(high)]


def face_velocities(
    psi: ScalarField, faces: Sequence[NDArray[np.float64]]
) -> tuple[NDArray[np.float64], ...]:
    """Drift velocity ``c_M * d psi`` on every face.

    Args:
        psi (ScalarField): The chemical potential.
        faces (Sequence[NDArray[np.float64]]): Face coefficients of M.

    Returns:
        tuple[NDArray[np.float64], ...]: One array per axis.
    """
    return tuple(
        c * d for c, d in zip(faces, gradient(psi).components, strict=True)
    )


def drift_flux(
    u: ScalarField,
    psi: ScalarField,
    M: CoefficientField,
    n_trunc: float,
    *,
    faces: Sequence[NDArray[np.float64]] | None = None,
) -> FluxField:
    """Upwinded face flux of ``T_n(u) M grad psi``.

    The face velocity is ``V = c_M * d psi``; the density is read at the node
    the flux comes from: the low node when ``V > 0``, the high node otherwise.
    Boundary nodes read as 0.

    Args:
        u (ScalarField): The density.
        psi (ScalarField): The chemical potential.
        M (CoefficientField): The drift coefficient.
        n_trunc (float): Truncation level, ``inf`` for the untruncated flux.
        faces (Sequence[NDArray[np.float64]] | None, optional): Precomputed face
            coefficients of M.

    Returns:
        FluxField: The flux.
    """
    if faces is None:
        faces = face_coefficients(M, u.grid, 0.0)
    density = t_k(u.values, n_trunc)
    components = []
    for axis, velocity in enumerate(face_velocities(psi, faces)):
        low, high = _neighbours(density, axis)
        components.append(velocity * np.where(velocity > 0, low, high))
    return FluxField(u.grid, tuple(components))


def courant_number(
    velocities: Sequence[NDArray[np.float64]], dt: float, h: float
) -> float:
    """``dt / h`` times the largest total outflow velocity of a node.

    Args:
        velocities (Sequence[NDArray[np.float64]]): Face velocities per axis.
        dt (float): The time step.
        h (float): The mesh size.

    Returns:
        float: The drift Courant number.
    """
    outflow: NDArray[np.float64] | float = 0.0
    for axis, velocity in enumerate(velocities):
        forward = np.clip(velocity, 0.0, None)
        backward = np.clip(-velocity, 0.0, None)
        tail = [slice(None)] * velocity.ndim
        head = [slice(None)] * velocity.ndim
        tail[axis] = slice(1, None)
        head[axis] = slice(None, -1)
        outflow = outflow + forward[tuple(tail)] + backward[tuple(head)]
    return float(dt / h * np.max(outflow))


def _l2(values: NDArray[np.float64], grid: SpaceGrid) -> float:
    return float(np.sqrt(grid.cell_volume * np.sum(values**2)))


class CoupledStepper:
    """Backward-Euler stepper with a per-step fixed-point loop."""

    def __init__(self, cfg: ProblemConfig) -> None:
        """Create a new CoupledStepper instance.

        Args:
            cfg (ProblemConfig): The problem.
        """
        self.cfg = cfg
        grid = cfg.grid
        self._m_faces = face_coefficients(cfg.M, grid, 0.0)
        self._elliptic = assemble_operator(grid, cfg.M, 0.0)
        self._identity = sp.identity(grid.node_count, format="csr")
        self._parabolic: sp.csr_matrix | None = None

    def __repr__(self) -> str:
        cfg = self.cfg
        return (
            f"<CoupledStepper N={cfg.grid.dim} n_x={cfg.grid.cells_per_axis} "
            f"dt={cfg.dt:g} n={cfg.n_trunc:g}>"
        )

    def _parabolic_operator(self, t: float) -> sp.csr_matrix:
        if self._parabolic is not None:
            return self._parabolic
        cfg = self.cfg
        operator = (
            self._identity / cfg.dt + assemble_operator(cfg.grid, cfg.A, t)
        ).tocsr()
        if not cfg.A.time_dependent:
            self._parabolic = operator
        return operator

    def _solve(
        self, operator: sp.csr_matrix, rhs: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], float]:
        cfg = self.cfg
        values, residual = conjugate_gradient(
            operator, rhs.ravel(), tol=cfg.solver_tol, max_iter=cfg.solver_max_iter
        )
        return values.reshape(cfg.grid.shape), residual

    def schauder_step(self, u_prev: ScalarField, t: float) -> StepOutcome:
        """Advance from ``t`` to ``t + dt``.

        Args:
            u_prev (ScalarField): The density at ``t``.
            t (float): The current time.

        Raises:
            FixedPointError: If the iterates do not settle within ``fp_max_iter``.
            PositivityError: If the linear step would leave the nonnegative cone.
            IterationLimitError: If a linear solve fails.

        Returns:
            StepOutcome: ``v`` and the ``eta`` it was transported by.
        """
        cfg = self.cfg
        grid = cfg.grid
        t_next = t + cfg.dt
        source = generate_source(cfg.source, grid, t_next)
        forcing = t_k(source.values, cfg.n_trunc)
        parabolic = self._parabolic_operator(t_next)

        w = u_prev.values
        change = math.inf
        for iteration in range(1, cfg.fp_max_iter + 1):
            density = nonnegative_power(t_k(w, cfg.n_trunc), cfg.theta)
            eta_values, elliptic_residual = self._solve(self._elliptic, density)
            # CG round-off may dip below the exact nonnegative solution
            eta = ScalarField(grid, nonnegative_part(eta_values))

            flux = drift_flux(
                ScalarField(grid, w), eta, cfg.M, cfg.n_trunc, faces=self._m_faces
            )
            rhs = u_prev.values / cfg.dt + forcing - divergence(flux).values
            lowest = float(rhs.min())
            if lowest < 0:
                courant = courant_number(
                    face_velocities(eta, self._m_faces), cfg.dt, grid.h
                )
                msg = (
                    f"Drift outflow exceeds the available mass at t={t_next:g} "
                    f"(courant {courant:.3f})"
                )
                raise PositivityError(msg, -lowest)

            v, parabolic_residual = self._solve(parabolic, rhs)
            v = nonnegative_part(v)
            change = _l2(v - w, grid) / max(1.0, _l2(w, grid))
            logger.debug(
                "t=%g iteration %d: change=%.3e", t_next, iteration, change
            )
            if change <= cfg.fp_tol:
                info = StepInfo(
                    iterations=iteration,
                    change=change,
                    residual=max(elliptic_residual, parabolic_residual),
                    courant=courant_number(
                        face_velocities(eta, self._m_faces), cfg.dt, grid.h
                    ),
                )
                return StepOutcome(ScalarField(grid, v), eta, iteration, info, source)
            w = v

        raise FixedPointError(change, cfg.fp_max_iter)

    def run(self) -> Trajectory:
        """Integrate from ``u_0 = 0`` over ``ceil(T_final / dt)`` steps.

        Raises:
            RunError: If a step fails, with the step index.

        Returns:
            Trajectory: The computed trajectory.
        """
        cfg = self.cfg
        zero = ScalarField.zeros(cfg.grid)
        u = [zero]
        psi = [zero]
        sources = [generate_source(cfg.source, cfg.grid, 0.0)]
        infos: list[StepInfo] = []

        logger.info("running %r for %d steps", self, cfg.steps)
        for step in range(1, cfg.steps + 1):
            try:
                outcome = self.schauder_step(u[-1], (step - 1) * cfg.dt)
            except (StepError, IterationLimitError) as e:
                raise RunError(step, e) from e
            u.append(outcome.u)
            psi.append(outcome.psi)
            sources.append(outcome.source)
            infos.append(outcome.info)

        most = max(info.iterations for info in infos)
        logger.info(
            "finished %r, at most %d fixed-point iterations per step", self, most
        )
        if most > FP_ITERATION_BOUND:
            logger.warning(
                "%r needed %d fixed-point iterations in one step, "
                "a time step of at most %g usually needs at most %d",
                self,
                most,
                FP_DT_THRESHOLD,
                FP_ITERATION_BOUND,
            )
        return Trajectory(
            cfg.grid,
            cfg.dt,
            tuple(u),
            tuple(psi),
            tuple(sources),
            A=cfg.A,
            M=cfg.M,
            theta=cfg.theta,
            n_trunc=cfg.n_trunc,
            steps=tuple(infos),
        )


def schauder_step(u_prev: ScalarField, t: float, cfg: ProblemConfig) -> StepOutcome:
    """Advance one step of ``cfg`` from ``(u_prev, t)``.

    Args:
        u_prev (ScalarField): The density at ``t``.
        t (float): The current time.
        cfg (ProblemConfig): The problem.

    Returns:
        StepOutcome: The new density, potential and iteration count.
    """
    return CoupledStepper(cfg).schauder_step(u_prev, t)


def run(cfg: ProblemConfig) -> Trajectory:
    """Integrate the problem from zero initial data.

    Args:
        cfg (ProblemConfig): The problem.

    Returns:
        Trajectory: The computed trajectory.
    """
    return CoupledStepper(cfg).run()

# SPDX-License-Identifier: MIT

"""Zero-Dirichlet solves of -div(M grad psi) = g on one time slice."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .coefficients import CoefficientField, face_coefficients
from .core.errors import IterationLimitError
from .core.results import PsiReport
from .grid import ScalarField, SpaceGrid, gradient, inner_product, lp_norm
from .truncations import nonnegative_part

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
# CG restarts from the current iterate when the recursive residual drifts
# away from the true one
MAX_RESTARTS = 3


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    grid: SpaceGrid
    M: CoefficientField
    g: ScalarField
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if not 0 < self.tol < 1:
            msg = f"Tolerance must lie in (0, 1), got {self.tol}"
            raise ValueError(msg)
        if self.M.time_dependent:
            msg = "The elliptic coefficient must not depend on time"
            raise ValueError(msg)
        if self.g.grid != self.grid:
            msg = "Right-hand side lives on a different grid"
            raise ValueError(msg)


def assemble_operator(grid: SpaceGrid, K: CoefficientField, t: float) -> sp.csr_matrix:
    """Assemble ``-div(K grad .)`` with harmonic-mean face coefficients.

    Args:
        grid (SpaceGrid): The grid.
        K (CoefficientField): A diagonal coefficient family.
        t (float): The time at which K is sampled.

    Raises:
        UnsupportedAnisotropyError: If ``K`` is not diagonal.

    Returns:
        sp.csr_matrix: The symmetric positive-definite M-matrix.
    """
    operator = sp.csr_matrix((grid.node_count, grid.node_count))
    for axis, coefficient in enumerate(face_coefficients(K, grid, t)):
        difference = grid.difference_operator(axis)
        operator = operator + difference.T @ sp.diags(coefficient.ravel()) @ difference
    return (operator / grid.h**2).tocsr()


def assemble(problem: EllipticProblem) -> sp.csr_matrix:
    """Assemble the operator of an elliptic problem.

    Args:
        problem (EllipticProblem): The problem.

    Returns:
        sp.csr_matrix: The operator.
    """
    return assemble_operator(problem.grid, problem.M, 0.0)


def conjugate_gradient(
    operator: sp.csr_matrix,
    rhs: NDArray[np.float64],
    *,
    tol: float,
    max_iter: int,
) -> tuple[NDArray[np.float64], float]:
    """Jacobi-preconditioned CG with a true-residual acceptance test.

    Args:
        operator (sp.csr_matrix): An SPD matrix.
        rhs (NDArray[np.float64]): The flat right-hand side.
        tol (float): Relative residual tolerance.
        max_iter (int): Iteration budget per attempt.

    Raises:
        IterationLimitError: If the true relative residual stays above ``tol``.

    Returns:
        tuple[NDArray[np.float64], float]: The solution and its relative residual.
    """
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0:
        return np.zeros_like(rhs), 0.0

    preconditioner = sp.diags(1.0 / operator.diagonal())
    solution = np.zeros_like(rhs)
    residual = 1.0
    for attempt in range(MAX_RESTARTS):
        solution, info = sla.cg(
            operator,
            rhs,
            x0=solution,
            rtol=tol,
            atol=0.0,
            maxiter=max_iter,
            M=preconditioner,
        )
        residual = float(np.linalg.norm(rhs - operator @ solution)) / rhs_norm
        logger.debug("cg attempt %d: info=%d residual=%.3e", attempt, info, residual)
        if residual <= tol:
            return solution, residual

    raise IterationLimitError(residual, max_iter)


def solve_elliptic(
    problem: EllipticProblem, operator: sp.csr_matrix | None = None
) -> ScalarField:
    """Solve ``-div(M grad psi) = g`` with psi = 0 on the boundary.

    Args:
        problem (EllipticProblem): The problem.
        operator (sp.csr_matrix | None, optional): A pre-assembled operator.

    Raises:
        IterationLimitError: If CG does not reach ``problem.tol``.
        PositivityError: If psi dips below round-off for nonnegative g.

    Returns:
        ScalarField: psi, nonnegative whenever g is.
    """
    if operator is None:
        operator = assemble(problem)
    values, _ = conjugate_gradient(
        operator,
        problem.g.values.ravel(),
        tol=problem.tol,
        max_iter=problem.max_iter,
    )
    if np.all(problem.g.values >= 0):
        # the maximum principle holds up to CG round-off
        values = nonnegative_part(values)
    return ScalarField(problem.grid, values.reshape(problem.grid.shape))


def dirichlet_energy(field: ScalarField) -> float:
    """``||grad v||_2^2`` as the face-wise sum ``h^N sum_axes sum_faces (d v)^2``.

    Args:
        field (ScalarField): The field.

    Returns:
        float: The discrete Dirichlet energy.
    """
    flux = gradient(field)
    return field.grid.cell_volume * sum(float(np.sum(c**2)) for c in flux.components)


def psi_apriori_report(
    psi: ScalarField,
    g: ScalarField,
    f_l1_norm: float,
    theta: float,
) -> PsiReport:
    """Report ``||psi||_inf`` and ``||grad psi||_2`` against ``||f||_1^theta``.

    The constant in the bound is unknown, so only the ratios are reported.

    Args:
        psi (ScalarField): The solution.
        g (ScalarField): The right-hand side it was solved for.
        f_l1_norm (float): ``||f||_{L^1(Omega_T)}``.
        theta (float): The exponent of the coupling.

    Returns:
        PsiReport: Norms and ratios.
    """
    psi_sup = lp_norm(psi, float("inf"))
    grad_psi = dirichlet_energy(psi) ** 0.5
    scale = f_l1_norm**theta
    return PsiReport(
        psi_sup=psi_sup,
        grad_psi_l2=grad_psi,
        psi_ratio=_ratio(psi_sup, scale),
        grad_ratio=_ratio(grad_psi, scale),
        source_work=inner_product(g, psi),
    )


def _ratio(value: float, scale: float) -> float:
    if value == 0:
        return 0.0
    return value / scale if scale > 0 else float("inf")

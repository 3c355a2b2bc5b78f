import math

import numpy as np
import pytest

from kstrunc.coefficients import CoefficientField
from kstrunc.core.errors import IterationLimitError
from kstrunc.elliptic import (
    EllipticProblem,
    assemble,
    assemble_operator,
    conjugate_gradient,
    dirichlet_energy,
    psi_apriori_report,
    solve_elliptic,
)
from kstrunc.grid import ScalarField, SpaceGrid, inner_product, lp_norm


def manufactured_error(cells: int) -> float:
    grid = SpaceGrid(2, cells)

    def exact(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    g = ScalarField.from_function(grid, lambda x, y: 2 * np.pi**2 * exact(x, y))
    problem = EllipticProblem(grid, CoefficientField.identity(), g, tol=1e-12)
    psi = solve_elliptic(problem)
    return float(np.max(np.abs(psi.values - exact(*grid.coordinates()))))


def test_manufactured_convergence_order() -> None:
    errors = [manufactured_error(cells) for cells in (8, 16, 32)]
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:], strict=False)]
    assert min(orders) >= 1.8


def test_zero_right_hand_side() -> None:
    grid = SpaceGrid(3, 6)
    zero = ScalarField.zeros(grid)
    problem = EllipticProblem(grid, CoefficientField.identity(), zero)
    assert np.all(solve_elliptic(problem).values == 0)


def test_operator_is_symmetric_m_matrix() -> None:
    grid = SpaceGrid(3, 6)
    operator = assemble_operator(grid, CoefficientField.checkerboard(1.0, 100.0), 0.0)
    dense = operator.toarray()
    np.testing.assert_allclose(dense, dense.T)
    off_diagonal = dense - np.diag(np.diag(dense))
    assert off_diagonal.max() <= 0
    # strictly diagonally dominant next to the boundary, weakly elsewhere
    assert np.all(np.diag(dense) + off_diagonal.sum(axis=1) >= -1e-9)


def test_monotonicity_random_cases() -> None:
    rng = np.random.default_rng(4)
    grid = SpaceGrid(2, 4)
    for _ in range(1000):
        low, high = 0.1 + rng.random(2) * 10
        period = int(rng.integers(1, 4))
        field = CoefficientField.checkerboard(low, high, period=period)
        g = ScalarField(grid, rng.random(grid.shape))
        psi = solve_elliptic(EllipticProblem(grid, field, g, tol=1e-12))
        assert psi.values.min() >= 0


def test_monotone_in_the_right_hand_side() -> None:
    rng = np.random.default_rng(5)
    grid = SpaceGrid(2, 4)
    for _ in range(1000):
        low, high = 0.1 + rng.random(2) * 10
        field = CoefficientField.checkerboard(low, high)
        g1 = rng.random(grid.shape)
        g2 = g1 + 0.1 + rng.random(grid.shape)
        psi1, psi2 = (
            solve_elliptic(EllipticProblem(grid, field, ScalarField(grid, g), 1e-12))
            for g in (g1, g2)
        )
        assert psi1.values.min() >= 0
        assert np.all(psi2.values >= psi1.values)


def test_energy_identity() -> None:
    grid = SpaceGrid(2, 16)
    g = ScalarField.constant(grid, 1.0)
    problem = EllipticProblem(grid, CoefficientField.identity(), g, tol=1e-12)
    psi = solve_elliptic(problem)
    # <g, psi> = ||grad psi||^2 for M = identity
    assert inner_product(g, psi) == pytest.approx(dirichlet_energy(psi), rel=1e-9)


def test_discontinuous_coefficient_lowers_potential() -> None:
    grid = SpaceGrid(2, 16)
    g = ScalarField.constant(grid, 1.0)
    soft = solve_elliptic(EllipticProblem(grid, CoefficientField.identity(), g))
    stiff = solve_elliptic(
        EllipticProblem(grid, CoefficientField.checkerboard(1.0, 100.0), g)
    )
    assert lp_norm(stiff, math.inf) < lp_norm(soft, math.inf)


def test_iteration_limit() -> None:
    grid = SpaceGrid(3, 12)
    problem = EllipticProblem(
        grid, CoefficientField.identity(), ScalarField.constant(grid, 1.0)
    )
    with pytest.raises(IterationLimitError) as info:
        conjugate_gradient(
            assemble(problem), problem.g.values.ravel(), tol=1e-12, max_iter=1
        )
    assert info.value.iterations == 1
    assert info.value.residual > 1e-12


def test_time_dependent_coefficient_rejected() -> None:
    grid = SpaceGrid(2, 4)
    with pytest.raises(ValueError, match="must not depend on time"):
        EllipticProblem(
            grid,
            CoefficientField.time_modulated(1.0, 0.5),
            ScalarField.zeros(grid),
        )


def test_apriori_report_ratios() -> None:
    grid = SpaceGrid(2, 8)
    g = ScalarField.constant(grid, 1.0)
    psi = solve_elliptic(EllipticProblem(grid, CoefficientField.identity(), g))
    report = psi_apriori_report(psi, g, f_l1_norm=4.0, theta=0.5)
    assert report.psi_ratio == pytest.approx(report.psi_sup / 2.0)
    assert report.grad_ratio == pytest.approx(report.grad_psi_l2 / 2.0)
    assert report.source_work > 0


def test_apriori_report_zero_data() -> None:
    grid = SpaceGrid(2, 8)
    zero = ScalarField.zeros(grid)
    report = psi_apriori_report(zero, zero, f_l1_norm=0.0, theta=0.5)
    assert report.psi_ratio == 0.0
    assert report.grad_ratio == 0.0

import math

import numpy as np
import pytest

from kstrunc.core.errors import InvalidExponentError
from kstrunc.grid import (
    FluxField,
    ScalarField,
    SpaceGrid,
    divergence,
    flux_inner_product,
    gradient,
    inner_product,
    level_set_measure,
    lp_norm,
)


def test_grid_geometry() -> None:
    grid = SpaceGrid(3, 8)
    assert grid.h == 0.125
    assert grid.shape == (7, 7, 7)
    assert grid.node_count == 343
    assert grid.face_shape(1) == (7, 8, 7)
    assert grid.cell_volume == pytest.approx(0.125**3)


@pytest.mark.parametrize(("dim", "cells"), [(1, 8), (4, 8), (2, 3)])
def test_grid_rejects_unsupported(dim: int, cells: int) -> None:
    with pytest.raises(ValueError, match="Grid"):
        SpaceGrid(dim, cells)


def test_field_shape_is_checked() -> None:
    grid = SpaceGrid(2, 4)
    with pytest.raises(ValueError, match="does not match"):
        ScalarField(grid, np.zeros((4, 4)))


def test_field_is_read_only() -> None:
    field = ScalarField.constant(SpaceGrid(2, 4), 1.0)
    with pytest.raises(ValueError, match="read-only"):
        field.values[0, 0] = 2.0


def test_at_reads_boundary_as_zero() -> None:
    grid = SpaceGrid(2, 4)
    field = ScalarField.constant(grid, 3.0)
    assert field.at((0, 2)) == 0.0
    assert field.at((4, 1)) == 0.0
    assert field.at((1, 1)) == 3.0


def test_lp_norm_of_constant() -> None:
    grid = SpaceGrid(2, 10)
    field = ScalarField.constant(grid, 2.0)
    # 81 interior nodes of weight 1/100
    assert lp_norm(field, 1) == pytest.approx(2.0 * 0.81)
    assert lp_norm(field, 2) == pytest.approx(2.0 * math.sqrt(0.81))
    assert lp_norm(field, math.inf) == 2.0


def test_lp_norm_rejects_small_exponent() -> None:
    field = ScalarField.zeros(SpaceGrid(2, 4))
    with pytest.raises(InvalidExponentError):
        lp_norm(field, 0.5)


def test_lp_norm_of_zero() -> None:
    field = ScalarField.zeros(SpaceGrid(3, 4))
    assert lp_norm(field, 3) == 0.0
    assert lp_norm(field, math.inf) == 0.0


def test_gradient_of_linear_field() -> None:
    grid = SpaceGrid(2, 4)
    field = ScalarField.from_function(grid, lambda x, _: x)
    flux = gradient(field)
    # interior faces see slope 1, the last face drops to the boundary zero
    np.testing.assert_allclose(flux.components[0][:-1], 1.0)
    np.testing.assert_allclose(flux.components[0][-1], -0.75 / 0.25)


def test_summation_by_parts() -> None:
    rng = np.random.default_rng(1)
    for case in range(1000):
        grid = SpaceGrid(2 + case % 2, 4 + case % 3)
        u = ScalarField(grid, rng.standard_normal(grid.shape))
        flux = FluxField(
            grid,
            tuple(
                rng.standard_normal(grid.face_shape(axis))
                for axis in range(grid.dim)
            ),
        )
        lhs = inner_product(u, divergence(flux))
        rhs = -flux_inner_product(gradient(u), flux)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_level_set_measure() -> None:
    grid = SpaceGrid(2, 4)
    field = ScalarField(grid, np.arange(9, dtype=float).reshape(3, 3))
    assert level_set_measure(field, 0.0) == pytest.approx(9 / 16)
    assert level_set_measure(field, 6.0) == pytest.approx(3 / 16)
    assert level_set_measure(field, 9.0) == 0.0


def test_lattice_coordinates() -> None:
    grid = SpaceGrid(3, 12)
    assert grid.is_lattice_coordinate(0.5)
    assert not grid.is_lattice_coordinate(0.5 + grid.h / 3)
    assert not grid.is_lattice_coordinate(1 / 3 + 1e-3)

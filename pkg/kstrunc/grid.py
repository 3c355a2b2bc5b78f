# SPDX-License-Identifier: MIT

"""Uniform grids on the unit cube and the discrete calculus built on them.

Nodes are vertex-centred: along every axis the interior nodes sit at
``x_i = i * h`` for ``i = 1 .. n - 1``. Boundary nodes (``i = 0`` and
``i = n``) carry the homogeneous Dirichlet value and are never stored.

Face ``j`` on axis ``d`` (``j = 0 .. n - 1``) lies between lattice nodes
``j`` and ``j + 1``; a flux array on axis ``d`` therefore has ``n`` entries
along ``d`` and ``n - 1`` along every other axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from .core.errors import InvalidExponentError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike, NDArray

SUPPORTED_DIMENSIONS = (2, 3)
MIN_CELLS = 4


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform tensor grid on (0, 1)^N with zero Dirichlet boundary."""

    dim: int
    cells_per_axis: int

    def __post_init__(self) -> None:
        if self.dim not in SUPPORTED_DIMENSIONS:
            msg = f"Grid dimension must be 2 or 3, got {self.dim}"
            raise ValueError(msg)
        if self.cells_per_axis < MIN_CELLS:
            msg = (
                f"Grid needs at least {MIN_CELLS} cells per axis, "
                f"got {self.cells_per_axis}"
            )
            raise ValueError(msg)

    @property
    def spacing(self) -> Fraction:
        """The exact mesh size 1 / n."""
        return Fraction(1, self.cells_per_axis)

    @property
    def h(self) -> float:
        return float(self.spacing)

    @property
    def cell_volume(self) -> float:
        """The quadrature weight h^N."""
        return self.h**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_axis - 1,) * self.dim

    @property
    def node_count(self) -> int:
        return (self.cells_per_axis - 1) ** self.dim

    def face_shape(self, axis: int) -> tuple[int, ...]:
        """Shape of the face array on ``axis``.

        Args:
            axis (int): The axis.

        Returns:
            tuple[int, ...]: ``n`` along ``axis``, ``n - 1`` elsewhere.
        """
        shape = list(self.shape)
        shape[axis] = self.cells_per_axis
        return tuple(shape)

    @cached_property
    def axis_coordinates(self) -> NDArray[np.float64]:
        """The interior node coordinates along one axis."""
        return np.arange(1, self.cells_per_axis) * self.h

    def coordinates(self) -> tuple[NDArray[np.float64], ...]:
        """Interior node coordinates, one array per axis (``ij`` indexing).

        Returns:
            tuple[NDArray[np.float64], ...]: The coordinate arrays.
        """
        axes = [self.axis_coordinates] * self.dim
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_coordinates(self, axis: int) -> tuple[NDArray[np.float64], ...]:
        """Coordinates of the two lattice nodes adjacent to every face on ``axis``.

        Args:
            axis (int): The face axis.

        Returns:
            tuple[NDArray[np.float64], ...]: ``(left, right)`` point arrays of
                shape ``face_shape(axis) + (dim,)``. Boundary nodes are included.
        """
        lattice = np.arange(0, self.cells_per_axis + 1) * self.h
        axes = [self.axis_coordinates] * self.dim
        axes[axis] = lattice[:-1]
        left = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        axes[axis] = lattice[1:]
        right = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return left, right

    def is_lattice_coordinate(self, value: float, *, tol: float = 1e-12) -> bool:
        """Check whether ``value`` coincides with a lattice coordinate ``i * h``.

        Args:
            value (float): The coordinate.
            tol (float, optional): Tolerance in lattice units. Defaults to 1e-12.

        Returns:
            bool: True if ``value * n`` is an integer up to ``tol``.
        """
        scaled = value * self.cells_per_axis
        return abs(scaled - round(scaled)) <= tol

    def difference_operator(self, axis: int) -> sp.csr_matrix:
        """Sparse forward difference from nodes to faces on ``axis``, without 1/h.

        Args:
            axis (int): The axis.

        Returns:
            sp.csr_matrix: Matrix of shape (faces on ``axis``, nodes).
        """
        n = self.cells_per_axis
        ones = np.ones(n - 1)
        # face j reads node j (right) and node j - 1 (left), boundary reads as 0
        diff_1d = sp.diags([ones, -ones], [0, -1], shape=(n, n - 1), format="csr")
        before = sp.identity((n - 1) ** axis, format="csr")
        after = sp.identity((n - 1) ** (self.dim - axis - 1), format="csr")
        return sp.kron(sp.kron(before, diff_1d), after, format="csr")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a scalar function on the interior nodes of a grid."""

    grid: SpaceGrid
    values: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            msg = (
                f"Field shape {values.shape} does not match "
                f"grid shape {self.grid.shape}"
            )
            raise ValueError(msg)
        if not np.all(np.isfinite(values)):
            msg = "Field values must be finite"
            raise ValueError(msg)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: SpaceGrid) -> ScalarField:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: SpaceGrid, value: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, value))

    @classmethod
    def from_function(
        cls,
        grid: SpaceGrid,
        function: Callable[..., ArrayLike],
    ) -> ScalarField:
        """Sample ``function(x_1, ..., x_N)`` on the interior nodes.

        Args:
            grid (SpaceGrid): The grid.
            function (Callable[..., ArrayLike]): Vectorised function of the coordinates.

        Returns:
            ScalarField: The sampled field.
        """
        return cls(grid, np.broadcast_to(function(*grid.coordinates()), grid.shape))

    def at(self, index: Sequence[int]) -> float:
        """Evaluate at a lattice index in ``0 .. n`` per axis.

        Args:
            index (Sequence[int]): The lattice index.

        Returns:
            float: The nodal value, exactly 0 on the boundary.
        """
        n = self.grid.cells_per_axis
        if any(i <= 0 or i >= n for i in index):
            return 0.0
        return float(self.values[tuple(i - 1 for i in index)])


@dataclass(frozen=True, eq=False)
class FluxField:
    """Face-centred values, one array per axis."""

    grid: SpaceGrid
    components: tuple[NDArray[np.float64], ...] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.components) != self.grid.dim:
            msg = "Flux needs one component per axis"
            raise ValueError(msg)
        components = []
        for axis, component in enumerate(self.components):
            values = np.array(component, dtype=np.float64)
            if values.shape != self.grid.face_shape(axis):
                expected = self.grid.face_shape(axis)
                msg = (
                    f"Face array on axis {axis} has shape {values.shape}, "
                    f"expected {expected}"
                )
                raise ValueError(msg)
            if not np.all(np.isfinite(values)):
                msg = "Flux values must be finite"
                raise ValueError(msg)
            values.flags.writeable = False
            components.append(values)
        object.__setattr__(self, "components", tuple(components))


def pad_axis(values: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    """Append the zero boundary nodes on both ends of ``axis``.

    Args:
        values (NDArray[np.float64]): Interior values.
        axis (int): The axis to pad.

    Returns:
        NDArray[np.float64]: Values with one extra zero layer on each side of ``axis``.
    """
    widths = [(0, 0)] * values.ndim
    widths[axis] = (1, 1)
    return np.pad(values, widths)


def lp_norm(field: ScalarField, p: float) -> float:
    """Discrete L^p norm ``(h^N sum |v|^p)^(1/p)``, or ``max |v|`` for ``p = inf``.

    Args:
        field (ScalarField): The field.
        p (float): The exponent.

    Raises:
        InvalidExponentError: If ``p < 1``.

    Returns:
        float: The norm.
    """
    return weighted_lp_norm(field.values, p, field.grid.cell_volume)


def weighted_lp_norm(values: NDArray[np.float64], p: float, weight: float) -> float:
    """``(weight * sum |v|^p)^(1/p)``, or ``max |v|`` for ``p = inf``."""
    if not p >= 1:
        raise InvalidExponentError(InvalidExponentError.msg)
    magnitude = np.abs(values)
    if math.isinf(p):
        return float(magnitude.max(initial=0.0))
    return float((weight * np.sum(magnitude**p)) ** (1.0 / p))


def gradient(field: ScalarField) -> FluxField:
    """Forward differences onto faces, reading boundary neighbours as 0.

    Args:
        field (ScalarField): The field.

    Returns:
        FluxField: ``(v_right - v_left) / h`` on every face.
    """
    grid = field.grid
    return FluxField(
        grid,
        tuple(
            np.diff(pad_axis(field.values, axis), axis=axis) / grid.h
            for axis in range(grid.dim)
        ),
    )


def divergence(flux: FluxField) -> ScalarField:
    """Nodal divergence, the negative adjoint of :func:`gradient`.

    Args:
        flux (FluxField): The flux.

    Returns:
        ScalarField: ``sum_axes (F_right - F_left) / h`` at every node.
    """
    grid = flux.grid
    total = np.zeros(grid.shape)
    for axis, component in enumerate(flux.components):
        total += np.diff(component, axis=axis)
    return ScalarField(grid, total / grid.h)


def inner_product(first: ScalarField, second: ScalarField) -> float:
    """Discrete L^2 inner product ``h^N sum u v``.

    Args:
        first (ScalarField): The first field.
        second (ScalarField): The second field.

    Returns:
        float: The inner product.
    """
    return float(first.grid.cell_volume * np.sum(first.values * second.values))


def flux_inner_product(first: FluxField, second: FluxField) -> float:
    """Discrete inner product of two face fields, ``h^N sum_axes sum_faces F G``.

    Args:
        first (FluxField): The first flux.
        second (FluxField): The second flux.

    Returns:
        float: The inner product.
    """
    total = sum(
        float(np.sum(a * b))
        for a, b in zip(first.components, second.components, strict=True)
    )
    return first.grid.cell_volume * total


def level_set_measure(field: ScalarField, k: float) -> float:
    """Measure of the super-level set ``{v >= k}``.

    Args:
        field (ScalarField): The field.
        k (float): The level.

    Returns:
        float: ``h^N * #{nodes: v >= k}``.
    """
    return field.grid.cell_volume * int(np.count_nonzero(field.values >= k))

# SPDX-License-Identifier: MIT

"""Matrix-valued coefficient fields for the diffusion and drift operators."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .core.errors import ConfigError, DomainError, UnsupportedAnisotropyError
from .core.results import EllipticityReport

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

    from .core.typings import CoefficientDocument
    from .grid import SpaceGrid

logger = logging.getLogger(__name__)

# relative slack for the Rayleigh quotient against the declared bounds
ELLIPTICITY_RTOL = 1e-12


class Family(str, Enum):
    IDENTITY = "identity"
    CHECKERBOARD = "checkerboard"
    LAYERED = "layered"
    TIME_MODULATED = "time-modulated"
    FULL = "full"


@dataclass(frozen=True)
class CoefficientField:
    """A coefficient K(x, t) with declared ellipticity and boundedness constants.

    The bounds read alpha |xi|^2 <= K xi.xi and |K xi| <= beta |xi|.

    Every family except ``full`` is a scalar multiple of the identity, so its
    diagonal entry is the same on every axis.
    """

    family: Family
    values: tuple[float, ...] = (1.0,)
    period: float = 2.0
    """Blocks per axis (checkerboard, layered) or time period (time-modulated)."""
    amplitude: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    matrix: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            msg = f"alpha must be positive, got {self.alpha}"
            raise ValueError(msg)
        if self.beta < self.alpha:
            msg = f"beta ({self.beta}) must not be below alpha ({self.alpha})"
            raise ValueError(msg)
        if self.family is Family.FULL and self.matrix is None:
            msg = "The full family needs a matrix"
            raise ValueError(msg)
        if self.family is not Family.FULL and not self.values:
            msg = f"The {self.family.value} family needs at least one value"
            raise ValueError(msg)

    @classmethod
    def identity(cls) -> CoefficientField:
        return cls(Family.IDENTITY)

    @classmethod
    def checkerboard(
        cls, low: float, high: float, *, period: int = 2
    ) -> CoefficientField:
        """Alternate ``low`` and ``high`` on a ``period``^N block pattern.

        Args:
            low (float): Value on blocks with even index sum (the first block).
            high (float): Value on the other blocks.
            period (int, optional): Blocks per axis. Defaults to 2.

        Returns:
            CoefficientField: The field, with alpha and beta set to the extremes.
        """
        return cls(
            Family.CHECKERBOARD,
            (low, high),
            period=period,
            alpha=min(low, high),
            beta=max(low, high),
        )

    @classmethod
    def layered(cls, values: Sequence[float], *, period: int = 2) -> CoefficientField:
        """Slabs orthogonal to the first axis, cycling through ``values``.

        Args:
            values (Sequence[float]): Layer values.
            period (int, optional): Number of slabs. Defaults to 2.

        Returns:
            CoefficientField: The field.
        """
        return cls(
            Family.LAYERED,
            tuple(values),
            period=period,
            alpha=min(values),
            beta=max(values),
        )

    @classmethod
    def time_modulated(
        cls, base: float, amplitude: float, *, period: float = 1.0
    ) -> CoefficientField:
        if not 0 <= amplitude < 1:
            msg = f"Modulation amplitude must lie in [0, 1), got {amplitude}"
            raise ValueError(msg)
        return cls(
            Family.TIME_MODULATED,
            (base,),
            period=period,
            amplitude=amplitude,
            alpha=base * (1 - amplitude),
            beta=base * (1 + amplitude),
        )

    @classmethod
    def full(
        cls, matrix: Sequence[Sequence[float]], *, alpha: float, beta: float
    ) -> CoefficientField:
        return cls(
            Family.FULL,
            (),
            alpha=alpha,
            beta=beta,
            matrix=tuple(tuple(row) for row in matrix),
        )

    @classmethod
    def from_document(cls, document: CoefficientDocument) -> CoefficientField:
        """Build a field from its configuration document.

        Args:
            document (CoefficientDocument): The document.

        Raises:
            ConfigError: If the family is unknown or its parameters are invalid.

        Returns:
            CoefficientField: The field.
        """
        try:
            family = Family(document["family"])
        except ValueError as e:
            msg = f"Unknown coefficient family {document['family']!r}"
            raise ConfigError(msg) from e

        values = document.get("values", [1.0])
        try:
            if family is Family.IDENTITY:
                field = cls.identity()
            elif family is Family.CHECKERBOARD:
                field = cls.checkerboard(
                    values[0], values[1], period=int(document.get("period", 2))
                )
            elif family is Family.LAYERED:
                field = cls.layered(values, period=int(document.get("period", 2)))
            elif family is Family.TIME_MODULATED:
                field = cls.time_modulated(
                    values[0],
                    document.get("amplitude", 0.5),
                    period=document.get("period", 1.0),
                )
            else:
                field = cls.full(
                    document["matrix"],
                    alpha=document.get("alpha", 1.0),
                    beta=document.get("beta", 1.0),
                )
        except (ValueError, IndexError, KeyError) as e:
            msg = f"Invalid {family.value} coefficient: {e}"
            raise ConfigError(msg) from e

        # declared bounds may be overridden, e.g. to test a wrong declaration
        overrides = {k: document[k] for k in ("alpha", "beta") if k in document}
        if overrides and family is not Family.FULL:
            field = cls(
                field.family,
                field.values,
                period=field.period,
                amplitude=field.amplitude,
                alpha=overrides.get("alpha", field.alpha),
                beta=overrides.get("beta", field.beta),
            )
        return field

    def to_document(self) -> CoefficientDocument:
        document: CoefficientDocument = {
            "family": self.family.value,
            "values": list(self.values),
            "period": self.period,
            "amplitude": self.amplitude,
            "alpha": self.alpha,
            "beta": self.beta,
        }
        if self.matrix is not None:
            document["matrix"] = [list(row) for row in self.matrix]
        return document

    @property
    def time_dependent(self) -> bool:
        return self.family is Family.TIME_MODULATED

    @property
    def diagonal(self) -> bool:
        return self.family is not Family.FULL

    def scalar(self, points: ArrayLike, t: float) -> NDArray[np.float64]:
        """The diagonal entry at every point.

        Args:
            points (ArrayLike): Points of shape ``(..., N)``.
            t (float): The time.

        Raises:
            UnsupportedAnisotropyError: For the full family.

        Returns:
            NDArray[np.float64]: Values of shape ``(...)``.
        """
        points = np.asarray(points, dtype=np.float64)
        base = np.ones(points.shape[:-1])

        if self.family is Family.IDENTITY:
            return base
        if self.family is Family.CHECKERBOARD:
            blocks = self._blocks(points)
            parity = np.sum(blocks, axis=-1) % 2
            return np.asarray(self.values, dtype=np.float64)[parity]
        if self.family is Family.LAYERED:
            layers = self._blocks(points[..., :1])[..., 0] % len(self.values)
            return np.asarray(self.values, dtype=np.float64)[layers]
        if self.family is Family.TIME_MODULATED:
            factor = 1 + self.amplitude * math.sin(2 * math.pi * t / self.period)
            return base * self.values[0] * factor

        raise UnsupportedAnisotropyError(UnsupportedAnisotropyError.msg)

    def _blocks(self, points: NDArray[np.float64]) -> NDArray[np.int64]:
        count = int(self.period)
        return np.clip(np.floor(points * count).astype(np.int64), 0, count - 1)


def sample(
    field: CoefficientField, x: Sequence[float], t: float
) -> NDArray[np.float64]:
    """Evaluate the coefficient matrix at a point.

    Args:
        field (CoefficientField): The coefficient.
        x (Sequence[float]): A point in the closed unit cube.
        t (float): The time.

    Raises:
        DomainError: If ``x`` lies outside the closed unit cube.

    Returns:
        NDArray[np.float64]: The N x N matrix.
    """
    point = np.asarray(x, dtype=np.float64)
    if point.ndim != 1 or np.any(point < 0) or np.any(point > 1):
        raise DomainError(DomainError.msg)

    if field.matrix is not None:
        matrix = np.asarray(field.matrix, dtype=np.float64)
        if matrix.shape != (point.size, point.size):
            msg = (
                f"Coefficient matrix is {matrix.shape}, "
                f"point has dimension {point.size}"
            )
            raise DomainError(msg)
        return matrix
    return float(field.scalar(point, t)) * np.eye(point.size)


def verify_ellipticity(
    field: CoefficientField,
    samples: int,
    *,
    dim: int = 3,
    t_final: float = 1.0,
    seed: int = 0,
) -> EllipticityReport:
    """Check the declared bounds on random points, times and directions.

    Args:
        field (CoefficientField): The coefficient.
        samples (int): Number of random ``(x, t, xi)`` triples.
        dim (int, optional): Space dimension. Ignored for the full family.
            Defaults to 3.
        t_final (float, optional): Times are drawn from ``[0, t_final]``.
            Defaults to 1.0.
        seed (int, optional): Seed of the generator. Defaults to 0.

    Returns:
        EllipticityReport: Smallest Rayleigh quotient, largest gain and the verdict.
    """
    if samples < 1:
        msg = "Need at least one sample"
        raise ValueError(msg)
    if field.matrix is not None:
        dim = len(field.matrix)

    rng = np.random.default_rng(seed)
    points = rng.random((samples, dim))
    times = rng.random(samples) * t_final
    directions = rng.standard_normal((samples, dim))

    if field.matrix is not None:
        matrix = np.asarray(field.matrix, dtype=np.float64)
        images = directions @ matrix.T
    elif field.time_dependent:
        scale = np.array(
            [field.scalar(p, t) for p, t in zip(points, times, strict=True)]
        )
        images = scale[:, None] * directions
    else:
        images = field.scalar(points, 0.0)[:, None] * directions

    norms2 = np.einsum("ij,ij->i", directions, directions)
    rayleigh = np.einsum("ij,ij->i", directions, images) / norms2
    gain = np.sqrt(np.einsum("ij,ij->i", images, images) / norms2)

    report = EllipticityReport(
        passed=bool(
            rayleigh.min() >= field.alpha * (1 - ELLIPTICITY_RTOL)
            and gain.max() <= field.beta * (1 + ELLIPTICITY_RTOL)
        ),
        min_rayleigh=float(rayleigh.min()),
        max_gain=float(gain.max()),
    )
    logger.debug("ellipticity of %s: %s", field.family.value, report)
    return report


def harmonic_mean(
    left: NDArray[np.float64], right: NDArray[np.float64]
) -> NDArray[np.float64]:
    return 2 * left * right / (left + right)


def face_coefficient(
    field: CoefficientField,
    grid: SpaceGrid,
    axis: int,
    index: Sequence[int],
    t: float,
) -> float:
    """Harmonic mean of the diagonal entry across one face.

    Args:
        field (CoefficientField): The coefficient.
        grid (SpaceGrid): The grid.
        axis (int): The face axis.
        index (Sequence[int]): Lattice index of the node on the low side of the face.
        t (float): The time.

    Raises:
        UnsupportedAnisotropyError: For non-diagonal families.

    Returns:
        float: The face coefficient.
    """
    if not field.diagonal:
        raise UnsupportedAnisotropyError(UnsupportedAnisotropyError.msg)
    n = grid.cells_per_axis
    if not 0 <= index[axis] < n or any(
        not 0 < i < n for d, i in enumerate(index) if d != axis
    ):
        msg = f"{tuple(index)} is not the low node of an interior face on axis {axis}"
        raise ValueError(msg)

    left = np.asarray(index, dtype=np.float64) * grid.h
    right = left.copy()
    right[axis] += grid.h
    return float(harmonic_mean(field.scalar(left, t), field.scalar(right, t)))


def face_coefficients(
    field: CoefficientField, grid: SpaceGrid, t: float
) -> tuple[NDArray[np.float64], ...]:
    """Face coefficients on every face of the grid, one array per axis.

    Args:
        field (CoefficientField): The coefficient.
        grid (SpaceGrid): The grid.
        t (float): The time.

    Raises:
        UnsupportedAnisotropyError: For non-diagonal families.

    Returns:
        tuple[NDArray[np.float64], ...]: Arrays shaped like the grid's face arrays.
    """
    if not field.diagonal:
        raise UnsupportedAnisotropyError(UnsupportedAnisotropyError.msg)
    coefficients = []
    for axis in range(grid.dim):
        left, right = grid.face_coordinates(axis)
        coefficients.append(
            harmonic_mean(field.scalar(left, t), field.scalar(right, t))
        )
    return tuple(coefficients)

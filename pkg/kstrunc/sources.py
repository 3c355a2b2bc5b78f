# SPDX-License-Identifier: MIT

"""Nonnegative source terms f(x, t) with prescribed summability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .core.errors import ConfigError
from .grid import ScalarField, SpaceGrid

if TYPE_CHECKING:
    from .core.models import Exponent
    from .core.typings import SourceDocument


class SourceKind(str, Enum):
    CONSTANT = "constant"
    SEPARABLE = "separable"
    SPATIAL_SINGULARITY = "spatial-singularity"


@dataclass(frozen=True)
class SourceSpec:
    """Description of f.

    ``spatial-singularity`` is ``value * |x - x0|^(-a)`` with
    ``a = (N / m)(1 - margin)``, which lies in L^m(Omega_T) since ``a m < N``.
    When no centre is given, ``x0 = (1/2 + h/3, ...)`` on each grid.
    """

    kind: SourceKind
    value: float = 1.0
    m: Fraction | None = None
    margin: float = 0.1
    center: tuple[float, ...] | None = None

    @classmethod
    def constant(cls, value: float = 1.0) -> SourceSpec:
        return cls(SourceKind.CONSTANT, value)

    @classmethod
    def separable(cls, value: float = 1.0) -> SourceSpec:
        return cls(SourceKind.SEPARABLE, value)

    @classmethod
    def singular(
        cls,
        m: Fraction | int | str,
        *,
        margin: float = 0.1,
        center: tuple[float, ...] | None = None,
        value: float = 1.0,
    ) -> SourceSpec:
        return cls(
            SourceKind.SPATIAL_SINGULARITY,
            value,
            m=Fraction(m),
            margin=margin,
            center=center,
        )

    @classmethod
    def from_document(cls, document: SourceDocument) -> SourceSpec:
        """Build a source from its configuration document.

        Args:
            document (SourceDocument): The document.

        Raises:
            ConfigError: If the kind or a parameter is invalid.

        Returns:
            SourceSpec: The source.
        """
        try:
            kind = SourceKind(document["kind"])
        except ValueError as e:
            msg = f"Unknown source kind {document['kind']!r}"
            raise ConfigError(msg) from e

        value = float(document.get("value", 1.0))
        if kind is not SourceKind.SPATIAL_SINGULARITY:
            return cls(kind, value)

        if "m" not in document:
            msg = "A spatial-singularity source needs a target exponent m"
            raise ConfigError(msg)
        try:
            m = Fraction(str(document["m"]))
        except ValueError as e:
            msg = f"Invalid exponent m={document['m']!r}"
            raise ConfigError(msg) from e
        center = document.get("center")
        return cls.singular(
            m,
            margin=float(document.get("margin", 0.1)),
            center=None if center is None else tuple(float(c) for c in center),
            value=value,
        )

    def to_document(self) -> SourceDocument:
        document: SourceDocument = {"kind": self.kind.value, "value": self.value}
        if self.m is not None:
            document["m"] = str(self.m)
            document["margin"] = self.margin
        if self.center is not None:
            document["center"] = list(self.center)
        return document

    @property
    def summability(self) -> Exponent:
        """The m with f in L^m(Omega_T); ``inf`` for bounded kinds."""
        if self.kind is SourceKind.SPATIAL_SINGULARITY and self.m is not None:
            return self.m
        return math.inf

    def exponent(self, dim: int) -> float:
        """The singularity exponent ``a = (N / m)(1 - margin)``.

        Args:
            dim (int): The space dimension.

        Returns:
            float: ``a``, 0 for bounded kinds.
        """
        if self.kind is not SourceKind.SPATIAL_SINGULARITY or self.m is None:
            return 0.0
        return dim / float(self.m) * (1 - self.margin)

    def center_for(self, grid: SpaceGrid) -> tuple[float, ...]:
        if self.center is not None:
            return self.center
        return (0.5 + grid.h / 3,) * grid.dim

    def validate(self, grid: SpaceGrid) -> None:
        """Check the source against a grid.

        Args:
            grid (SpaceGrid): The grid the source will be sampled on.

        Raises:
            ConfigError: On m < 1, a margin outside (0, 1), a centre outside the
                open cube or a centre on a lattice node.
        """
        if self.value < 0:
            msg = f"Source value must be nonnegative, got {self.value}"
            raise ConfigError(msg)
        if self.kind is not SourceKind.SPATIAL_SINGULARITY:
            return
        if self.m is None or self.m < 1:
            msg = f"Source summability must satisfy m >= 1, got m={self.m}"
            raise ConfigError(msg)
        if not 0 < self.margin < 1:
            msg = f"Singularity margin must lie in (0, 1), got {self.margin}"
            raise ConfigError(msg)

        center = self.center_for(grid)
        if len(center) != grid.dim or not all(0 < c < 1 for c in center):
            msg = f"Singularity centre {center} must lie inside the unit cube"
            raise ConfigError(msg)
        if all(grid.is_lattice_coordinate(c) for c in center):
            msg = (
                f"Singularity centre {center} lies on a lattice node of the "
                f"{grid.cells_per_axis}-cell grid"
            )
            raise ConfigError(msg)


def generate_source(spec: SourceSpec, grid: SpaceGrid, t: float) -> ScalarField:
    """Sample f(., t) on the interior nodes.

    Args:
        spec (SourceSpec): The source.
        grid (SpaceGrid): The grid.
        t (float): The time.

    Raises:
        ConfigError: If the source is invalid for this grid.

    Returns:
        ScalarField: The nonnegative nodal values.
    """
    spec.validate(grid)

    if spec.kind is SourceKind.CONSTANT:
        return ScalarField.constant(grid, spec.value)

    coordinates = grid.coordinates()
    if spec.kind is SourceKind.SEPARABLE:
        profile = np.prod([np.sin(np.pi * x) for x in coordinates], axis=0)
        modulation = 1 + 0.5 * math.sin(2 * math.pi * t)
        return ScalarField(grid, spec.value * modulation * profile)

    center = spec.center_for(grid)
    distance2 = sum((x - c) ** 2 for x, c in zip(coordinates, center, strict=True))
    exponent = spec.exponent(grid.dim)
    return ScalarField(grid, spec.value * distance2 ** (-0.5 * exponent))

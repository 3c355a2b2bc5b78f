# SPDX-License-Identifier: MIT
from __future__ import annotations

from enum import IntFlag
from fractions import Fraction
from typing import NamedTuple, TypeVar, Union

T = TypeVar("T", bound="DumpFlags")

Exponent = Union[Fraction, float]
"""An exact rational exponent, or ``math.inf``."""


class DumpFlags(IntFlag):
    """Flags for the payload of a trajectory dump."""

    has_psi = 1 << 0
    has_sources = 1 << 1
    has_steps = 1 << 2
    all = has_psi | has_sources | has_steps

    def verify(self: T) -> T:
        """Verify that only known flags are set.

        Args:
            self (T): The flags to verify.

        Raises:
            ValueError: If an unknown flag is set.

        Returns:
            T: The flags. Useful for chaining and inline usage.
        """
        if self & ~DumpFlags.all:
            msg = "Unknown bit set in flags"
            raise ValueError(msg)
        return self


class DumpHeader(NamedTuple):
    length: int
    version: int
    stamps: int
    opcode: int


class DumpItem(NamedTuple):
    header: DumpHeader
    data: bytes


class StepInfo(NamedTuple):
    """Metadata of one completed time step."""

    iterations: int
    """Fixed-point iterations used."""

    change: float
    """Relative L2 change of the last fixed-point iteration."""

    residual: float
    """Worst relative residual of the linear solves of the last iteration."""

    courant: float
    """Drift Courant number dt * max outflow rate / h."""


class PredictedSpace(NamedTuple):
    """A space L^outer(0,T; L^inner) or L^outer(0,T; W^{1,inner}_0)."""

    outer: Exponent
    inner: Exponent
    with_gradient: bool = False
    strict: bool = False
    """True when membership holds for every exponent strictly below the bound."""

    def describe(self) -> str:
        """Render the space, e.g. ``L^2(0,T;W^{1,2}_0)``.

        Returns:
            str: A human readable description.
        """
        rel = "<" if self.strict else ""
        outer = _fmt(self.outer)
        inner = _fmt(self.inner)
        if self.with_gradient:
            return f"L^{rel}{outer}(0,T;W^{{1,{rel}{inner}}}_0)"
        if self.outer == self.inner:
            return f"L^{rel}{inner}(Omega_T)"
        return f"L^{rel}{outer}(0,T;L^{rel}{inner})"


def _fmt(value: Exponent) -> str:
    return "inf" if value == float("inf") else str(value)

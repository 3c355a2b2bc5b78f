# SPDX-License-Identifier: MIT

"""Truncation calculus: T_k, G_k, Theta_k and the smooth truncation.

All functions accept scalars or arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, overload

import numpy as np

from .core.errors import InvalidLevelError, PositivityError

if TYPE_CHECKING:
    from numpy.typing import NDArray

# how far below zero a nonnegative quantity may dip from round-off
NEGATIVE_ROUNDOFF = 1e-12


def _check_level(k: float) -> None:
    if not k >= 0:
        raise InvalidLevelError(InvalidLevelError.msg)


@overload
def t_k(s: float, k: float) -> float: ...


@overload
def t_k(s: NDArray[np.float64], k: float) -> NDArray[np.float64]: ...


def t_k(s: float | NDArray[np.float64], k: float) -> float | NDArray[np.float64]:
    """Clamp ``s`` to ``[-k, k]``.

    Args:
        s (float | NDArray[np.float64]): The argument.
        k (float): The level, may be ``inf``.

    Raises:
        InvalidLevelError: If ``k < 0``.

    Returns:
        float | NDArray[np.float64]: T_k(s).
    """
    _check_level(k)
    return np.clip(s, -k, k)


@overload
def g_k(s: float, k: float) -> float: ...


@overload
def g_k(s: NDArray[np.float64], k: float) -> NDArray[np.float64]: ...


def g_k(s: float | NDArray[np.float64], k: float) -> float | NDArray[np.float64]:
    """The excess ``s - T_k(s)``."""
    return s - t_k(s, k)


@overload
def theta_k(s: float, k: float) -> float: ...


@overload
def theta_k(s: NDArray[np.float64], k: float) -> NDArray[np.float64]: ...


def theta_k(s: float | NDArray[np.float64], k: float) -> float | NDArray[np.float64]:
    """The primitive of T_k vanishing at 0.

    Args:
        s (float | NDArray[np.float64]): The argument.
        k (float): The level.

    Raises:
        InvalidLevelError: If ``k < 0``.

    Returns:
        float | NDArray[np.float64]: ``s^2 / 2`` on ``|s| <= k``,
            ``k|s| - k^2 / 2`` beyond.
    """
    _check_level(k)
    magnitude = np.abs(s)
    if np.isinf(k):
        return 0.5 * magnitude**2
    return np.where(magnitude <= k, 0.5 * magnitude**2, k * magnitude - 0.5 * k**2)


def _smooth_level(k: float) -> None:
    if not k > 0:
        msg = "Smooth truncation needs a positive level"
        raise InvalidLevelError(msg)


def smooth_t_k(s: float | NDArray[np.float64], k: float) -> float | NDArray[np.float64]:
    """C^1 truncation: identity on ``[0, k/2]``, ``k`` beyond ``k``, odd.

    On ``[k/2, k]`` the profile is the cubic Hermite blend with slope 1 at
    ``k/2`` and slope 0 at ``k``; in ``tau = (|s| - k/2) / (k/2)`` it reads
    ``k/2 * (1 + tau + tau^2 - tau^3)``.

    Args:
        s (float | NDArray[np.float64]): The argument.
        k (float): The level.

    Raises:
        InvalidLevelError: If ``k <= 0``.

    Returns:
        float | NDArray[np.float64]: The smooth truncation of ``s``.
    """
    _smooth_level(k)
    magnitude = np.abs(s)
    tau = np.clip((magnitude - 0.5 * k) / (0.5 * k), 0.0, 1.0)
    blend = 0.5 * k * (1 + tau + tau**2 - tau**3)
    profile = np.where(magnitude <= 0.5 * k, magnitude, blend)
    return np.sign(s) * profile


def smooth_t_k_prime(
    s: float | NDArray[np.float64], k: float
) -> float | NDArray[np.float64]:
    """Derivative of :func:`smooth_t_k`.

    It is ``(1 - tau)(1 + 3 tau)`` on the blend and lies in ``[0, 4/3]``.

    Args:
        s (float | NDArray[np.float64]): The argument.
        k (float): The level.

    Raises:
        InvalidLevelError: If ``k <= 0``.

    Returns:
        float | NDArray[np.float64]: The derivative, supported in ``[-k, k]``.
    """
    _smooth_level(k)
    magnitude = np.abs(s)
    tau = np.clip((magnitude - 0.5 * k) / (0.5 * k), 0.0, 1.0)
    return np.where(magnitude <= 0.5 * k, 1.0, (1 - tau) * (1 + 3 * tau))


def nonnegative_part(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """``max(values, 0)`` for values that are nonnegative up to round-off.

    Values down to ``-NEGATIVE_ROUNDOFF`` are clipped.

    Args:
        values (NDArray[np.float64]): Values that should be nonnegative.

    Raises:
        PositivityError: If a value dips further below zero.

    Returns:
        NDArray[np.float64]: The clipped values.
    """
    lowest = float(values.min(initial=0.0))
    if lowest < -NEGATIVE_ROUNDOFF:
        msg = f"Expected a nonnegative density, found {lowest:.3e}"
        raise PositivityError(msg, -lowest)
    return np.clip(values, 0.0, None)


def nonnegative_power(values: NDArray[np.float64], theta: float) -> NDArray[np.float64]:
    """``max(values, 0) ** theta``, see :func:`nonnegative_part`.

    Args:
        values (NDArray[np.float64]): Values that should be nonnegative.
        theta (float): The exponent.

    Raises:
        PositivityError: If a value dips below round-off.

    Returns:
        NDArray[np.float64]: The clipped power.
    """
    return nonnegative_part(values) ** theta

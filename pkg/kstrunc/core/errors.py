# SPDX-License-Identifier: MIT

"""Errors raised by kstrunc."""

from __future__ import annotations


class KstruncError(Exception):
    """Base class for every error raised by kstrunc."""


class InvalidExponentError(KstruncError, ValueError):
    """Raised when a Lebesgue exponent is below 1."""

    msg = "Exponents must satisfy p >= 1 or p = inf."


class InvalidLevelError(KstruncError, ValueError):
    """Raised when a truncation level is out of range."""

    msg = "Truncation level must be nonnegative."


class DomainError(KstruncError, ValueError):
    """Raised when a point lies outside the closed unit cube."""

    msg = "Point lies outside the closure of the domain."


class UndefinedExponentError(KstruncError, ValueError):
    """Raised when p* or p** is requested outside its range of definition."""


class HypothesisViolationError(KstruncError, ValueError):
    """Raised when the parameters of Stampacchia's lemma are out of range."""


class ConfigError(KstruncError, ValueError):
    """Raised when an experiment configuration is invalid."""


class UnsupportedAnisotropyError(KstruncError, NotImplementedError):
    """Raised when a full-tensor coefficient reaches the face discretization."""

    msg = "Only diagonal coefficient families can be discretized."


class DumpFormatError(KstruncError):
    """Raised when a trajectory dump cannot be parsed."""


class IterationLimitError(KstruncError):
    """Raised when the linear solver does not reach its tolerance."""

    def __init__(self, residual: float, iterations: int) -> None:
        """Create a new IterationLimitError instance.

        Args:
            residual (float): The final relative residual.
            iterations (int): The iteration budget that was exhausted.
        """
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Linear solve stopped at relative residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class StepError(KstruncError):
    """Raised when a time step cannot be completed. The caller may retry with dt/2."""

    def __init__(self, message: str, residual: float) -> None:
        """Create a new StepError instance.

        Args:
            message (str): What went wrong.
            residual (float): The last residual (or violation size) observed.
        """
        self.residual = residual
        super().__init__(message)


class FixedPointError(StepError):
    """Raised when the per-step fixed-point iteration does not converge."""

    def __init__(self, residual: float, iterations: int) -> None:
        """Create a new FixedPointError instance.

        Args:
            residual (float): The last relative change between iterates.
            iterations (int): The number of iterations used.
        """
        self.iterations = iterations
        super().__init__(
            f"Fixed point did not converge in {iterations} iterations "
            f"(last change {residual:.3e})",
            residual,
        )


class PositivityError(StepError):
    """Raised when a linear step would leave the nonnegative cone."""


class RunError(KstruncError):
    """Raised when a run fails; wraps the failing step."""

    def __init__(self, step: int, cause: StepError | IterationLimitError) -> None:
        """Create a new RunError instance.

        Args:
            step (int): The index of the step that failed (1-based).
            cause (StepError | IterationLimitError): The underlying error.
        """
        self.step = step
        self.cause = cause
        super().__init__(f"Step {step} failed: {cause}")


class InvariantViolationError(KstruncError):
    """Raised when a verified invariant does not hold."""

    def __init__(self, failures: list[str]) -> None:
        """Create a new InvariantViolationError instance.

        Args:
            failures (list[str]): Names of the failing checks.
        """
        self.failures = failures
        super().__init__("Invariant violations: " + ", ".join(failures))


class ReportError(KstruncError):
    """Raised when report files cannot be written."""

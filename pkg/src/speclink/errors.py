"""
Exception hierarchy for speclink.
Every error carries the process exit code the CLI reports for it.
"""


class SpeclinkError(Exception):
    """Base class for all speclink failures."""

    exit_code: int = 1


class ConfigError(SpeclinkError, ValueError):
    """Invalid configuration, resolution, PDE name or initial condition."""

    exit_code = 2


class InputDataError(SpeclinkError, ValueError):
    """Input data cannot be used: wrong shape, too short, unreadable."""

    exit_code = 3


class BasisMismatchError(InputDataError):
    """Two objects were built on different Chebyshev bases."""


class DegenerateDataError(InputDataError):
    """Snapshot data carries no information (all-zero)."""


class NumericalError(SpeclinkError, ArithmeticError):
    """A numerical routine failed or produced non-finite values."""

    exit_code = 4


class NonFiniteError(NumericalError):
    """NaN or Inf found where finite values are required."""


class EigensolverError(NumericalError):
    """The eigenvalue solver did not converge."""


class PipelineError(SpeclinkError):
    """A confusion-experiment stage failed for one (true, candidate, seed) triple."""

    def __init__(self, true_name: str | None, candidate_name: str | None, seed: int | None, cause: Exception):
        self.true_name = true_name
        self.candidate_name = candidate_name
        self.seed = seed
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4)
        super().__init__(
            f"pipeline failed for true={true_name!r}, candidate={candidate_name!r}, seed={seed}: {cause}"
        )

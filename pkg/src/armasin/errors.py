"""Exception hierarchy shared by every armasin module."""

from __future__ import annotations


class ArmaSinError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ArmaSinError, ValueError):
    """Input data violates an operation's preconditions."""


class InvalidBinError(InvalidInputError):
    """A DFT bin cannot stand for a sinusoid (DC or mirrored half)."""


class InvalidSpecError(InvalidInputError):
    """A filter specification has inverted, overlapping or out-of-range edges."""


class DesignFailureError(ArmaSinError):
    """Filter design is numerically degenerate."""


class PoleOnCircleError(ArmaSinError):
    """Frequency response evaluated exactly at a unit-circle pole."""

    def __init__(self, w: float):
        super().__init__(f"pole on the unit circle at w={w!r}")
        self.w = w


class UnstableSystemError(ArmaSinError):
    """A stable system was required; carries the offending StabilityReport."""

    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report


class FitError(ArmaSinError):
    """ARMA regression is singular or otherwise failed."""


class SelectionError(ArmaSinError):
    """Every cell of an order-selection grid failed to fit."""


class PipelineError(ArmaSinError):
    """Failure inside the ARMA-SIN pipeline, labelled with the stage that raised."""

    STAGES = ("spectral", "filtering", "arma", "forecast")

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class ScenarioFailureError(ArmaSinError):
    """Too many Monte-Carlo runs failed for the scenario to be meaningful."""

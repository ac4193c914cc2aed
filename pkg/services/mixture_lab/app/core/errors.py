# services/mixture_lab/app/core/errors.py
from typing import Optional

from fastapi import status

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


class AlgebraError(Exception):
    """Base class for all errors raised by the algebra and its front ends"""
    status_code: int = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code: int = EXIT_INVALID
    default_detail: str = "An unexpected algebra error occurred"

    def __init__(self, detail: Optional[str] = None, location: Optional[str] = None):
        self.detail = detail or self.default_detail
        self.location = location
        super().__init__(self.describe())

    def describe(self) -> str:
        if self.location:
            return f"{self.location}: {self.detail}"
        return self.detail


# Distributions and rationals

class NotNormalized(AlgebraError):
    """Raised when masses or weights do not sum to exactly 1"""
    default_detail = "Masses do not sum to 1"


class NegativeMass(AlgebraError):
    default_detail = "Distribution has a negative mass"


class RationalFormatError(AlgebraError):
    default_detail = "Rational must be written as num/den"


# Histories and spaces

class AlternationViolation(AlgebraError):
    """Raised when a percept or action is appended out of turn"""
    default_detail = "History must alternate percept, action, percept, ..."


class SymbolOutOfSpace(AlgebraError):
    default_detail = "Symbol does not belong to the declared spaces"


class RewardsNotNegationClosed(AlgebraError):
    default_detail = "Reward set is not closed under negation"


class WrongParity(AlgebraError):
    default_detail = "History has the wrong parity for this query"


class SpacesMismatch(AlgebraError):
    default_detail = "Operands are declared over different spaces"


# Agent and environment construction

class UnknownFamily(AlgebraError):
    default_detail = "Unknown family"


class BadParams(AlgebraError):
    default_detail = "Bad family parameters"


class LengthMismatch(AlgebraError):
    default_detail = "Vectors have different lengths"


class InvalidWeights(AlgebraError):
    default_detail = "Weights must be positive and sum to 1"


class CarrierMismatch(AlgebraError):
    default_detail = "Distributions are over different carriers"


# Evaluation

class InvalidDepth(AlgebraError):
    """Raised for a negative step count or a depth below 1"""
    default_detail = "Step count or depth is out of range"


class DepthOverflow(AlgebraError):
    """Raised when an enumeration exceeds the configured node budget"""
    status_code = status.HTTP_413_REQUEST_ENTITY_TOO_LARGE
    default_detail = "Node budget exceeded"


class NoTailBound(AlgebraError):
    default_detail = "Environment does not advertise a tail bound"


class NoFiniteHorizon(AlgebraError):
    default_detail = "Environment tail bound never reaches 0"


class NotFiniteHorizon(AlgebraError):
    default_detail = "Measure is not finite-horizon at the requested depth"


class NotStronglyWellBehaved(AlgebraError):
    default_detail = "Measure is not strongly well-behaved"


class SiteDeterministic(AlgebraError):
    default_detail = "Agent is deterministic at the site"


class SiteUnreachable(AlgebraError):
    default_detail = "Site has probability 0 under the agent"


# Scenario files

class ScenarioParseError(AlgebraError):
    default_detail = "Scenario text is not well-formed"


class SchemaError(AlgebraError):
    default_detail = "Unknown field in scenario"


class ScenarioValidationError(AlgebraError):
    default_detail = "Scenario failed validation"


class UnknownName(AlgebraError):
    status_code = status.HTTP_404_NOT_FOUND
    default_detail = "Name is not declared in the scenario"

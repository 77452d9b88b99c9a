"""
Exception types for the integrability lab.

Every failure carries a short machine-readable code and the process exit
code the CLI maps it to (1 check failure, 2 usage error, 3 numeric failure).
"""

from typing import Dict, Optional


class LabError(Exception):
    """Base class for all lab failures."""

    code = "lab_error"
    exit_code = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> Dict:
        """Machine-readable form used by the CLI error JSON."""
        payload = {"error": self.code, "message": str(self)}
        for key, value in self.details.items():
            payload[key] = value if isinstance(value, (int, float, str, bool, type(None))) else repr(value)
        return payload


class ParameterError(LabError, ValueError):
    code = "parameter_error"
    exit_code = 2


class DomainError(LabError, ValueError):
    code = "domain_error"
    exit_code = 2


class SizeError(LabError):
    code = "size_error"


class ContractError(LabError):
    code = "contract_error"


class ConditioningError(LabError):
    code = "conditioning_error"


class DegreeError(LabError):
    code = "degree_error"


class AccuracyError(LabError):
    code = "accuracy_error"

    def __init__(self, message: str, best_estimate: Optional[float] = None, **details):
        super().__init__(message, best_estimate=best_estimate, **details)
        self.best_estimate = best_estimate


class PoleError(LabError):
    code = "pole_error"


class DegeneracyError(LabError):
    code = "degeneracy_error"

    def __init__(self, message: str, dimension: int = 0, **details):
        super().__init__(message, dimension=dimension, **details)
        self.dimension = dimension


class ReconstructionError(LabError):
    code = "reconstruction_error"


class ExtractionError(LabError):
    code = "extraction_error"


class ClassificationError(LabError):
    code = "classification_error"
    exit_code = 1


class ConventionError(LabError):
    code = "convention_error"
    exit_code = 1


class ExtrapolationError(LabError):
    code = "extrapolation_error"
    exit_code = 1

    def __init__(self, message: str, result=None, **details):
        super().__init__(message, **details)
        self.result = result

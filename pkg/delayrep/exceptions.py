"""
Exception hierarchy. Every error carries the CLI exit code it maps to.
"""


class DelayRepError(Exception):
    exit_code = 2
    code = 'error'


class DimensionError(DelayRepError, ValueError):
    exit_code = 1
    code = 'dimension'


class SpecValidationError(DelayRepError):
    exit_code = 1
    code = 'validation'

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DomainError(DelayRepError, ValueError):
    exit_code = 1
    code = 'domain'


class InputSmoothnessError(DelayRepError):
    exit_code = 1
    code = 'input-smoothness'


class SewingError(DelayRepError):
    exit_code = 1
    code = 'sewing'

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class WellPosednessError(DelayRepError):
    exit_code = 2
    code = 'well-posedness'


class DegreeOverflowError(DelayRepError):
    exit_code = 2
    code = 'degree-overflow'


class DiscretizationError(DelayRepError):
    exit_code = 2
    code = 'discretization'


class DivergenceError(DelayRepError):
    exit_code = 2
    code = 'divergence'

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UsageError(DelayRepError):
    exit_code = 3
    code = 'usage'


class ToleranceError(DelayRepError):
    """Two computations that should agree differ by more than the tolerance."""
    exit_code = 2
    code = 'tolerance'

"""Exception hierarchy shared by the library and the command line front end."""


class HaarTrendError(Exception):
    """Base class for all package errors."""

    #: process exit code used by the CLI when the error reaches the top level
    exit_code = 2


class InvalidGridError(HaarTrendError, ValueError):
    """Sample size or design is unusable (e.g. fewer than two points)."""


class BasisIndexError(HaarTrendError, IndexError):
    """A (scale, translation) pair is out of range or not in the index set."""


class InputError(HaarTrendError, ValueError):
    """Observation vectors are missing, mis-sized or non-finite."""


class StructureError(HaarTrendError, ValueError):
    """Coefficient layout does not match the index set of the sample size."""


class ConfigError(HaarTrendError, ValueError):
    """A tuning parameter is outside its documented range."""

    exit_code = 1


class RuleContractError(ConfigError):
    """A custom thresholding rule violates the kill/shift contract."""


class DomainError(HaarTrendError, ValueError):
    """Argument lies outside the support of a function."""


class EvaluationError(HaarTrendError, ArithmeticError):
    """An estimator produced non-finite output during Monte Carlo evaluation."""

    exit_code = 3


class EstimationError(HaarTrendError, ArithmeticError):
    """An estimate cannot be formed (e.g. empty kernel window)."""

    exit_code = 3


class RankError(HaarTrendError, ArithmeticError):
    """Design matrix is singular or too ill-conditioned for least squares."""

    exit_code = 3

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ParseError(HaarTrendError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DataError(HaarTrendError, ValueError):
    """Parsed data violate a semantic requirement (duplicates, too short)."""

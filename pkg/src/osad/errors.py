"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI uses for it:

    2  invalid input (shapes, non-finite values, too little data, ...)
    3  infeasible design (rank constraint, unsolvable gains, failed checks)
    4  artifacts (missing files, unparsable files)
"""
from typing import Optional

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_ARTIFACT = 4


class OsadError(Exception):
    exit_code: int = 1


# ---------------------------------------------------------------------------
# Invalid input
# ---------------------------------------------------------------------------

class InvalidInputError(OsadError, ValueError):
    exit_code = EXIT_INVALID


class NonFiniteError(InvalidInputError):
    def __init__(self, what: str, index: Optional[int] = None):
        self.index = index
        where = f" at sample {index}" if index is not None else ""
        super().__init__(f"Non-finite value in {what}{where}")


class InsufficientDataError(InvalidInputError):
    pass


class CalibrationError(InvalidInputError):
    pass


class UndefinedMetricError(InvalidInputError):
    pass


# ---------------------------------------------------------------------------
# Infeasible designs
# ---------------------------------------------------------------------------

class InfeasibleDesignError(OsadError):
    exit_code = EXIT_INFEASIBLE


class DecouplingError(InfeasibleDesignError):
    pass


class TwoTapError(InfeasibleDesignError):
    pass


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

class ArtifactError(OsadError):
    exit_code = EXIT_ARTIFACT


class ArtifactFormatError(ArtifactError):
    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class RankDeficiencyWarning(UserWarning):
    """Requested state dimension exceeds the numerical rank of the data."""

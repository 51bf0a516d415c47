"""
Exception hierarchy for the B-free approximation lab
Every module raises one of these so the CLI can map failures to exit codes
"""


class LabError(Exception):
    """Base class for all lab failures"""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of the operation"""


class RangeError(LabError, IndexError):
    """A stored prefix is too short for the requested index or depth"""


class ConsistencyError(LabError, RuntimeError):
    """An internal invariant failed; indicates a bug, never bad input"""


class UndefinedFitError(DomainError):
    """A least-squares fit has no meaningful slope on the sampled range"""


class IterationCapError(LabError):
    """A brute-force search hit its configured iteration cap"""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class InconclusiveError(LabError):
    """A conclusive answer was demanded but the budget only allows a partial one"""

"""Exception taxonomy shared by all modules.

The CLI maps these onto stable exit codes, so new error conditions should
reuse one of the classes below rather than raising bare ValueErrors.
"""
from __future__ import annotations


class CcrError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CcrError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ValidationError(CcrError, ValueError):
    """A constructed object or input document violates its invariants."""


class ResourceCapError(CcrError):
    """An enumeration would exceed a configured resource cap."""

    def __init__(self, message: str, *, count: int, cap: int):
        super().__init__(message)
        self.count = count
        self.cap = cap


class InfeasibleError(CcrError):
    """A constraint system has no feasible point.

    ``rows`` names a set of constraints that could not be satisfied
    simultaneously (best effort, not guaranteed minimal).
    """

    def __init__(self, message: str, rows: tuple[str, ...] = ()):
        super().__init__(message)
        self.rows = rows


class SolverError(CcrError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, *, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


class DemandError(SolverError):
    """No interior portfolio optimum was found in the search box."""

    def __init__(self, message: str, *, box: tuple = (), iterations: int = 0):
        super().__init__(message, iterations=iterations)
        self.box = box

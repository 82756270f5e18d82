"""
Exception types raised by kac-roots.

Every error derives from KacRootsError and from the builtin category the
caller would naturally catch (ValueError for bad input, ArithmeticError for
numerical failure), so existing ``except ValueError`` handlers keep working.
"""


class KacRootsError(Exception):
    """Base class for all kac-roots errors."""


class OverflowPolicyError(KacRootsError, ValueError):
    """A scan window reaches past 1 + 50/n, where raw evaluation may overflow."""


class DegreeTooLargeError(KacRootsError, ValueError):
    """The exact Sturm oracle was asked for a polynomial longer than it supports."""


class DomainViolationError(KacRootsError, ValueError):
    """An argument lies outside the validity range of a formula."""


class QuadratureError(KacRootsError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InsufficientStatisticsError(KacRootsError, RuntimeError):
    """A Monte Carlo estimator saw too few events to report a value."""

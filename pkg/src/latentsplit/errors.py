"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class LatentSplitError(Exception):
    """Base class for all errors raised by :mod:`latentsplit`."""


class UnknownLabel(LatentSplitError, KeyError):
    pass


class LayoutMismatch(LatentSplitError, ValueError):
    pass


class ModelMismatch(LatentSplitError, ValueError):
    pass


class UnknownParty(LatentSplitError, KeyError):
    pass


class NotAnEdge(LatentSplitError, ValueError):
    pass


class ZeroDivisor(LatentSplitError, ArithmeticError):
    """A do-conditional is not identifiable because a required divisor vanishes."""

    def __init__(self, message: str, event: dict | None = None) -> None:
        super().__init__(message)
        self.event = event or {}


class ParamOutOfRange(LatentSplitError, ValueError):
    pass


class WiringInconsistent(LatentSplitError, ValueError):
    pass


class UnknownBehaviorReference(LatentSplitError, KeyError):
    pass


class UnknownAtomReference(LatentSplitError, KeyError):
    pass


class CardinalityMismatch(LatentSplitError, ValueError):
    pass


class NumericallyAmbiguous(LatentSplitError, RuntimeError):
    """Neither a feasible point nor a verified infeasibility certificate was found."""

    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


class NoTransition(LatentSplitError, RuntimeError):
    pass


class NonMonotone(LatentSplitError, RuntimeError):
    """A bisection saw a feasible probe above an infeasible one."""

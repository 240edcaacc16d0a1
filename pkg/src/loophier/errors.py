"""Exception types shared across the engine."""


class LoopHierError(Exception):
    """Base class for all engine errors."""


class ContextMismatch(LoopHierError):
    """Operands belong to different ring contexts."""


class ModeMismatch(LoopHierError):
    """A quantum-only operation was applied to a classical object, or vice versa."""


class NotExact(LoopHierError):
    """The argument is not a total x-derivative."""


class WeightOneComponent(LoopHierError):
    """Inversion of (D - 1) hit a monomial of weight one."""


class WeightZeroComponent(LoopHierError):
    """Inversion of D hit a constant (weight zero) monomial."""


class SingularAtEpsilonZero(LoopHierError):
    """The leading part of a coordinate change is not invertible."""


class Inconsistent(LoopHierError):
    """A linear constraint system has no solution."""


class ParseError(LoopHierError):
    """Invalid serialized input.  ``path`` locates the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)

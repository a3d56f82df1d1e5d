"""Exception and warning types raised by cyldrop."""


class DropError(Exception):
    """Base class for numerical failures in this package."""


class IllConditioned(DropError):
    pass


class BranchUndefined(DropError):
    pass


class OutsideBand(DropError):
    pass


class Divergent(DropError):
    """An integral over a band with a multiple endpoint does not converge."""


class Degenerate(Divergent):
    """Zero-width band (the level set is a single point, i.e. a circle)."""


class IntegrandPole(DropError):
    pass


class WrongRegion(DropError):
    pass


class ToleranceFailure(DropError):
    pass


class ExceptionalBand(DropError):
    """Band with a multiple endpoint: the profile curve has no fundamental piece."""


class NonClosure(DropError):
    pass


class NotClosed(DropError):
    pass


class InsufficientResolution(DropError):
    pass


class NotConverged(DropError):
    pass


class CircularInput(DropError):
    pass


class NonEquilibriumRadius(UserWarning):
    pass


class MeanValueViolation(UserWarning):
    pass

__all__ = [
    "DropError",
    "IllConditioned",
    "BranchUndefined",
    "OutsideBand",
    "Divergent",
    "Degenerate",
    "IntegrandPole",
    "WrongRegion",
    "ToleranceFailure",
    "ExceptionalBand",
    "NonClosure",
    "NotClosed",
    "InsufficientResolution",
    "NotConverged",
    "CircularInput",
    "NonEquilibriumRadius",
    "MeanValueViolation",
]

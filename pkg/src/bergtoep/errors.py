"""Exception hierarchy shared by every module of the package."""


class BergtoepError(Exception):
    """Base class for all errors raised by :mod:`bergtoep`."""


class ConfigError(BergtoepError, ValueError):
    """A weight spec, measure spec, polynomial literal or run option is invalid."""


class InvalidInterval(BergtoepError, ValueError):
    pass


class NonConvergent(BergtoepError):
    """Adaptive quadrature exhausted its panel budget."""


class SizeExceeded(BergtoepError, ValueError):
    pass


class NegativeEigenvalue(BergtoepError):
    """A spectrum that should be positive semidefinite is not."""


class DomainError(BergtoepError, ValueError):
    pass


class NotUnit(BergtoepError, ValueError):
    pass


class CoverageFailure(BergtoepError):
    """A packing did not cover its region at the requested radius."""


class LevelOverflow(BergtoepError, ValueError):
    pass


class DegenerateWeight(BergtoepError):
    """A moment or norm underflowed; the weight is too thin for the request."""


class TruncationFailure(BergtoepError):
    """A kernel series could not be truncated to the requested tolerance."""


class MassOverflow(BergtoepError, ValueError):
    pass

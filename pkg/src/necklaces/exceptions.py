"""Exception hierarchy.

Every error raised for invalid chain input derives from :class:`NecklaceError`
so callers (and the CLI) can separate domain violations from programming
errors.
"""


class NecklaceError(ValueError):
    """Base class for domain violations."""


class BeadError(NecklaceError):
    """A bead specification violates a bead invariant."""


class NotStochastic(BeadError):
    pass


class ExtraAbsorbing(BeadError):
    pass


class Unreachable(BeadError):
    pass


class SpanViolation(BeadError):
    pass


class HorizonExceeded(NecklaceError):
    """Iteration did not settle within the hard step cap (nearly absorbing bead)."""


class DegenerateVariance(NecklaceError):
    pass


class NoBeads(NecklaceError):
    pass


class UnknownPattern(NecklaceError):
    pass


class DimensionMismatch(NecklaceError):
    pass


class InvalidStart(NecklaceError):
    pass


class NonpositiveC(NecklaceError):
    pass


class OutOfRange(NecklaceError):
    pass


class NotStationary(NecklaceError):
    pass


class ZeroMassState(NecklaceError):
    pass


class NotReversible(NecklaceError):
    pass


class SupportViolation(NecklaceError):
    pass


class Disconnected(NecklaceError):
    pass


class InvalidPath(NecklaceError):
    pass

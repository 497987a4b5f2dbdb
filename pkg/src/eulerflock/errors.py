"""Exception hierarchy shared by every module of the package."""


class FrontTrackingError(Exception):
    """Base class for all package errors."""


class NonPositiveVolume(FrontTrackingError, ValueError):
    """A specific volume ``u`` was zero or negative."""


class NonPositiveDensity(FrontTrackingError, ValueError):
    """An Eulerian density was zero or negative."""


class NoConvergence(FrontTrackingError, RuntimeError):
    """The scalar Riemann iteration exceeded its iteration limit."""


class NotAShock(FrontTrackingError, ValueError):
    """A shock-only quantity was requested for a non-compressive jump."""


class InvalidThreshold(FrontTrackingError, ValueError):
    """The rarefaction threshold was not strictly positive."""


class InvalidWeight(FrontTrackingError, ValueError):
    """The shock weight of the weighted functional was below one."""


class ConstraintViolation(FrontTrackingError, ValueError):
    """Run parameters violate the damping or threshold constraints."""


class NotCoLocated(FrontTrackingError, RuntimeError):
    """Two fronts handed to the interaction resolver are not at one point."""


class InteractionError(FrontTrackingError, RuntimeError):
    """Crossing fronts changed strength, which the wave algebra forbids."""


class EventOverflow(FrontTrackingError, RuntimeError):
    """The event count exceeded the configured cap."""


class DegenerateJump(FrontTrackingError, ValueError):
    """A Rankine-Hugoniot quotient is undefined for this jump."""


class PeriodMismatch(FrontTrackingError, ValueError):
    """Two periodic profiles do not share a period."""


class ConfigError(FrontTrackingError, ValueError):
    """A scenario file is malformed or misses a required key."""

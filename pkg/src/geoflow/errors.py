"""Exception hierarchy shared by all geoflow modules."""


class GeoflowError(Exception):
    """Base class for geoflow errors."""


class InputError(GeoflowError, ValueError):
    """Malformed or inconsistent input (dimensions, names, config values)."""


class InvariantViolation(GeoflowError):
    """A structural invariant does not hold (singular form, failed validation)."""


class StateError(GeoflowError):
    """An operation was called on an object in the wrong state."""

"""Exception hierarchy shared by all modules."""


class TorifanError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TorifanError):
    """Malformed input data: bad JSON, schema violation, unparsable rational."""


class GeometryError(TorifanError):
    """A geometric precondition failed (non-face, outside support, bad map, ...)."""


class CapacityError(TorifanError):
    """An exact enumeration exceeded its hard bound; the input is out of desk scale."""

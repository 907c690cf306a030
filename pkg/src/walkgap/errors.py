"""Exception hierarchy shared by all walkgap modules."""


class WalkgapError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(WalkgapError, ValueError):
    pass


class ParseError(WalkgapError):
    def __init__(self, message, source=None, line=None, column=None):
        self.source = source
        self.line = line
        self.column = column
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SchemaError(ParseError):
    """A required column or header is missing."""

    def __init__(self, message, column=None, source=None):
        self.missing_column = column
        super().__init__(message, source=source)


# --- routing ---------------------------------------------------------------

class RoutingError(WalkgapError):
    pass


class NoRouteError(RoutingError):
    """No path exists between origin and destination. This is data, not failure."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class TransportError(RoutingError):
    """Network failure that persisted through all retries."""


class DecodeError(RoutingError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


class ApiStatusError(RoutingError):
    def __init__(self, status, message=""):
        self.status = status
        super().__init__(f"directions API returned status {status}" + (f": {message}" if message else ""))


class ConfigurationError(WalkgapError):
    pass


# --- analysis --------------------------------------------------------------

class BackendInconsistencyError(RoutingError):
    """Backend reported a footpath shorter than the great-circle distance."""


class NoCoverageError(WalkgapError):
    """No amenity lies within the walkability radius of a point."""


# --- statistics ------------------------------------------------------------

class StatisticsError(WalkgapError):
    pass


class InvalidRecordError(StatisticsError, ValueError):
    pass


class DegenerateDesignError(StatisticsError):
    def __init__(self, message, columns=()):
        self.columns = tuple(columns)
        super().__init__(message)


class SingularDesignError(DegenerateDesignError):
    """Design matrix is rank deficient; ``columns`` names the collinear set."""


class InvalidWeightError(StatisticsError, ValueError):
    pass


class UndefinedStatisticError(StatisticsError):
    pass


class InsufficientDataError(StatisticsError):
    pass

"""Exception types raised across the package."""


class SvdAlarmError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SvdAlarmError, ValueError):
    pass


class SingularMatrixError(SvdAlarmError, ArithmeticError):
    pass


class TopologyError(SvdAlarmError, ValueError):
    pass


class NoSolutionError(SvdAlarmError, ValueError):
    pass


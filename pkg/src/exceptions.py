"""
This module contains the errors raised by the scheduling library.
"""


class InvalidInputError(ValueError):
    """
    Raised when an input is inconsistent with the system it is used with.
    """


class InvalidScheduleError(InvalidInputError):
    """
    Raised when a scheduling vector is not valid for a system.
    """


class InstanceTooLargeError(ValueError):
    """
    Raised when an exhaustive search is requested on an instance beyond its
    size bounds.
    """


class BracketInvalidError(ValueError):
    """
    Raised when a capacity bracket fails its entry verification.
    """


class ConfigError(ValueError):
    """
    Raised when an experiment configuration cannot be parsed or validated.
    """

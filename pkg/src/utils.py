"""
This module contains various utility functions.
"""
from collections.abc import Iterable, Sequence
from fractions import Fraction
import numbers
from typing import Any, Type

import colorama


# region Ordering functions
def lqf_order(queues: Sequence[int], users: Iterable[int]) -> list[int]:
    """
    Order users by longest queue-length first, breaking ties by the
    ascending user id.

    Args:
        queues: Queue-lengths indexed by user id - 1
        users: The user ids to order

    Returns:
        The ordered user ids.
    """
    return sorted(users, key=lambda user: (-queues[user - 1], user))
# endregion Ordering functions


# region Number functions
def to_fraction(value: Any, variable_name: str) -> Fraction:
    """
    Convert a number or numeric string to an exact fraction.

    Floats are converted through their shortest decimal representation so
    that 0.1 becomes 1/10 rather than its binary expansion.

    Args:
        value: Value to convert
        variable_name: The name of the variable containing the value

    Returns:
        The value as a fraction.
    """
    if isinstance(value, bool):
        raise TypeError(
            f"Invalid type for {variable_name}. Expected a number, got bool."
        )
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, (float, str)):
        try:
            return Fraction(str(value).strip())
        except ValueError as exc:
            raise ValueError(
                f"{variable_name} must be a number, got {value!r}."
            ) from exc
    if isinstance(value, numbers.Real):
        return Fraction(str(float(value)))
    raise TypeError(
        f"Invalid type for {variable_name}. Expected a number,"
        f" got {type(value).__name__}."
    )


def check_non_negative_int(value: Any, variable_name: str) -> int:
    """
    Check the value is a non-negative integer.

    Args:
        value: Value to check
        variable_name: The name of the variable containing the value

    Returns:
        The value as a Python int.
    """
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(
            f"Invalid type for {variable_name}. Expected int,"
            f" got {type(value).__name__}."
        )
    if value < 0:
        raise ValueError(f"{variable_name} must be >= 0, got {value}.")
    return int(value)


def check_positive_int(value: Any, variable_name: str) -> int:
    """
    Check the value is a positive integer.

    Args:
        value: Value to check
        variable_name: The name of the variable containing the value

    Returns:
        The value as a Python int.
    """
    value = check_non_negative_int(value, variable_name)
    if value == 0:
        raise ValueError(f"{variable_name} must be > 0, got 0.")
    return value
# endregion Number functions


# region Error functions
def print_warning(message: str) -> None:  # pragma: no cover
    """
    Print the provided message as a warning message.

    Args:
        message: Message to print.
    """
    colorama.just_fix_windows_console()
    print(f"{colorama.Fore.YELLOW}{message}{colorama.Style.RESET_ALL}")


def print_error(message: str) -> None:  # pragma: no cover
    """
    Print the provided message as an error message.

    Args:
        message: Message to print.
    """
    colorama.just_fix_windows_console()
    print(f"{colorama.Fore.RED}{message}{colorama.Style.RESET_ALL}")


def check_type(
    value: Any,
    types: tuple[Type, ...] | Type,
    variable_name: str
) -> None:
    """
    Checks the value is one of the given types. Otherwise raise a TypeError.

    Args:
        value: Value to check
        types: The expected types
        variable_name: The name of the variable containing the value
    """
    if not isinstance(value, types):
        raise TypeError(
            f"Invalid type for {variable_name}. Expected"
            f""" {
                ' or '.join(type_.__name__ for type_ in types)
                if isinstance(types, Iterable)
                else types.__name__
            }"""
            f", got {type(value).__name__}."
        )
# endregion Error functions


# region String functions
def join_with_different_last(
    tokens: Iterable[str],
    connector: str,
    last_connector: str
) -> str:
    """
    Join a list of items but use a different connector for the last
    pair.

    Args:
        tokens: The words to connect
        connector: The connector for all the pairs except the last
        last_connector: The connector to use for the last pair

    Returns:
        The joined tokens.
    """
    tokens = list(tokens)
    if not tokens:
        return ""

    last = tokens.pop()
    if not tokens:
        return last
    return f"{connector.join(tokens)}{last_connector}{last}"


def format_schedule(slots: Iterable[int]) -> str:
    """
    Format scheduling vector slots as a space separated list.

    Args:
        slots: The user id in each slot, 0 for an idle slot

    Returns:
        The formatted slots, e.g. "3 1 0 0".
    """
    return " ".join(str(slot) for slot in slots)
# endregion String functions

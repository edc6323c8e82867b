"""A module containing the utility functions."""

import re

from portkit.errors import UnboundParameter
from portkit.logger import Logger

# A parameter reference, e.g. $HAND_REACHABLE
PARAMETER = re.compile(r"\$([A-Z][A-Z0-9_]*)")

# A bare parameter name, e.g. HAND_REACHABLE
PARAMETER_NAME = re.compile(r"[A-Z][A-Z0-9_]*")


def format_number(number):
    """Render a parameter value the way it should appear in text."""
    if isinstance(number, float):
        return repr(number)
    return str(number)


def swap_in_str(string, source=None, **params):
    """
    Swap parameter values into a string.

    Every "$NAME" reference (NAME being upper case) is replaced by the
    value of the parameter. Lower case references such as "$item" are left
    alone since they belong to transform templates.

    Args:
        string (str):
            The string to swap the values into.
        source (str):
            Where the string came from, for error messages.
        **params (dict):
            The parameter values.

    Returns:
        str:
            The string with the values swapped in.

    Raises:
        UnboundParameter:
            If a referenced parameter has no value.
    """
    # Find all parameters in the string
    referenced = PARAMETER.findall(string)

    # Ensure we have them all
    missing = sorted(set(referenced) - set(params.keys()))
    if len(missing) > 0:
        raise UnboundParameter(missing[0], source=source)

    # Count the swaps we've made
    if referenced:
        Logger().increment("substitution", len(referenced))

    return PARAMETER.sub(
        lambda match: format_number(params[match.group(1)]), string
    )


def resolve_number(token, params, source=None):
    """
    Turn a numeric operand into a float.

    The operand may be a literal or the bare name of a parameter.

    Args:
        token (str):
            The operand text.
        params (dict):
            The parameter values.
        source (str):
            Where the operand came from, for error messages.

    Returns:
        float:
            The number.

    Raises:
        UnboundParameter:
            If the operand names a parameter without a value.
        ValueError:
            If the operand is neither a number nor a parameter name.
    """
    if PARAMETER_NAME.fullmatch(token):
        if token not in params:
            raise UnboundParameter(token, source=source)
        return float(params[token])
    return float(token)

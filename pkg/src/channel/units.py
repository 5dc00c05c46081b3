"""
Unit parsing for configuration values.

Powers must name their unit; ratios accept dB or plain linear numbers.
"""
import math
import numbers
import re
from typing import Union

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")

_POWER_UNITS = {
    'w': lambda v: v,
    'mw': lambda v: v * 1e-3,
    'dbw': lambda v: 10 ** (v / 10),
    'dbm': lambda v: 10 ** ((v - 30) / 10),
}


def _split(value: str):
    match = _QUANTITY.match(value)
    if not match:
        raise ValueError(f"Cannot parse quantity '{value}'")
    return float(match.group(1)), match.group(2).lower()


def parse_power(value: Union[str, float]) -> float:
    """
    Convert a power such as '40 dBm', '10 dBW', '10 mW' or '0.5 W' to Watts.

    Args:
        value: string with unit, or an already-converted float in Watts

    Returns:
        Power in Watts
    """
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        return float(value)
    number, unit = _split(str(value))
    if unit not in _POWER_UNITS:
        raise ValueError(f"Power '{value}' needs a unit (W, mW, dBW or dBm)")
    return _POWER_UNITS[unit](number)


def parse_ratio(value: Union[str, float]) -> float:
    """Convert '3 dB' or a plain number to a linear ratio."""
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        return float(value)
    number, unit = _split(str(value))
    if unit == 'db':
        return 10 ** (number / 10)
    if unit == '':
        return number
    raise ValueError(f"Ratio '{value}' must be linear or carry a dB suffix")


def to_db(value: float) -> float:
    return 10 * math.log10(value)

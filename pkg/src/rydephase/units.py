"""Frequency strings with explicit units, e.g. ``"6 2pi_MHz"`` or ``"1.5kHz"``.

Plain Hz-family units are cyclic frequencies and are converted with
omega = 2 pi f. The ``2pi_*`` units spell out the "2 pi x f" notation, so
``"6 2pi_MHz"`` and ``"6MHz"`` both mean 2 pi * 6e6 rad/s. ``rad_s`` is taken
as an angular frequency unchanged.
"""

from __future__ import annotations

import math

from .errors import InvalidArgument

__all__ = ["UNITS", "parse_frequency", "format_unit_table"]

TWO_PI = 2.0 * math.pi

# unit -> factor to rad/s
UNITS = {
    "rad_s": 1.0,
    "Hz": TWO_PI,
    "kHz": TWO_PI * 1e3,
    "MHz": TWO_PI * 1e6,
    "2pi_Hz": TWO_PI,
    "2pi_kHz": TWO_PI * 1e3,
    "2pi_MHz": TWO_PI * 1e6,
}

_BY_LENGTH = sorted(UNITS, key=len, reverse=True)


def parse_frequency(text: str) -> float:
    """Angular frequency in rad/s from ``"<number><unit>"``.

    The longest matching unit suffix wins, so ``"62pi_MHz"`` reads as
    6 x 2pi_MHz; a space or ``*`` may separate number and unit.
    """
    if not isinstance(text, str):
        raise InvalidArgument(f"frequency must be a string with a unit, got {text!r}")
    s = text.strip()
    for unit in _BY_LENGTH:
        if s.endswith(unit):
            number = s[: -len(unit)].strip().rstrip("*").strip()
            try:
                value = float(number)
            except ValueError:
                break
            if not math.isfinite(value):
                break
            return value * UNITS[unit]
    raise InvalidArgument(
        f"cannot parse frequency {text!r}; expected '<number><unit>' with unit in "
        + ", ".join(UNITS)
    )


def format_unit_table() -> str:
    rows = [
        ("rad_s", "angular frequency, used as is"),
        ("Hz", "cyclic frequency f, omega = 2 pi f"),
        ("kHz", "cyclic frequency f in kHz, omega = 2 pi f"),
        ("MHz", "cyclic frequency f in MHz, omega = 2 pi f"),
        ("2pi_Hz", "'2 pi x f' notation, same conversion as Hz"),
        ("2pi_kHz", "'2 pi x f' notation, same conversion as kHz"),
        ("2pi_MHz", "'2 pi x f' notation, same conversion as MHz"),
    ]
    lines = [f"{'unit':<9} {'rad/s per unit':>16}  meaning"]
    for unit, meaning in rows:
        lines.append(f"{unit:<9} {UNITS[unit]:>16.9g}  {meaning}")
    lines.append("examples: '1rad_s' -> 1.0, '1Hz' -> 6.283185, '6 2pi_MHz' -> 3.7699e7")
    return "\n".join(lines)

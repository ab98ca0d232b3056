"""
Unit conversion helpers.

All frequencies and rates are handled internally as angular quantities in
rad/s. Values quoted as "X/2π in MHz" or "in Hz" are converted here, at the
I/O boundary only.
"""

import numpy as np
from scipy import constants

TWO_PI = 2.0 * np.pi
HBAR = constants.hbar


def mhz_to_angular(value_mhz: float) -> float:
    """
    Convert a frequency quoted as value/2π in MHz to rad/s.

    Example:
        >>> round(mhz_to_angular(11.0) / 1e7, 3)
        6.912
    """
    return TWO_PI * value_mhz * 1e6


def angular_to_mhz(value: float) -> float:
    """Convert rad/s to value/2π in MHz."""
    return value / (TWO_PI * 1e6)


def hz_to_angular(value_hz: float) -> float:
    """Convert a frequency in Hz (value/2π) to rad/s."""
    return TWO_PI * value_hz


def angular_to_hz(value):
    """Convert rad/s to Hz. Works element-wise on arrays."""
    return value / TWO_PI


def ghz_to_angular(value_ghz: float) -> float:
    """Convert a frequency in GHz (value/2π) to rad/s."""
    return TWO_PI * value_ghz * 1e9

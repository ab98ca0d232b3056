"""
Utility functions for the simulator: unit conversion and line-shape helpers.

CSV input/output lives in ``utils.csv_io`` and is imported from there
directly, since it depends on ``core``.
"""

from .units import (
    TWO_PI,
    HBAR,
    mhz_to_angular,
    angular_to_mhz,
    hz_to_angular,
    angular_to_hz,
    ghz_to_angular,
)

from .lineshape import (
    local_minima,
    parabolic_vertex,
    half_width_at_half_depth,
)

__all__ = [
    # Units
    'TWO_PI',
    'HBAR',
    'mhz_to_angular',
    'angular_to_mhz',
    'hz_to_angular',
    'angular_to_hz',
    'ghz_to_angular',

    # Line shapes
    'local_minima',
    'parabolic_vertex',
    'half_width_at_half_depth',
]

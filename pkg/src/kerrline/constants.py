"""Physical constants and unit helpers.

All internal frequencies and rates are angular (rad/s).  External
interfaces (CLI, config files, CSV) use ordinary frequency in Hz; the
conversion lives here so the factor of 2*pi appears in exactly one place.
"""

import math

HBAR = 1.054571817e-34  # J*s (CODATA 2018)
TWO_PI = 2.0 * math.pi


def hz_to_angular(f):
    """Ordinary frequency (Hz) -> angular frequency (rad/s)."""
    return TWO_PI * f


def angular_to_hz(w):
    """Angular frequency (rad/s) -> ordinary frequency (Hz)."""
    return w / TWO_PI

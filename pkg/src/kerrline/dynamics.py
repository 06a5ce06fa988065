"""Time evolution of the ladder state under static or pulsed driving.

The integrator is an embedded Dormand-Prince 5(4) pair with proportional
step control (compiled kernel when available; numpy twin otherwise).
Generators affine in the control amplitude, L(t) = L0 + rabi_c(t) * Lc,
cover pulsed control with either a piecewise-linear envelope (fast path)
or an arbitrary Python callable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import STATUS_OK, backend, pure
from .core import DensityMatrix
from .errors import StepFailure

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class PiecewiseLinear:
    """Envelope defined by knots (seconds) and values, flat beyond the ends."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be equal-length 1-D arrays")
        if np.any(np.diff(t) < 0.0):
            raise ValueError("knot times must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return float(np.interp(t, self.times, self.values))


def rectangular_pulse(t_start, duration, level, rise_time=0.0) -> PiecewiseLinear:
    """Rectangular envelope with optional linear rise/fall ramps."""
    if duration <= 0.0:
        raise ValueError(f"duration must be > 0, got {duration!r}")
    if rise_time < 0.0:
        raise ValueError(f"rise_time must be >= 0, got {rise_time!r}")
    if 2.0 * rise_time > duration:
        raise ValueError("ramps do not fit: need 2*rise_time <= duration")
    if rise_time == 0.0:
        eps = max(1e-6 * duration, 1e-18)  # numerically sharp edges
        knots = [t_start - eps, t_start, t_start + duration, t_start + duration + eps]
        vals = [0.0, level, level, 0.0]
    else:
        knots = [
            t_start,
            t_start + rise_time,
            t_start + duration - rise_time,
            t_start + duration,
        ]
        vals = [0.0, level, level, 0.0]
    return PiecewiseLinear(np.array(knots), np.array(vals))


_ZERO_COUPLING = np.zeros((9, 9), dtype=np.complex128)
_NO_KNOTS = np.zeros(0, dtype=np.float64)


def time_evolve(lop, rho0, t_grid, control_envelope=None, control_coupling=None,
                rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, max_steps=1_000_000):
    """Propagate rho through the points of t_grid.

    Parameters
    ----------
    lop : (9, 9) generator for the static part of the dynamics.
    rho0 : DensityMatrix or 3x3 array, the state at t_grid[0].
    t_grid : strictly increasing times (s), t_grid[0] >= 0.
    control_envelope : optional rabi_c(t); a :class:`PiecewiseLinear` runs on
        the compiled kernel, any other callable uses the numpy integrator.
    control_coupling : (9, 9) dL/d(rabi_c), required with an envelope
        (see :func:`kerrline.core.control_coupling`).

    Returns an (nt, 3, 3) complex array of states.  Raises StepFailure when
    the step controller cannot meet the tolerance.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if t_grid.size > 1 and np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    if t_grid[0] < 0.0:
        raise ValueError("t_grid[0] must be >= 0")
    if (control_envelope is None) != (control_coupling is None):
        raise ValueError("control_envelope and control_coupling go together")

    mat = rho0.rho if isinstance(rho0, DensityMatrix) else np.asarray(rho0)
    y0 = np.ascontiguousarray(mat, dtype=np.complex128).reshape(9)
    lop = np.ascontiguousarray(lop, dtype=np.complex128)

    if control_envelope is None:
        states, status = backend.propagate(
            lop, _ZERO_COUPLING, _NO_KNOTS, _NO_KNOTS, y0, t_grid, rtol, atol, max_steps
        )
    elif isinstance(control_envelope, PiecewiseLinear):
        states, status = backend.propagate(
            lop,
            np.ascontiguousarray(control_coupling, dtype=np.complex128),
            control_envelope.times,
            control_envelope.values,
            y0,
            t_grid,
            rtol,
            atol,
            max_steps,
        )
    else:
        states, status = pure.propagate_callback(
            lop,
            np.ascontiguousarray(control_coupling, dtype=np.complex128),
            control_envelope,
            y0,
            t_grid,
            rtol,
            atol,
            max_steps,
        )
    if status != STATUS_OK:
        raise StepFailure(
            f"adaptive stepping failed (status {status}); tighten tolerances or "
            "check the generator for pathological stiffness"
        )
    return states.reshape(-1, 3, 3)

"""Shared fixtures and independent oracles.

``bloch_rhs`` writes the nine equations of motion element by element from
the commutator and damping terms directly; it shares no construction code
with the package's kron-built generator, so long-time integration of it is
an independent route to the steady state.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kerrline import AtomParams
from kerrline.constants import TWO_PI


def mhz(x):
    """X/2pi in MHz -> angular rad/s."""
    return TWO_PI * x * 1e6


@pytest.fixture(scope="session")
def low_power_atom():
    """Fitted rates of the frequency-map dataset (7.1 GHz working point)."""
    return AtomParams.from_hz(
        omega01=7.1e9, omega12=6.38e9,
        gamma_rel_10=74e6, gamma_rel_21=148e6,
        gamma_coh_10=60e6, gamma_coh_21=90e6,
    )


@pytest.fixture(scope="session")
def pulse_atom():
    """Fitted rates of the pulsed measurement (7.26 GHz working point)."""
    return AtomParams.from_hz(
        omega01=7.26e9, omega12=6.38e9,
        gamma_rel_10=140e6, gamma_rel_21=170e6,
        gamma_coh_10=100e6, gamma_coh_21=184e6,
    )


def bloch_rhs(rates, delta_p, delta_c, rabi_p, rabi_c):
    """Element-wise equations of motion, written independently of the package."""
    g_rel10, g_rel21, g10, g21, g20 = rates
    a = rabi_p / 2.0
    b = rabi_c / 2.0
    dp = delta_p
    d2 = delta_p + delta_c

    def rhs(_t, y):
        r = y.reshape(3, 3)
        f = np.empty((3, 3), dtype=np.complex128)
        f[0, 0] = -1j * a * (r[1, 0] - r[0, 1]) + g_rel10 * r[1, 1]
        f[0, 1] = -1j * (a * (r[1, 1] - r[0, 0]) + dp * r[0, 1] - b * r[0, 2]) - g10 * r[0, 1]
        f[0, 2] = -1j * (a * r[1, 2] - b * r[0, 1] + d2 * r[0, 2]) - g20 * r[0, 2]
        f[1, 0] = -1j * (a * (r[0, 0] - r[1, 1]) - dp * r[1, 0] + b * r[2, 0]) - g10 * r[1, 0]
        f[1, 1] = (
            -1j * (a * (r[0, 1] - r[1, 0]) + b * (r[2, 1] - r[1, 2]))
            - g_rel10 * r[1, 1]
            + g_rel21 * r[2, 2]
        )
        f[1, 2] = -1j * (a * r[0, 2] + delta_c * r[1, 2] + b * (r[2, 2] - r[1, 1])) - g21 * r[1, 2]
        f[2, 0] = -1j * (b * r[1, 0] - a * r[2, 1] - d2 * r[2, 0]) - g20 * r[2, 0]
        f[2, 1] = -1j * (b * (r[1, 1] - r[2, 2]) - a * r[2, 0] - delta_c * r[2, 1]) - g21 * r[2, 1]
        f[2, 2] = -1j * b * (r[1, 2] - r[2, 1]) - g_rel21 * r[2, 2]
        return f.reshape(9)

    return rhs


def integrate_bloch(rates, delta_p, delta_c, rabi_p, rabi_c, t_final, rho0=None,
                    rtol=1e-10, atol=1e-13):
    """Long-time state via scipy's integrator on the hand-written equations."""
    if rho0 is None:
        rho0 = np.zeros((3, 3), dtype=np.complex128)
        rho0[0, 0] = 1.0
    rhs = bloch_rhs(rates, delta_p, delta_c, rabi_p, rabi_c)
    sol = solve_ivp(
        rhs, (0.0, t_final), np.asarray(rho0, dtype=np.complex128).reshape(9),
        method="RK45", rtol=rtol, atol=atol,
    )
    assert sol.success
    return sol.y[:, -1].reshape(3, 3)

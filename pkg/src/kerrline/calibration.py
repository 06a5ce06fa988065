"""Power, photon-number and Rabi-frequency conversions for the two tones.

The single-photon yardstick is the mean photon number per interaction
time: <N> = P / (hbar * omega * (Gamma / 2pi)), with Gamma the relaxation
rate of the driven transition (gamma_rel_10 for the probe, gamma_rel_21
for the control).  The drive-strength map is

    rabi_p = sqrt(2 * gamma_rel_10 * P / (hbar * omega)),

and the control tone at the same line power drives its transition sqrt(2)
harder than the probe would (dipole ratio of the 1-2 vs 0-1 transition):
rabi_c(P) = sqrt(2) * rabi_p(P).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import HBAR, TWO_PI
from .errors import NonPositive

_SQRT2 = math.sqrt(2.0)


def dbm_to_watts(p_dbm: float) -> float:
    """dBm -> watts."""
    if not math.isfinite(p_dbm):
        raise NonPositive(f"power must be finite, got {p_dbm!r}")
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    """Watts -> dBm (requires p > 0)."""
    if not (p_watts > 0.0):
        raise NonPositive(f"power must be > 0 W, got {p_watts!r}")
    return 10.0 * math.log10(p_watts / 1e-3)


def photon_flux(p_watts: float, omega: float) -> float:
    """Photons per second carried by power p at carrier omega (rad/s)."""
    if omega <= 0.0:
        raise NonPositive(f"omega must be > 0, got {omega!r}")
    if p_watts < 0.0:
        raise NonPositive(f"power must be >= 0, got {p_watts!r}")
    return p_watts / (HBAR * omega)


def mean_photon_number(p_watts: float, omega: float, gamma_rel: float) -> float:
    """<N> per interaction time 2*pi/gamma_rel of the driven transition."""
    if gamma_rel <= 0.0:
        raise NonPositive(f"gamma_rel must be > 0, got {gamma_rel!r}")
    return photon_flux(p_watts, omega) / (gamma_rel / TWO_PI)


def control_photon_number(p_c: float, omega_c: float, gamma_rel_21: float) -> float:
    """<N_c> for control power p_c (W) at omega_c (rad/s)."""
    return mean_photon_number(p_c, omega_c, gamma_rel_21)


def probe_photon_number(p_p: float, omega_p: float, gamma_rel_10: float) -> float:
    """<N_p> for probe power p_p (W) at omega_p (rad/s)."""
    return mean_photon_number(p_p, omega_p, gamma_rel_10)


def power_from_photon_number(n: float, omega: float, gamma_rel: float) -> float:
    """Inverse of :func:`mean_photon_number`."""
    if gamma_rel <= 0.0 or omega <= 0.0:
        raise NonPositive("omega and gamma_rel must be > 0")
    if n < 0.0:
        raise NonPositive(f"photon number must be >= 0, got {n!r}")
    return n * HBAR * omega * (gamma_rel / TWO_PI)


def rabi_from_power(p_watts: float, omega: float, gamma_rel_10: float,
                    tone: str = "probe") -> float:
    """Rabi frequency (rad/s) for line power p at carrier omega.

    ``tone='control'`` applies the sqrt(2) dipole factor on top of the probe
    map; gamma_rel_10 stays the normalizing rate for both tones.
    """
    if tone not in ("probe", "control"):
        raise ValueError(f"tone must be 'probe' or 'control', got {tone!r}")
    if omega <= 0.0:
        raise NonPositive(f"omega must be > 0, got {omega!r}")
    if gamma_rel_10 <= 0.0:
        raise NonPositive(f"gamma_rel_10 must be > 0, got {gamma_rel_10!r}")
    if p_watts < 0.0:
        raise NonPositive(f"power must be >= 0, got {p_watts!r}")
    rabi = math.sqrt(2.0 * gamma_rel_10 * p_watts / (HBAR * omega))
    return _SQRT2 * rabi if tone == "control" else rabi


def probe_rabi_from_photons(n_p: float, omega_p: float, gamma_rel_10: float) -> float:
    """rabi_p at a probe power of <N_p> photons per interaction time."""
    p = power_from_photon_number(n_p, omega_p, gamma_rel_10)
    return rabi_from_power(p, omega_p, gamma_rel_10, "probe")


def control_rabi_from_photons(n_c: float, omega_c: float, gamma_rel_10: float,
                              gamma_rel_21: float) -> float:
    """rabi_c at a control power of <N_c> photons per interaction time."""
    p = power_from_photon_number(n_c, omega_c, gamma_rel_21)
    return rabi_from_power(p, omega_c, gamma_rel_10, "control")


@dataclass(frozen=True)
class PowerPoint:
    """One tone power expressed every way the toolkit uses."""

    power_dbm: float
    power_watts: float
    photon_flux: float
    mean_photons: float

    @classmethod
    def from_dbm(cls, p_dbm: float, omega: float, gamma_rel: float) -> "PowerPoint":
        w = dbm_to_watts(p_dbm)
        return cls(
            power_dbm=p_dbm,
            power_watts=w,
            photon_flux=photon_flux(w, omega),
            mean_photons=mean_photon_number(w, omega, gamma_rel),
        )

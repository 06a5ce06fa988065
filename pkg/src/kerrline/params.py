"""Parameter containers for the driven three-level ladder.

Level ordering is |0>, |1>, |2> with transition frequencies omega01 (0-1)
and omega12 (1-2).  A probe tone drives 0-1, a control tone drives 1-2.
Everything here is angular (rad/s); use ``AtomParams.from_hz`` /
``DriveParams.from_hz`` when starting from ordinary frequencies.

Decoherence is described by two population relaxation rates (gamma_rel_10,
gamma_rel_21, the 1->0 and 2->1 emission channels) and three coherence
decay rates gamma_coh_10, gamma_coh_21, gamma_coh_20 acting on rho_10,
rho_21, rho_20.  Two parameterizations are supported:

``direct``
    The three coherence rates are imposed on the coherence blocks of the
    generator as given, independent of the relaxation rates.  This admits
    rate combinations that no dephasing-operator model reproduces (useful
    when rates come from a fit) at the price of complete positivity not
    being guaranteed.

``lindblad``
    Pure dephasing is carried by jump operators sqrt(2*phi1)|1><1| and
    sqrt(2*phi2)|2><2| with phi1 = gamma_coh_10 - gamma_rel_10/2 and
    phi2 = gamma_coh_21 - (gamma_rel_10 + gamma_rel_21)/2 - phi1, both
    required non-negative.  gamma_coh_20 is then implied and must not be
    set independently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .constants import TWO_PI
from .errors import InvalidRates, NonPositive

_RATE_TOL = 1e-9  # relative slack for dephasing non-negativity checks


def dephasing_budget(gamma_rel_10, gamma_rel_21, gamma_coh_10, gamma_coh_21):
    """Pure-dephasing rates (phi1, phi2) implied by the coherence rates.

    phi1 dephases level |1>, phi2 level |2>.  Either may come out negative,
    which means the rate set is not representable by dephasing operators.
    """
    phi1 = gamma_coh_10 - gamma_rel_10 / 2.0
    phi2 = gamma_coh_21 - (gamma_rel_10 + gamma_rel_21) / 2.0 - phi1
    return phi1, phi2


def default_gamma_coh_20(gamma_rel_10, gamma_rel_21, gamma_coh_10, gamma_coh_21):
    """Default decay rate for the two-photon coherence rho_20.

    When the rate set admits a non-negative aggregate pure-dephasing budget
    (gamma_coh_10 >= gamma_rel_10/2 and gamma_coh_21 >= the relaxation
    floor), distribute it as
        gamma_coh_20 = gamma_coh_10 + gamma_coh_21
                       - (gamma_rel_10 + gamma_rel_21)/2 + gamma_rel_21/2.
    Otherwise fall back to the mean of the two single-photon rates.
    """
    floor_10 = gamma_rel_10 / 2.0
    floor_21 = (gamma_rel_10 + gamma_rel_21) / 2.0
    if gamma_coh_10 >= floor_10 * (1.0 - _RATE_TOL) and gamma_coh_21 >= floor_21 * (1.0 - _RATE_TOL):
        return gamma_coh_10 + gamma_coh_21 - floor_21 + gamma_rel_21 / 2.0
    return 0.5 * (gamma_coh_10 + gamma_coh_21)


@dataclass(frozen=True)
class AtomParams:
    """Fixed physics of the artificial atom (all rates angular, rad/s).

    ``gamma_coh_20=None`` selects :func:`default_gamma_coh_20`.  The optional
    capacitances feed :func:`kerrline.core.gamma10_from_circuit` only.
    """

    omega01: float
    omega12: float
    gamma_rel_10: float
    gamma_rel_21: float
    gamma_coh_10: float
    gamma_coh_21: float
    gamma_coh_20: float | None = None
    cc: float | None = None
    c_sigma: float | None = None
    z0: float = 50.0
    dephasing_mode: str = "direct"

    def __post_init__(self):
        if not (self.omega01 > self.omega12 > 0.0):
            raise NonPositive(
                "need omega01 > omega12 > 0 (positive anharmonicity), got "
                f"omega01={self.omega01!r}, omega12={self.omega12!r}"
            )
        for name in ("gamma_rel_10", "gamma_rel_21", "gamma_coh_10", "gamma_coh_21"):
            if getattr(self, name) < 0.0:
                raise InvalidRates(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if self.gamma_coh_20 is not None and self.gamma_coh_20 < 0.0:
            raise InvalidRates(f"gamma_coh_20 must be >= 0, got {self.gamma_coh_20!r}")
        if self.z0 <= 0.0:
            raise NonPositive(f"z0 must be > 0, got {self.z0!r}")
        if self.dephasing_mode not in ("direct", "lindblad"):
            raise InvalidRates(f"unknown dephasing_mode {self.dephasing_mode!r}")
        if self.dephasing_mode == "lindblad":
            phi1, phi2 = dephasing_budget(
                self.gamma_rel_10, self.gamma_rel_21, self.gamma_coh_10, self.gamma_coh_21
            )
            scale = max(self.gamma_rel_10, self.gamma_rel_21, 1.0)
            if phi1 < -_RATE_TOL * scale or phi2 < -_RATE_TOL * scale:
                raise InvalidRates(
                    "coherence rates unreachable with non-negative dephasing "
                    f"operators (phi1={phi1!r}, phi2={phi2!r}); use dephasing_mode='direct'"
                )
            implied = self.gamma_rel_21 / 2.0 + phi2
            if self.gamma_coh_20 is not None and abs(self.gamma_coh_20 - implied) > _RATE_TOL * scale:
                raise InvalidRates(
                    "gamma_coh_20 is implied in lindblad mode "
                    f"({implied!r}); leave it unset or pass the implied value"
                )

    @classmethod
    def from_hz(cls, omega01, omega12, gamma_rel_10, gamma_rel_21, gamma_coh_10,
                gamma_coh_21, gamma_coh_20=None, **kwargs):
        """Build from ordinary frequencies in Hz (the usual quoted X/2pi values)."""
        return cls(
            omega01=TWO_PI * omega01,
            omega12=TWO_PI * omega12,
            gamma_rel_10=TWO_PI * gamma_rel_10,
            gamma_rel_21=TWO_PI * gamma_rel_21,
            gamma_coh_10=TWO_PI * gamma_coh_10,
            gamma_coh_21=TWO_PI * gamma_coh_21,
            gamma_coh_20=None if gamma_coh_20 is None else TWO_PI * gamma_coh_20,
            **kwargs,
        )

    @property
    def anharmonicity(self):
        return self.omega01 - self.omega12

    @property
    def gamma20(self):
        """Resolved rho_20 decay rate (explicit value, or mode-consistent default)."""
        if self.dephasing_mode == "lindblad":
            _, phi2 = dephasing_budget(
                self.gamma_rel_10, self.gamma_rel_21, self.gamma_coh_10, self.gamma_coh_21
            )
            return self.gamma_rel_21 / 2.0 + phi2
        if self.gamma_coh_20 is not None:
            return self.gamma_coh_20
        return default_gamma_coh_20(
            self.gamma_rel_10, self.gamma_rel_21, self.gamma_coh_10, self.gamma_coh_21
        )

    def with_(self, **changes) -> "AtomParams":
        """Copy with fields replaced (frozen dataclass convenience)."""
        return replace(self, **changes)


@dataclass(frozen=True)
class DriveParams:
    """The two coherent tones: absolute frequencies and Rabi amplitudes (rad/s)."""

    omega_p: float
    omega_c: float
    rabi_p: float
    rabi_c: float

    def __post_init__(self):
        if self.rabi_p < 0.0 or self.rabi_c < 0.0:
            raise InvalidRates(
                f"Rabi frequencies must be >= 0, got rabi_p={self.rabi_p!r}, rabi_c={self.rabi_c!r}"
            )

    @classmethod
    def from_hz(cls, omega_p, omega_c, rabi_p, rabi_c):
        return cls(TWO_PI * omega_p, TWO_PI * omega_c, TWO_PI * rabi_p, TWO_PI * rabi_c)

    def delta_p(self, atom: AtomParams) -> float:
        """Probe detuning omega_p - omega01 (rad/s); sign convention used throughout."""
        return self.omega_p - atom.omega01

    def delta_c(self, atom: AtomParams) -> float:
        """Control detuning omega_c - omega12 (rad/s)."""
        return self.omega_c - atom.omega12

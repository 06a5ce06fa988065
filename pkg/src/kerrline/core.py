"""Rotating-frame model of the driven ladder and its steady-state scattering.

Hamiltonian convention (hbar = 1, frame rotating with both tones)::

    H = -delta_p |1><1| - (delta_p + delta_c) |2><2|
        + (rabi_p/2)(|0><1| + |1><0|) + (rabi_c/2)(|1><2| + |2><1|)

with delta_p = omega_p - omega01 and delta_c = omega_c - omega12.  The
generator acts on the row-major vectorization vec(rho)[3*i+j] = rho[i, j].

Probe transmission is read off the 1-0 coherence,

    t = 1 - 1j * (gamma_rel_10 / rabi_p) * rho[1, 0],

normalized so that a weak resonant probe on a dephasing-free atom is fully
reflected (t -> 0) and the transmitted phase increases with control power
just above resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import pure
from .errors import NonPositive, SingularSystem, ZeroProbe
from .params import AtomParams, DriveParams

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-8
STEADY_RESIDUAL_TOL = 1e-9  # on the generator normalized to unit largest entry


def wrap_phase_deg(phi):
    """Wrap a phase in degrees into (-180, 180]."""
    w = math.remainder(phi, 360.0)
    return 180.0 if w == -180.0 else w


@dataclass(frozen=True)
class DensityMatrix:
    """3x3 state of the ladder, basis order |0>, |1>, |2>."""

    rho: np.ndarray

    @classmethod
    def ground(cls) -> "DensityMatrix":
        rho = np.zeros((3, 3), dtype=np.complex128)
        rho[0, 0] = 1.0
        return cls(rho)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def trace_defect(self) -> float:
        return abs(complex(self.rho.trace()) - 1.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def is_physical(self, herm_tol=HERMITICITY_TOL, trace_tol=TRACE_TOL,
                    eig_tol=POSITIVITY_TOL) -> bool:
        return (
            self.hermiticity_defect() < herm_tol
            and self.trace_defect() < trace_tol
            and self.min_eigenvalue() >= eig_tol
        )


@dataclass(frozen=True)
class TransmissionPoint:
    """Complex probe transmission at one operating point."""

    t: complex

    @property
    def r(self) -> complex:
        """Reflection; t = 1 + r for this side-coupled scatterer."""
        return self.t - 1.0

    @property
    def magnitude(self) -> float:
        return abs(self.t)

    @property
    def phase_deg(self) -> float:
        return wrap_phase_deg(math.degrees(np.angle(self.t)))


def resolved_rates(atom: AtomParams):
    """The 5 rates the kernels consume, with gamma20 defaulting applied."""
    return (
        atom.gamma_rel_10,
        atom.gamma_rel_21,
        atom.gamma_coh_10,
        atom.gamma_coh_21,
        atom.gamma20,
    )


def build_hamiltonian(atom: AtomParams, drive: DriveParams) -> np.ndarray:
    """Rotating-frame Hamiltonian over hbar (rad/s), Hermitian by construction."""
    dp = drive.delta_p(atom)
    dc = drive.delta_c(atom)
    return np.array(
        [
            [0.0, drive.rabi_p / 2.0, 0.0],
            [drive.rabi_p / 2.0, -dp, drive.rabi_c / 2.0],
            [0.0, drive.rabi_c / 2.0, -(dp + dc)],
        ],
        dtype=np.complex128,
    )


def build_liouvillian(atom: AtomParams, drive: DriveParams) -> np.ndarray:
    """9x9 generator of d vec(rho)/dt = L vec(rho).

    Population flow follows the relaxation channels 1->0 and 2->1; the three
    coherences decay at the atom's resolved gamma rates (rate combinations a
    dephasing-operator model cannot reach are rejected when ``AtomParams``
    is constructed in ``lindblad`` mode).  The trace functional annihilates
    L by construction.
    """
    return pure.generator(
        resolved_rates(atom), drive.delta_p(atom), drive.delta_c(atom),
        drive.rabi_p, drive.rabi_c,
    )


def control_coupling(atom: AtomParams, drive: DriveParams) -> np.ndarray:
    """dL/d(rabi_c): the generator's linear response to the control amplitude.

    Used to assemble time-dependent generators L(t) = L0 + rabi_c(t) * coupling
    for pulse simulations (L is affine in rabi_c for this model).
    """
    rates = resolved_rates(atom)
    dp = drive.delta_p(atom)
    dc = drive.delta_c(atom)
    return pure.generator(rates, dp, dc, drive.rabi_p, 1.0) - pure.generator(
        rates, dp, dc, drive.rabi_p, 0.0
    )


def steady_state(lop: np.ndarray, resid_tol: float = STEADY_RESIDUAL_TOL) -> DensityMatrix:
    """Steady state of a trace-preserving generator.

    Solves the 9x9 system with the first row replaced by the trace
    constraint (LU, partial pivoting) and verifies the residual against the
    unmodified generator; an SVD null-space solve is the fallback.  The
    residual tolerance applies to the generator scaled to unit largest
    entry, keeping the criterion meaningful for rad/s magnitudes.
    """
    lop = np.asarray(lop, dtype=np.complex128)
    try:
        rho, resid = pure.steady_from_generator(lop)
        if resid < resid_tol:
            return DensityMatrix(rho)
    except np.linalg.LinAlgError:
        pass
    # SVD fallback: smallest right singular vector, normalized to unit trace
    scale = np.abs(lop).max()
    if scale == 0.0:
        raise SingularSystem("zero generator: every state is stationary")
    ln = lop / scale
    _, svals, vh = np.linalg.svd(ln)
    if svals[-2] < 1e-9 * svals[0]:
        raise SingularSystem(
            "null space dimension exceeds one: the steady state is not unique "
            f"(two smallest singular values {svals[-1]:.3e}, {svals[-2]:.3e})"
        )
    x = vh[-1].conj()
    tr = x[0] + x[4] + x[8]
    if abs(tr) < 1e-12:
        raise SingularSystem(
            f"traceless null vector (smallest singular value {svals[-1]:.3e}); "
            "steady state is degenerate or non-unique"
        )
    x = x / tr
    resid = float(np.abs(ln @ x).max())
    if resid >= resid_tol:
        raise SingularSystem(
            f"steady-state residual {resid:.3e} exceeds tolerance {resid_tol:.3e}"
        )
    return DensityMatrix(x.reshape(3, 3))


def steady_state_point(atom: AtomParams, drive: DriveParams,
                       resid_tol: float = STEADY_RESIDUAL_TOL) -> DensityMatrix:
    """Convenience: steady state straight from parameters."""
    return steady_state(build_liouvillian(atom, drive), resid_tol)


def transmission(atom: AtomParams, drive: DriveParams, rho) -> TransmissionPoint:
    """Probe transmission for a given atomic state.

    Accepts a DensityMatrix or a bare 3x3 array.  Raises ZeroProbe when
    rabi_p = 0 (t is defined relative to a nonzero input).
    """
    if drive.rabi_p <= 0.0:
        raise ZeroProbe("transmission undefined for rabi_p = 0")
    mat = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho)
    t = 1.0 - 1j * (atom.gamma_rel_10 / drive.rabi_p) * complex(mat[1, 0])
    return TransmissionPoint(t)


def transmission_at(atom: AtomParams, drive: DriveParams,
                    resid_tol: float = STEADY_RESIDUAL_TOL) -> TransmissionPoint:
    """Steady-state transmission at one operating point."""
    return transmission(atom, drive, steady_state_point(atom, drive, resid_tol))


def gamma10_from_circuit(omega01: float, cc: float, z0: float, c_sigma: float) -> float:
    """Relaxation rate of the 0-1 transition from the coupling circuit.

    gamma_rel_10 = omega01**2 * cc**2 * z0 / (4 * c_sigma), valid when
    emission into the line is the only relaxation channel.
    """
    if omega01 <= 0.0:
        raise NonPositive(f"omega01 must be > 0, got {omega01!r}")
    if z0 <= 0.0:
        raise NonPositive(f"z0 must be > 0, got {z0!r}")
    if c_sigma <= 0.0:
        raise NonPositive(f"c_sigma must be > 0, got {c_sigma!r}")
    if cc < 0.0:
        raise NonPositive(f"cc must be >= 0, got {cc!r}")
    return omega01 * omega01 * cc * cc * z0 / (4.0 * c_sigma)


def coupling_capacitance_for_rate(gamma_rel_10: float, omega01: float, z0: float,
                                  c_sigma: float) -> float:
    """Inverse of :func:`gamma10_from_circuit`: the cc giving a target rate."""
    if gamma_rel_10 < 0.0:
        raise NonPositive(f"gamma_rel_10 must be >= 0, got {gamma_rel_10!r}")
    if omega01 <= 0.0 or z0 <= 0.0 or c_sigma <= 0.0:
        raise NonPositive("omega01, z0 and c_sigma must be > 0")
    return math.sqrt(4.0 * c_sigma * gamma_rel_10 / z0) / omega01

"""Simulator and fitting toolkit for a three-level artificial atom
strongly coupled to an open 1D transmission line.

Steady-state probe transmission under a control tone, doublet splitting,
cross-Kerr phase shifts per control photon, probe-saturation scans,
pulsed-control time response, and damped least-squares fitting of complex
transmission data.
"""

from ._kernels import backend_name
from .calibration import (
    PowerPoint,
    control_photon_number,
    control_rabi_from_photons,
    dbm_to_watts,
    mean_photon_number,
    photon_flux,
    power_from_photon_number,
    probe_photon_number,
    probe_rabi_from_photons,
    rabi_from_power,
    watts_to_dbm,
)
from .core import (
    DensityMatrix,
    TransmissionPoint,
    build_hamiltonian,
    build_liouvillian,
    control_coupling,
    coupling_capacitance_for_rate,
    gamma10_from_circuit,
    steady_state,
    steady_state_point,
    transmission,
    transmission_at,
    wrap_phase_deg,
)
from .dynamics import PiecewiseLinear, rectangular_pulse, time_evolve
from .errors import (
    ConfigError,
    DegenerateJacobian,
    InvalidRates,
    KerrlineError,
    NoDoublet,
    NonConvergence,
    NonPositive,
    SingularSystem,
    StepFailure,
    ZeroProbe,
)
from .experiments import (
    KerrResult,
    PulseResult,
    PulseSpec,
    SaturationResult,
    SweepResult,
    SweepSpec,
    autler_townes_splitting,
    kerr_slope,
    pulse_response,
    saturation_scan,
    sweep_map,
)
from .fitting import Dataset, FitReport, FitSpec, fit, model_predict, synthesize
from .params import AtomParams, DriveParams, default_gamma_coh_20, dephasing_budget

__version__ = "0.1.0"

__all__ = [
    "AtomParams",
    "ConfigError",
    "Dataset",
    "DegenerateJacobian",
    "DensityMatrix",
    "DriveParams",
    "FitReport",
    "FitSpec",
    "InvalidRates",
    "KerrResult",
    "KerrlineError",
    "NoDoublet",
    "NonConvergence",
    "NonPositive",
    "PiecewiseLinear",
    "PowerPoint",
    "PulseResult",
    "PulseSpec",
    "SaturationResult",
    "SingularSystem",
    "StepFailure",
    "SweepResult",
    "SweepSpec",
    "TransmissionPoint",
    "ZeroProbe",
    "autler_townes_splitting",
    "backend_name",
    "build_hamiltonian",
    "build_liouvillian",
    "control_coupling",
    "control_photon_number",
    "control_rabi_from_photons",
    "coupling_capacitance_for_rate",
    "dbm_to_watts",
    "default_gamma_coh_20",
    "dephasing_budget",
    "fit",
    "gamma10_from_circuit",
    "kerr_slope",
    "mean_photon_number",
    "model_predict",
    "photon_flux",
    "power_from_photon_number",
    "probe_photon_number",
    "probe_rabi_from_photons",
    "pulse_response",
    "rabi_from_power",
    "rectangular_pulse",
    "saturation_scan",
    "steady_state",
    "steady_state_point",
    "sweep_map",
    "synthesize",
    "time_evolve",
    "transmission",
    "transmission_at",
    "watts_to_dbm",
    "wrap_phase_deg",
]

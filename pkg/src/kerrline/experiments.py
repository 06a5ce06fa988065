"""Measurement pipelines: frequency/power maps, doublet splitting, Kerr
slope, probe-saturation scans and pulsed control response.

Every pipeline is deterministic: grids are evaluated in row-major order
(power outer, frequency inner) and optional thread parallelism only
partitions the same job list, writing results by index.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import calibration
from ._kernels import backend
from .constants import TWO_PI
from .core import (
    DensityMatrix,
    STEADY_RESIDUAL_TOL,
    control_coupling,
    build_liouvillian,
    resolved_rates,
    steady_state,
    transmission,
    wrap_phase_deg,
)
from .dynamics import rectangular_pulse, time_evolve
from .errors import NoDoublet, SingularSystem
from .params import AtomParams, DriveParams

_FMT = "%.12g"


def _phases_deg(t):
    return np.degrees(np.angle(t))


def _wrap_deg(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def _solve_jobs(rates, jobs, parallelism):
    """rho[1,0] for each (delta_p, delta_c, rabi_p, rabi_c) row."""
    jobs = np.ascontiguousarray(jobs, dtype=np.float64)
    if parallelism <= 1 or jobs.shape[0] < 2 * parallelism:
        return backend.steady_rho10_batch(rates, jobs)
    rho10 = np.empty(jobs.shape[0], dtype=np.complex128)
    resid = np.empty(jobs.shape[0], dtype=np.float64)
    bounds = np.linspace(0, jobs.shape[0], parallelism + 1).astype(int)

    def work(lo, hi):
        rho10[lo:hi], resid[lo:hi] = backend.steady_rho10_batch(rates, jobs[lo:hi])

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futures:
            f.result()
    return rho10, resid


def _check_residuals(resid, tol, coords):
    bad = np.flatnonzero(~(resid < tol))
    if bad.size:
        i = int(bad[0])
        raise SingularSystem(
            f"steady-state solve failed at {coords(i)} (residual {resid[i]:.3e}, tol {tol:.3e})"
        )


@dataclass(frozen=True)
class SweepSpec:
    """Probe-frequency x control-power grid around fixed atom parameters.

    Exactly one of probe_power_dbm / probe_photons sets the probe strength
    (photons are per interaction time, converted at the 0-1 frequency).
    The control is resonant on 1-2 unless omega_c_hz overrides it.
    """

    atom: AtomParams
    freqs_hz: np.ndarray
    powers_dbm: np.ndarray
    probe_power_dbm: float | None = None
    probe_photons: float | None = None
    omega_c_hz: float | None = None
    pair_control_off: bool = True
    resid_tol: float = STEADY_RESIDUAL_TOL

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=np.float64)
        p = np.asarray(self.powers_dbm, dtype=np.float64)
        if f.size == 0 or p.size == 0:
            raise ValueError("frequency and power grids must be non-empty")
        if f.size > 1 and not (np.all(np.diff(f) > 0) or np.all(np.diff(f) < 0)):
            raise ValueError("frequency grid must be strictly monotone")
        if p.size > 1 and not (np.all(np.diff(p) > 0) or np.all(np.diff(p) < 0)):
            raise ValueError("power grid must be strictly monotone")
        if (self.probe_power_dbm is None) == (self.probe_photons is None):
            raise ValueError("set exactly one of probe_power_dbm / probe_photons")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "powers_dbm", p)

    @classmethod
    def around_resonance(cls, atom: AtomParams, span_hz=300e6, n_freqs=201,
                         power_start_dbm=-140.0, power_stop_dbm=-108.0, n_powers=17,
                         **kwargs) -> "SweepSpec":
        """Default map: n_freqs across omega01 +- span/2, linear dBm rows."""
        f0 = atom.omega01 / TWO_PI
        return cls(
            atom=atom,
            freqs_hz=np.linspace(f0 - span_hz / 2, f0 + span_hz / 2, n_freqs),
            powers_dbm=np.linspace(power_start_dbm, power_stop_dbm, n_powers),
            **kwargs,
        )

    def probe_power_watts(self) -> float:
        if self.probe_power_dbm is not None:
            return calibration.dbm_to_watts(self.probe_power_dbm)
        return calibration.power_from_photon_number(
            self.probe_photons, self.atom.omega01, self.atom.gamma_rel_10
        )

    def omega_c(self) -> float:
        return self.atom.omega12 if self.omega_c_hz is None else TWO_PI * self.omega_c_hz


@dataclass(frozen=True)
class SweepResult:
    """Grids of transmission with control on/off plus induced responses.

    2-D arrays are indexed [power, frequency]; delta_t = |t_on| - |t_off|
    and delta_phi_deg = arg(t_on) - arg(t_off) wrapped into (-180, 180].
    """

    spec: SweepSpec
    rabi_c: np.ndarray
    t_on: np.ndarray
    t_off: np.ndarray | None
    delta_t: np.ndarray | None
    delta_phi_deg: np.ndarray | None

    @property
    def freqs_hz(self):
        return self.spec.freqs_hz

    @property
    def powers_dbm(self):
        return self.spec.powers_dbm

    def write_csv(self, fh) -> None:
        """Rows in deterministic row-major order (power outer, frequency inner)."""
        fh.write("freq_hz,power_dbm,ton_re,ton_im,toff_re,toff_im,dt,dphi_deg\n")
        off = self.t_off if self.t_off is not None else self.t_on
        dt = self.delta_t if self.delta_t is not None else np.zeros_like(self.t_on, dtype=float)
        dphi = (
            self.delta_phi_deg
            if self.delta_phi_deg is not None
            else np.zeros_like(self.t_on, dtype=float)
        )
        for i, p in enumerate(self.powers_dbm):
            for j, f in enumerate(self.freqs_hz):
                vals = (
                    f, p,
                    self.t_on[i, j].real, self.t_on[i, j].imag,
                    off[i, j].real, off[i, j].imag,
                    dt[i, j], dphi[i, j],
                )
                fh.write(",".join(_FMT % v for v in vals) + "\n")

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def sweep_map(spec: SweepSpec, parallelism: int = 1) -> SweepResult:
    """Steady-state transmission over the full grid, control on and off."""
    atom = spec.atom
    rates = resolved_rates(atom)
    p_probe = spec.probe_power_watts()
    omega_c = spec.omega_c()
    dc = omega_c - atom.omega12

    n_p = spec.powers_dbm.size
    n_f = spec.freqs_hz.size
    omegas_p = TWO_PI * spec.freqs_hz
    rabis_p = np.array(
        [calibration.rabi_from_power(p_probe, w, atom.gamma_rel_10, "probe") for w in omegas_p]
    )
    rabi_c = np.array(
        [
            calibration.rabi_from_power(
                calibration.dbm_to_watts(p), omega_c, atom.gamma_rel_10, "control"
            )
            for p in spec.powers_dbm
        ]
    )

    branches = 2 if spec.pair_control_off else 1
    jobs = np.empty((n_p * n_f * branches, 4), dtype=np.float64)
    k = 0
    for i in range(n_p):
        for j in range(n_f):
            dp = omegas_p[j] - atom.omega01
            jobs[k] = (dp, dc, rabis_p[j], rabi_c[i])
            k += 1
            if spec.pair_control_off:
                jobs[k] = (dp, dc, rabis_p[j], 0.0)
                k += 1

    rho10, resid = _solve_jobs(rates, jobs, parallelism)

    def coords(i):
        point = i // branches
        branch = "on" if (i % branches == 0 or not spec.pair_control_off) else "off"
        pi, fj = divmod(point, n_f)
        return (
            f"power={spec.powers_dbm[pi]:.6g} dBm, freq={spec.freqs_hz[fj]:.6g} Hz, control {branch}"
        )

    _check_residuals(resid, spec.resid_tol, coords)

    pref = -1j * atom.gamma_rel_10
    if spec.pair_control_off:
        rho10 = rho10.reshape(n_p, n_f, 2)
        t_on = 1.0 + pref * rho10[:, :, 0] / rabis_p[None, :]
        t_off = 1.0 + pref * rho10[:, :, 1] / rabis_p[None, :]
        delta_t = np.abs(t_on) - np.abs(t_off)
        delta_phi = _wrap_deg(_phases_deg(t_on) - _phases_deg(t_off))
        return SweepResult(spec, rabi_c, t_on, t_off, delta_t, delta_phi)
    t_on = 1.0 + pref * rho10.reshape(n_p, n_f) / rabis_p[None, :]
    return SweepResult(spec, rabi_c, t_on, None, None, None)


def _refine_minimum(x, y, i):
    """Parabola through three points around index i; returns abscissa of the vertex."""
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom <= 0.0:
        return x[i]
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    return x[i] + shift * (x[i] - x[i - 1])


def autler_townes_splitting(result: SweepResult, power_row: int) -> float:
    """Separation (Hz) of the two |t_on| minima in one power row.

    Raises NoDoublet unless the row has exactly two interior local minima.
    """
    mag = np.abs(result.t_on[power_row])
    f = result.freqs_hz
    minima = [
        i
        for i in range(1, mag.size - 1)
        if mag[i] < mag[i - 1] and mag[i] < mag[i + 1]
    ]
    if len(minima) != 2:
        raise NoDoublet(
            f"found {len(minima)} local minima in row {power_row}; control too weak "
            "or grid too coarse to resolve a doublet"
        )
    lo = _refine_minimum(f, mag, minima[0])
    hi = _refine_minimum(f, mag, minima[1])
    return float(abs(hi - lo))


@dataclass(frozen=True)
class KerrResult:
    """Zero-intercept phase-shift slope against control photon number."""

    photons: np.ndarray
    delta_phi_deg: np.ndarray
    slope_deg_per_photon: float
    probe_photons: float

    def write_csv(self, fh) -> None:
        fh.write("n_c,dphi_deg\n")
        for n, d in zip(self.photons, self.delta_phi_deg):
            fh.write(_FMT % n + "," + _FMT % d + "\n")


def kerr_slope(atom: AtomParams, delta_p_hz: float, photon_grid,
               probe_photons: float = 1e-3, omega_c_hz: float | None = None,
               resid_tol: float = STEADY_RESIDUAL_TOL, parallelism: int = 1) -> KerrResult:
    """Control-induced probe phase shift per control photon.

    Evaluates the paired on/off steady state at fixed probe detuning over
    photon_grid and fits delta_phi = k * <N_c> with the intercept pinned at
    zero (the response law has no offset).
    """
    photons = np.asarray(photon_grid, dtype=np.float64)
    if photons.size == 0 or np.any(photons < 0.0):
        raise ValueError("photon_grid must be non-empty and non-negative")
    omega_c = atom.omega12 if omega_c_hz is None else TWO_PI * omega_c_hz
    omega_p = atom.omega01 + TWO_PI * delta_p_hz
    rabi_p = calibration.probe_rabi_from_photons(probe_photons, omega_p, atom.gamma_rel_10)
    dp = TWO_PI * delta_p_hz
    dc = omega_c - atom.omega12

    jobs = np.empty((photons.size + 1, 4), dtype=np.float64)
    for i, n in enumerate(photons):
        rabi_c = calibration.control_rabi_from_photons(
            n, omega_c, atom.gamma_rel_10, atom.gamma_rel_21
        )
        jobs[i] = (dp, dc, rabi_p, rabi_c)
    jobs[-1] = (dp, dc, rabi_p, 0.0)

    rho10, resid = _solve_jobs(resolved_rates(atom), jobs, parallelism)
    _check_residuals(
        resid, resid_tol,
        lambda i: f"<N_c>={photons[i]:.6g}" if i < photons.size else "control off",
    )
    t = 1.0 - 1j * (atom.gamma_rel_10 / rabi_p) * rho10
    dphi = _wrap_deg(_phases_deg(t[:-1]) - _phases_deg(t[-1]))
    denom = float(np.sum(photons * photons))
    slope = float(np.sum(photons * dphi) / denom) if denom > 0.0 else 0.0
    return KerrResult(photons, dphi, slope, probe_photons)


@dataclass(frozen=True)
class SaturationResult:
    """Phase response vs probe power at fixed control photon number."""

    powers_dbm: np.ndarray
    delta_phi_deg: np.ndarray
    delta_q: np.ndarray  # Im(rho10_on - rho10_off) per point
    exponent_phi_vs_power: float
    exponent_q_vs_vin: float
    tail_points: int

    def write_csv(self, fh) -> None:
        fh.write("p_p_dbm,dphi_deg,delta_q\n")
        for p, d, q in zip(self.powers_dbm, self.delta_phi_deg, self.delta_q):
            fh.write(",".join(_FMT % v for v in (p, d, q)) + "\n")


def saturation_scan(atom: AtomParams, delta_p_hz: float, n_c: float, probe_powers_dbm,
                    omega_c_hz: float | None = None, tail_decades: float = 1.0,
                    resid_tol: float = STEADY_RESIDUAL_TOL,
                    parallelism: int = 1) -> SaturationResult:
    """Probe-power dependence of the control-induced phase shift.

    The asymptotic exponents are fitted by least squares over the top
    ``tail_decades`` decades of the power grid: d log|dphi| / d log P and
    d log|delta_q| / d log V_in with V_in proportional to sqrt(P).
    """
    powers = np.asarray(probe_powers_dbm, dtype=np.float64)
    if powers.size < 2:
        raise ValueError("need at least two probe powers")
    omega_c = atom.omega12 if omega_c_hz is None else TWO_PI * omega_c_hz
    omega_p = atom.omega01 + TWO_PI * delta_p_hz
    dp = TWO_PI * delta_p_hz
    dc = omega_c - atom.omega12
    rabi_c = calibration.control_rabi_from_photons(
        n_c, omega_c, atom.gamma_rel_10, atom.gamma_rel_21
    )

    jobs = np.empty((powers.size * 2, 4), dtype=np.float64)
    for i, p in enumerate(powers):
        rabi_p = calibration.rabi_from_power(
            calibration.dbm_to_watts(p), omega_p, atom.gamma_rel_10, "probe"
        )
        jobs[2 * i] = (dp, dc, rabi_p, rabi_c)
        jobs[2 * i + 1] = (dp, dc, rabi_p, 0.0)

    rho10, resid = _solve_jobs(resolved_rates(atom), jobs, parallelism)
    _check_residuals(
        resid, resid_tol,
        lambda i: f"P_p={powers[i // 2]:.6g} dBm, control {'on' if i % 2 == 0 else 'off'}",
    )
    rho10 = rho10.reshape(powers.size, 2)
    t = 1.0 - 1j * atom.gamma_rel_10 * rho10 / jobs[::2, 2][:, None]
    dphi = _wrap_deg(_phases_deg(t[:, 0]) - _phases_deg(t[:, 1]))
    dq = np.imag(rho10[:, 0] - rho10[:, 1])

    tail = powers >= powers.max() - 10.0 * tail_decades
    n_tail = int(tail.sum())
    if n_tail < 2:
        raise ValueError("tail window contains fewer than two points")
    log_p = powers[tail] / 10.0  # log10 of power up to an additive constant
    a = np.vstack([log_p, np.ones(n_tail)]).T
    exp_phi, *_ = np.linalg.lstsq(a, np.log10(np.abs(dphi[tail])), rcond=None)
    log_vin = powers[tail] / 20.0  # V_in ~ sqrt(P)
    a2 = np.vstack([log_vin, np.ones(n_tail)]).T
    exp_q, *_ = np.linalg.lstsq(a2, np.log10(np.abs(dq[tail])), rcond=None)
    return SaturationResult(powers, dphi, dq, float(exp_phi[0]), float(exp_q[0]), n_tail)


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular control pulse over a continuous probe.

    Times are seconds; the output time grid must start at 0 where the atom
    sits in the control-off steady state.
    """

    atom: AtomParams
    delta_p_hz: float
    n_c_on: float
    t_start: float
    duration: float
    t_grid: np.ndarray
    rise_time: float = 0.0
    probe_photons: float = 1e-3
    omega_c_hz: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-12

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("duration must be > 0")
        if self.rise_time < 0.0:
            raise ValueError("rise_time must be >= 0")
        t = np.asarray(self.t_grid, dtype=np.float64)
        if t.size < 2 or np.any(np.diff(t) <= 0.0) or t[0] < 0.0:
            raise ValueError("t_grid must be increasing with t_grid[0] >= 0")
        object.__setattr__(self, "t_grid", t)

    @classmethod
    def with_default_grid(cls, atom, delta_p_hz, n_c_on, t_start, duration,
                          points=1200, margin=0.5, **kwargs) -> "PulseSpec":
        t_end = t_start + duration * (1.0 + margin)
        return cls(
            atom=atom, delta_p_hz=delta_p_hz, n_c_on=n_c_on, t_start=t_start,
            duration=duration, t_grid=np.linspace(0.0, t_end, points), **kwargs,
        )


@dataclass(frozen=True)
class PulseResult:
    """Time-resolved probe phase and the extracted mid-pulse plateau."""

    times: np.ndarray
    phase_deg: np.ndarray
    plateau_delta_phi_deg: float
    states: np.ndarray = field(repr=False)

    def write_csv(self, fh) -> None:
        fh.write("t_s,phase_deg\n")
        for t, p in zip(self.times, self.phase_deg):
            fh.write(_FMT % t + "," + _FMT % p + "\n")


def pulse_response(spec: PulseSpec) -> PulseResult:
    """Probe phase under a control pulse; plateau relative to pre-pulse phase.

    The plateau averages the central 50% of the pulse; the reference phase
    averages the pre-pulse samples (both are flat for a long pulse, so the
    averaging only suppresses integrator ripple).
    """
    atom = spec.atom
    omega_c = atom.omega12 if spec.omega_c_hz is None else TWO_PI * spec.omega_c_hz
    omega_p = atom.omega01 + TWO_PI * spec.delta_p_hz
    rabi_p = calibration.probe_rabi_from_photons(spec.probe_photons, omega_p, atom.gamma_rel_10)
    rabi_on = calibration.control_rabi_from_photons(
        spec.n_c_on, omega_c, atom.gamma_rel_10, atom.gamma_rel_21
    )
    drive_off = DriveParams(omega_p=omega_p, omega_c=omega_c, rabi_p=rabi_p, rabi_c=0.0)
    lop = build_liouvillian(atom, drive_off)
    rho0 = steady_state(lop)
    envelope = rectangular_pulse(spec.t_start, spec.duration, rabi_on, spec.rise_time)
    coupling = control_coupling(atom, drive_off)
    states = time_evolve(
        lop, rho0, spec.t_grid, control_envelope=envelope, control_coupling=coupling,
        rtol=spec.rtol, atol=spec.atol,
    )
    phases = np.array(
        [transmission(atom, drive_off, DensityMatrix(s)).phase_deg for s in states]
    )
    pre = spec.t_grid < spec.t_start
    mid = (spec.t_grid >= spec.t_start + 0.25 * spec.duration) & (
        spec.t_grid <= spec.t_start + 0.75 * spec.duration
    )
    if not pre.any() or not mid.any():
        raise ValueError("t_grid must sample both the pre-pulse and mid-pulse windows")
    plateau = float(
        wrap_phase_deg(np.mean(phases[mid]) - np.mean(phases[pre]))
    )
    return PulseResult(spec.t_grid, phases, plateau, states)

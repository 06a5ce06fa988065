"""Least-squares estimation of atom parameters from complex transmission data.

The objective is sum_i w_i |t_meas,i - t_model,i|^2 with real and imaginary
residuals stacked, which weights amplitude and phase information jointly.
Minimization is a damped (Levenberg-Marquardt style) iteration: forward
finite-difference Jacobian in initial-guess-scaled coordinates, Marquardt
diagonal damping, bound handling by clamping with reflection, monotone
objective over accepted steps.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import calibration
from ._kernels import backend
from .constants import TWO_PI
from .core import STEADY_RESIDUAL_TOL, resolved_rates
from .errors import DegenerateJacobian, KerrlineError, SingularSystem
from .params import AtomParams

ATOM_PARAM_NAMES = (
    "gamma_rel_10",
    "gamma_rel_21",
    "gamma_coh_10",
    "gamma_coh_21",
    "gamma_coh_20",
    "omega01",
    "omega12",
)
NUISANCE_PARAM_NAMES = ("amp_scale", "phase_offset")
FREE_PARAM_NAMES = ATOM_PARAM_NAMES + NUISANCE_PARAM_NAMES


@dataclass(frozen=True)
class Dataset:
    """Complex transmission records on a (probe frequency, control power) grid."""

    freq_hz: np.ndarray
    power_dbm: np.ndarray
    t: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=np.float64)
        p = np.asarray(self.power_dbm, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.complex128)
        w = None if self.weight is None else np.asarray(self.weight, dtype=np.float64)
        n = f.size
        if not (p.size == n and t.size == n and (w is None or w.size == n)):
            raise ValueError("all record columns must have equal length")
        cols = [f, p, t.real, t.imag] + ([] if w is None else [w])
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ValueError("records must be finite")
        if w is not None and np.any(w < 0.0):
            raise ValueError("weights must be >= 0")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "power_dbm", p)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "weight", w)

    def __len__(self):
        return self.freq_hz.size

    @classmethod
    def read_csv(cls, fh) -> "Dataset":
        """CSV with header freq_hz,power_dbm,t_re,t_im[,weight]."""
        reader = csv.DictReader(fh)
        required = {"freq_hz", "power_dbm", "t_re", "t_im"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"dataset CSV needs columns {sorted(required)}, got {reader.fieldnames}"
            )
        freq, power, tre, tim, wt = [], [], [], [], []
        has_weight = "weight" in reader.fieldnames
        for row in reader:
            freq.append(float(row["freq_hz"]))
            power.append(float(row["power_dbm"]))
            tre.append(float(row["t_re"]))
            tim.append(float(row["t_im"]))
            if has_weight:
                wt.append(float(row["weight"]) if row["weight"] not in (None, "") else 1.0)
        t = np.array(tre) + 1j * np.array(tim)
        return cls(np.array(freq), np.array(power), t, np.array(wt) if has_weight else None)

    def write_csv(self, fh) -> None:
        fh.write("freq_hz,power_dbm,t_re,t_im,weight\n")
        w = self.weight if self.weight is not None else np.ones(len(self))
        for f, p, t, wi in zip(self.freq_hz, self.power_dbm, self.t, w):
            fh.write(
                ",".join("%.12g" % v for v in (f, p, t.real, t.imag, wi)) + "\n"
            )


@dataclass(frozen=True)
class FitSpec:
    """What to fit and from where to start.

    ``base`` supplies every parameter's initial value (and the fixed values
    of parameters not in ``free``).  Bounds are in the parameter's natural
    units (rad/s for rates and frequencies, dimensionless amp_scale, rad
    phase_offset); missing bounds default to (0, inf) for atom parameters,
    (1e-6, inf) for amp_scale, and (-pi, pi) for phase_offset.
    """

    base: AtomParams
    free: tuple
    probe_power_dbm: float = -140.0
    omega_c_hz: float | None = None
    amp_scale: float = 1.0
    phase_offset: float = 0.0
    bounds: dict = field(default_factory=dict)
    max_iterations: int = 200
    ftol: float = 1e-12
    xtol: float = 1e-12
    gtol: float = 1e-12
    restarts: int = 0
    restart_window: float = 0.3
    seed: int = 0
    residual_mode: str = "reim"
    resid_tol: float = STEADY_RESIDUAL_TOL

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        for name in self.free:
            if name not in FREE_PARAM_NAMES:
                raise ValueError(f"unknown free parameter {name!r}")
        if len(set(self.free)) != len(self.free):
            raise ValueError("duplicate free parameter")
        if self.residual_mode not in ("reim", "ampphase"):
            raise ValueError(f"residual_mode must be 'reim' or 'ampphase', got {self.residual_mode!r}")
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"bounds for {name!r} must satisfy lo < hi")
            x0 = self.initial_value(name)
            if not (lo <= x0 <= hi):
                raise ValueError(f"initial {name!r}={x0!r} outside bounds ({lo!r}, {hi!r})")

    def initial_value(self, name: str) -> float:
        if name == "amp_scale":
            return self.amp_scale
        if name == "phase_offset":
            return self.phase_offset
        if name == "gamma_coh_20":
            return self.base.gamma20
        return getattr(self.base, name)

    def bound(self, name: str):
        if name in self.bounds:
            return self.bounds[name]
        if name == "amp_scale":
            return (1e-6, math.inf)
        if name == "phase_offset":
            return (-math.pi, math.pi)
        return (0.0, math.inf)


@dataclass(frozen=True)
class FitReport:
    """Fit outcome; params/stderr in natural units keyed by parameter name."""

    params: dict
    stderr: dict
    residual_norm: float
    status: str
    iterations: int
    n_evaluations: int
    objective_history: tuple

    def to_json(self) -> str:
        payload = {
            "params": self.params,
            "stderr": self.stderr,
            "residual_norm": self.residual_norm,
            "status": self.status,
            "iterations": self.iterations,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _atom_with(spec: FitSpec, values: dict) -> AtomParams:
    changes = {}
    for name in ATOM_PARAM_NAMES:
        if name in values:
            changes[name] = values[name]
    if "gamma_coh_20" not in changes and spec.base.gamma_coh_20 is None:
        changes["gamma_coh_20"] = None  # keep the derived default live during fitting
    return spec.base.with_(**changes)


def model_predict(atom: AtomParams, freq_hz, power_dbm, probe_power_dbm: float,
                  omega_c_hz: float | None = None, amp_scale: float = 1.0,
                  phase_offset: float = 0.0,
                  resid_tol: float = STEADY_RESIDUAL_TOL) -> np.ndarray:
    """Model transmission for records on the (freq, control power) plane.

    Returns amp_scale * exp(1j*phase_offset) * t(atom) elementwise; the two
    nuisance factors absorb unknown line calibration when fitting real data.
    """
    freq = np.atleast_1d(np.asarray(freq_hz, dtype=np.float64))
    power = np.atleast_1d(np.asarray(power_dbm, dtype=np.float64))
    if freq.shape != power.shape:
        raise ValueError("freq_hz and power_dbm must have matching shapes")
    omega_c = atom.omega12 if omega_c_hz is None else TWO_PI * omega_c_hz
    dc = omega_c - atom.omega12
    p_probe = calibration.dbm_to_watts(probe_power_dbm)

    jobs = np.empty((freq.size, 4), dtype=np.float64)
    omega_p = TWO_PI * freq
    for i in range(freq.size):
        rabi_p = calibration.rabi_from_power(p_probe, omega_p[i], atom.gamma_rel_10, "probe")
        rabi_c = calibration.rabi_from_power(
            calibration.dbm_to_watts(power[i]), omega_c, atom.gamma_rel_10, "control"
        )
        jobs[i] = (omega_p[i] - atom.omega01, dc, rabi_p, rabi_c)
    rho10, resid = backend.steady_rho10_batch(resolved_rates(atom), jobs)
    bad = np.flatnonzero(~(resid < resid_tol))
    if bad.size:
        i = int(bad[0])
        raise SingularSystem(
            f"model solve failed at freq={freq[i]:.6g} Hz, power={power[i]:.6g} dBm"
        )
    t = 1.0 - 1j * atom.gamma_rel_10 * rho10 / jobs[:, 2]
    return amp_scale * np.exp(1j * phase_offset) * t


def synthesize(atom: AtomParams, freq_hz, power_dbm, probe_power_dbm: float,
               sigma: float, seed: int, averages: int = 1,
               omega_c_hz: float | None = None, amp_scale: float = 1.0,
               phase_offset: float = 0.0) -> Dataset:
    """Model data plus reproducible complex Gaussian noise.

    The noise is (sigma/sqrt(averages)) times a standard complex normal
    (unit mean square magnitude), mimicking detection noise reduced by
    averaging repeated records.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    if averages < 1:
        raise ValueError("averages must be >= 1")
    freq = np.atleast_1d(np.asarray(freq_hz, dtype=np.float64))
    power = np.atleast_1d(np.asarray(power_dbm, dtype=np.float64))
    t = model_predict(
        atom, freq, power, probe_power_dbm, omega_c_hz, amp_scale, phase_offset
    )
    rng = np.random.default_rng(seed)
    scale = sigma / math.sqrt(averages) / math.sqrt(2.0)
    noise = scale * (rng.standard_normal(freq.size) + 1j * rng.standard_normal(freq.size))
    return Dataset(freq, power, t + noise, None)


def _reflect_into(x, lo, hi):
    if x < lo:
        x = lo + (lo - x)
    elif x > hi:
        x = hi - (x - hi)
    return min(max(x, lo), hi)


class _Objective:
    """Residual vector in initial-guess-scaled coordinates."""

    def __init__(self, dataset: Dataset, spec: FitSpec):
        self.dataset = dataset
        self.spec = spec
        self.names = spec.free
        self.x0 = np.array([spec.initial_value(n) for n in self.names], dtype=np.float64)
        scale = np.where(np.abs(self.x0) > 0.0, np.abs(self.x0), 1.0)
        self.scale = scale
        self.lo = np.empty(len(self.names))
        self.hi = np.empty(len(self.names))
        for k, n in enumerate(self.names):
            lo, hi = spec.bound(n)
            self.lo[k] = lo / scale[k]
            self.hi[k] = hi / scale[k]
        w = dataset.weight if dataset.weight is not None else np.ones(len(dataset))
        self.sqrt_w = np.sqrt(w)
        self.n_eval = 0

    def start(self):
        return self.x0 / self.scale

    def clip(self, x):
        return np.array(
            [_reflect_into(x[k], self.lo[k], self.hi[k]) for k in range(x.size)]
        )

    def values_dict(self, x):
        return {n: float(x[k] * self.scale[k]) for k, n in enumerate(self.names)}

    def residuals(self, x):
        self.n_eval += 1
        vals = self.values_dict(x)
        spec = self.spec
        try:
            atom = _atom_with(spec, vals)
            t_model = model_predict(
                atom,
                self.dataset.freq_hz,
                self.dataset.power_dbm,
                spec.probe_power_dbm,
                spec.omega_c_hz,
                vals.get("amp_scale", spec.amp_scale),
                vals.get("phase_offset", spec.phase_offset),
                spec.resid_tol,
            )
        except KerrlineError:
            return None
        if spec.residual_mode == "reim":
            d = t_model - self.dataset.t
            return np.concatenate([self.sqrt_w * d.real, self.sqrt_w * d.imag])
        d_amp = np.abs(t_model) - np.abs(self.dataset.t)
        d_phase = np.angle(t_model / self.dataset.t)  # wrapped into (-pi, pi]
        return np.concatenate([self.sqrt_w * d_amp, self.sqrt_w * d_phase])


def _lm_minimize(obj: _Objective, spec: FitSpec, x_start):
    x = obj.clip(np.array(x_start, dtype=np.float64))
    r = obj.residuals(x)
    if r is None:
        raise DegenerateJacobian("model is not evaluable at the initial guess")
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    n_free = x.size
    status = "max_iterations"
    iterations = 0
    jac = None

    for it in range(1, spec.max_iterations + 1):
        iterations = it
        # forward-difference Jacobian at the current point
        jac = np.empty((r.size, n_free))
        for k in range(n_free):
            h = max(1e-6 * abs(x[k]), 1e-12)
            xk = x.copy()
            xk[k] = _reflect_into(xk[k] + h, obj.lo[k], obj.hi[k])
            if xk[k] == x[k]:  # squeezed against both bounds
                xk[k] = x[k] - h
            rk = obj.residuals(xk)
            if rk is None:
                raise DegenerateJacobian(
                    f"model not evaluable while differencing {obj.names[k]!r}"
                )
            jac[:, k] = (rk - r) / (xk[k] - x[k])
        svals = np.linalg.svd(jac, compute_uv=False)
        if it == 1 and (svals[0] == 0.0 or svals[-1] < 1e-12 * svals[0]):
            raise DegenerateJacobian(
                "rank-deficient Jacobian: free parameters are not identifiable "
                f"(singular values {svals[0]:.3e} .. {svals[-1]:.3e})"
            )
        g = jac.T @ r
        if np.max(np.abs(g)) <= spec.gtol * max(cost, 1.0):
            status = "converged"
            break
        jtj = jac.T @ jac
        diag = np.maximum(np.diag(jtj), 1e-32)

        accepted = False
        for _ in range(30):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_trial = obj.clip(x + step)
            r_trial = obj.residuals(x_trial)
            if r_trial is not None:
                cost_trial = float(r_trial @ r_trial)
                if cost_trial < cost:
                    dx = np.max(np.abs(x_trial - x))
                    drop = cost - cost_trial
                    x, r, cost = x_trial, r_trial, cost_trial
                    history.append(cost)
                    lam = max(lam / 3.0, 1e-12)
                    accepted = True
                    if drop <= spec.ftol * max(cost, 1e-300) or dx <= spec.xtol:
                        status = "converged"
                    break
            lam *= 10.0
            if lam > 1e12:
                break
        if not accepted:
            # no damping level improves the objective: local optimum
            status = "converged"
            break
        if status == "converged":
            break
    return x, r, cost, status, iterations, history, jac


def _stderr_from_jacobian(jac, r, scale, names):
    m, n = jac.shape
    if m <= n:
        return {name: math.inf for name in names}
    sigma2 = float(r @ r) / (m - n)
    try:
        cov = np.linalg.inv(jac.T @ jac) * sigma2
    except np.linalg.LinAlgError:
        return {name: math.inf for name in names}
    err = np.sqrt(np.maximum(np.diag(cov), 0.0)) * scale
    return {name: float(err[k]) for k, name in enumerate(names)}


def fit(dataset: Dataset, spec: FitSpec) -> FitReport:
    """Estimate the free parameters of spec from the dataset.

    Raises DegenerateJacobian when the problem is underdetermined (fewer
    than 3 records per free parameter, or a rank-deficient Jacobian at the
    start).  An iteration-limit stop is reported as status
    'non_convergence' with the best parameters found so far.
    """
    if not spec.free:
        raise ValueError("spec.free must name at least one parameter")
    if len(dataset) < 3 * len(spec.free):
        raise DegenerateJacobian(
            f"{len(dataset)} records cannot constrain {len(spec.free)} parameters "
            "(need at least 3 per parameter)"
        )
    obj = _Objective(dataset, spec)

    starts = [obj.start()]
    if spec.restarts > 0:
        rng = np.random.default_rng(spec.seed)
        n = len(spec.free)
        # Latin hypercube in the +-restart_window box around the start
        u = (rng.permuted(np.tile(np.arange(spec.restarts), (n, 1)), axis=1).T
             + rng.random((spec.restarts, n))) / spec.restarts
        for row in u:
            starts.append(obj.clip(obj.start() * (1.0 + spec.restart_window * (2.0 * row - 1.0))))

    best = None
    for x_start in starts:
        x, r, cost, status, iterations, history, jac = _lm_minimize(obj, spec, x_start)
        if best is None or cost < best[2]:
            best = (x, r, cost, status, iterations, history, jac)

    x, r, cost, status, iterations, history, jac = best
    if status == "max_iterations":
        status = "non_convergence"
    stderr = _stderr_from_jacobian(jac, r, obj.scale, obj.names)
    return FitReport(
        params=obj.values_dict(x),
        stderr=stderr,
        residual_norm=float(np.linalg.norm(r)),
        status=status,
        iterations=iterations,
        n_evaluations=obj.n_eval,
        objective_history=tuple(history),
    )

"""JSON configuration: schema, validation and conversion to model objects.

External units carry explicit suffixes (``*_ghz``, ``*_mhz``, ``*_dbm``,
``*_ns``, ``*_ff``, ``*_ohm``); everything is converted to SI/angular
exactly once, here.  Unknown keys are rejected with the offending path in
the message, missing optional keys take the documented defaults.
"""

from __future__ import annotations

import json

import numpy as np

from .constants import TWO_PI
from .errors import ConfigError
from .experiments import PulseSpec, SweepSpec
from .fitting import FREE_PARAM_NAMES, FitSpec
from .params import AtomParams

SCHEMA_VERSION = 1


class _Field:
    def __init__(self, types, default=None, required=False, allow_none=False, check=None):
        self.types = types
        self.default = default
        self.required = required
        self.allow_none = allow_none
        self.check = check


def _num(required=False, default=None, allow_none=False, check=None):
    return _Field((int, float), default, required, allow_none, check)


def _positive(path, v):
    if v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v!r}")


def _non_negative(path, v):
    if v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {v!r}")


def _int_ge2(path, v):
    if not isinstance(v, int) or v < 2:
        raise ConfigError(f"{path}: must be an integer >= 2, got {v!r}")


SCHEMA = {
    "schema_version": _Field((int,), default=SCHEMA_VERSION),
    "atom": {
        "omega01_ghz": _num(required=True, check=_positive),
        "omega12_ghz": _num(required=True, check=_positive),
        "gamma_rel_10_mhz": _num(required=True, check=_positive),
        "gamma_rel_21_mhz": _num(allow_none=True, check=_non_negative),  # default: 2x gamma_rel_10
        "gamma_coh_10_mhz": _num(required=True, check=_non_negative),
        "gamma_coh_21_mhz": _num(required=True, check=_non_negative),
        "gamma_coh_20_mhz": _num(allow_none=True, check=_non_negative),
        "dephasing_mode": _Field((str,), default="direct"),
        "cc_ff": _num(allow_none=True, check=_non_negative),
        "c_sigma_ff": _num(allow_none=True, check=_positive),
        "z0_ohm": _num(default=50.0, check=_positive),
    },
    "drive": {
        "probe_power_dbm": _num(allow_none=True),
        "probe_photons": _num(allow_none=True, check=_non_negative),
        "probe_detuning_mhz": _num(default=0.0),
        "probe_freq_ghz": _num(allow_none=True, check=_positive),
        "control_power_dbm": _num(allow_none=True),
        "control_photons": _num(allow_none=True, check=_non_negative),
        "control_freq_ghz": _num(allow_none=True, check=_positive),
    },
    "sweep": {
        "freq_span_mhz": _num(default=300.0, check=_positive),
        "freq_points": _Field((int,), default=201, check=_int_ge2),
        "freq_start_ghz": _num(allow_none=True, check=_positive),
        "freq_stop_ghz": _num(allow_none=True, check=_positive),
        "power_start_dbm": _num(default=-140.0),
        "power_stop_dbm": _num(default=-108.0),
        "power_points": _Field((int,), default=17, check=_int_ge2),
    },
    "kerr": {
        "detuning_mhz": _num(default=20.0),
        "photon_min": _num(default=0.02, check=_non_negative),
        "photon_max": _num(default=0.5, check=_positive),
        "photon_points": _Field((int,), default=13, check=_int_ge2),
    },
    "saturation": {
        "detuning_mhz": _num(default=20.0),
        "control_photons": _num(default=0.3, check=_non_negative),
        "power_start_dbm": _num(default=-140.0),
        "power_stop_dbm": _num(default=-80.0),
        "power_points": _Field((int,), default=31, check=_int_ge2),
        "tail_decades": _num(default=1.0, check=_positive),
    },
    "pulse": {
        "detuning_mhz": _num(default=20.0),
        "control_photons": _num(default=0.3, check=_non_negative),
        "start_ns": _num(default=100.0, check=_non_negative),
        "duration_ns": _num(default=600.0, check=_positive),
        "rise_ns": _num(default=0.0, check=_non_negative),
        "t_max_ns": _num(allow_none=True, check=_positive),
        "points": _Field((int,), default=1200, check=_int_ge2),
    },
    "fit": {
        "free": _Field((list,), default=["gamma_rel_10", "gamma_coh_10", "gamma_coh_21"]),
        "probe_power_dbm": _num(allow_none=True),
        "max_iterations": _Field((int,), default=200),
        "restarts": _Field((int,), default=0),
        "restart_window": _num(default=0.3, check=_positive),
        "seed": _Field((int,), default=0),
        "bounds": _Field((dict,), default={}),
    },
    "solver": {
        "steady_residual_tol": _num(default=1e-9, check=_positive),
        "rtol": _num(default=1e-9, check=_positive),
        "atol": _num(default=1e-12, check=_positive),
    },
    "parallelism": _Field((int,), default=1),
}


def _validate_section(schema, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown key {(path + '.' if path else '') + key!r}")
    for key, spec in schema.items():
        child_path = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _validate_section(spec, data.get(key, {}), child_path)
            continue
        if key not in data:
            if spec.required:
                raise ConfigError(f"missing required key {child_path!r}")
            out[key] = spec.default
            continue
        value = data[key]
        if value is None:
            if spec.allow_none:
                out[key] = None
                continue
            raise ConfigError(f"{child_path}: null not allowed")
        if isinstance(value, bool) or not isinstance(value, spec.types):
            want = "/".join(t.__name__ for t in spec.types)
            raise ConfigError(
                f"{child_path}: expected {want}, got {type(value).__name__} ({value!r})"
            )
        if spec.check is not None:
            spec.check(child_path, value)
        out[key] = value
    return out


def validate_config(data: dict) -> dict:
    """Validate a raw config dict; returns a fully-defaulted copy."""
    cfg = _validate_section(SCHEMA, data, "")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: expected {SCHEMA_VERSION}, got {cfg['schema_version']!r}"
        )
    atom = cfg["atom"]
    if atom["dephasing_mode"] not in ("direct", "lindblad"):
        raise ConfigError(
            f"atom.dephasing_mode: must be 'direct' or 'lindblad', got {atom['dephasing_mode']!r}"
        )
    if atom["omega01_ghz"] <= atom["omega12_ghz"]:
        raise ConfigError("atom: need omega01_ghz > omega12_ghz (positive anharmonicity)")
    drive = cfg["drive"]
    if drive["probe_power_dbm"] is not None and drive["probe_photons"] is not None:
        raise ConfigError("drive: set at most one of probe_power_dbm / probe_photons")
    if drive["control_power_dbm"] is not None and drive["control_photons"] is not None:
        raise ConfigError("drive: set at most one of control_power_dbm / control_photons")
    if drive["probe_power_dbm"] is None and drive["probe_photons"] is None:
        drive["probe_photons"] = 1e-3
    sweep = cfg["sweep"]
    if (sweep["freq_start_ghz"] is None) != (sweep["freq_stop_ghz"] is None):
        raise ConfigError("sweep: freq_start_ghz and freq_stop_ghz go together")
    fit = cfg["fit"]
    for name in fit["free"]:
        if name not in FREE_PARAM_NAMES:
            raise ConfigError(f"fit.free: unknown parameter {name!r}")
    for name in fit["bounds"]:
        if name not in FREE_PARAM_NAMES:
            raise ConfigError(f"fit.bounds: unknown parameter {name!r}")
    if cfg["parallelism"] < 1:
        raise ConfigError(f"parallelism: must be >= 1, got {cfg['parallelism']!r}")
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return validate_config(data)


def atom_from_config(cfg: dict) -> AtomParams:
    a = cfg["atom"]
    gamma_rel_21 = a["gamma_rel_21_mhz"]
    if gamma_rel_21 is None:
        gamma_rel_21 = 2.0 * a["gamma_rel_10_mhz"]  # squared dipole ratio of the two transitions
    return AtomParams.from_hz(
        omega01=a["omega01_ghz"] * 1e9,
        omega12=a["omega12_ghz"] * 1e9,
        gamma_rel_10=a["gamma_rel_10_mhz"] * 1e6,
        gamma_rel_21=gamma_rel_21 * 1e6,
        gamma_coh_10=a["gamma_coh_10_mhz"] * 1e6,
        gamma_coh_21=a["gamma_coh_21_mhz"] * 1e6,
        gamma_coh_20=None if a["gamma_coh_20_mhz"] is None else a["gamma_coh_20_mhz"] * 1e6,
        cc=None if a["cc_ff"] is None else a["cc_ff"] * 1e-15,
        c_sigma=None if a["c_sigma_ff"] is None else a["c_sigma_ff"] * 1e-15,
        z0=a["z0_ohm"],
        dephasing_mode=a["dephasing_mode"],
    )


def probe_freq_hz(cfg: dict, atom: AtomParams) -> float:
    d = cfg["drive"]
    if d["probe_freq_ghz"] is not None:
        return d["probe_freq_ghz"] * 1e9
    return atom.omega01 / TWO_PI + d["probe_detuning_mhz"] * 1e6


def probe_photons_from_drive(cfg: dict, atom: AtomParams, omega_p: float) -> float:
    """Probe strength in photons per interaction time at the given carrier."""
    from . import calibration

    d = cfg["drive"]
    if d["probe_photons"] is not None:
        return d["probe_photons"]
    return calibration.mean_photon_number(
        calibration.dbm_to_watts(d["probe_power_dbm"]), omega_p, atom.gamma_rel_10
    )


def sweep_spec_from_config(cfg: dict, atom: AtomParams) -> SweepSpec:
    s = cfg["sweep"]
    d = cfg["drive"]
    if s["freq_start_ghz"] is not None:
        freqs = np.linspace(s["freq_start_ghz"] * 1e9, s["freq_stop_ghz"] * 1e9, s["freq_points"])
    else:
        f0 = atom.omega01 / TWO_PI
        half = s["freq_span_mhz"] * 1e6 / 2.0
        freqs = np.linspace(f0 - half, f0 + half, s["freq_points"])
    powers = np.linspace(s["power_start_dbm"], s["power_stop_dbm"], s["power_points"])
    return SweepSpec(
        atom=atom,
        freqs_hz=freqs,
        powers_dbm=powers,
        probe_power_dbm=d["probe_power_dbm"],
        probe_photons=d["probe_photons"],
        omega_c_hz=None if d["control_freq_ghz"] is None else d["control_freq_ghz"] * 1e9,
        resid_tol=cfg["solver"]["steady_residual_tol"],
    )


def pulse_spec_from_config(cfg: dict, atom: AtomParams) -> PulseSpec:
    p = cfg["pulse"]
    d = cfg["drive"]
    start = p["start_ns"] * 1e-9
    duration = p["duration_ns"] * 1e-9
    t_max = (
        p["t_max_ns"] * 1e-9
        if p["t_max_ns"] is not None
        else start + duration * 1.5
    )
    if t_max <= start + duration:
        raise ConfigError("pulse: t_max_ns must exceed start_ns + duration_ns")
    omega_p = atom.omega01 + TWO_PI * p["detuning_mhz"] * 1e6
    probe_photons = probe_photons_from_drive(cfg, atom, omega_p)
    return PulseSpec(
        atom=atom,
        delta_p_hz=p["detuning_mhz"] * 1e6,
        n_c_on=p["control_photons"],
        t_start=start,
        duration=duration,
        rise_time=p["rise_ns"] * 1e-9,
        t_grid=np.linspace(0.0, t_max, p["points"]),
        probe_photons=probe_photons,
        omega_c_hz=None if d["control_freq_ghz"] is None else d["control_freq_ghz"] * 1e9,
        rtol=cfg["solver"]["rtol"],
        atol=cfg["solver"]["atol"],
    )


_BOUND_SCALES = {
    "gamma_rel_10": ("mhz", TWO_PI * 1e6),
    "gamma_rel_21": ("mhz", TWO_PI * 1e6),
    "gamma_coh_10": ("mhz", TWO_PI * 1e6),
    "gamma_coh_21": ("mhz", TWO_PI * 1e6),
    "gamma_coh_20": ("mhz", TWO_PI * 1e6),
    "omega01": ("ghz", TWO_PI * 1e9),
    "omega12": ("ghz", TWO_PI * 1e9),
    "amp_scale": ("", 1.0),
    "phase_offset": ("rad", 1.0),
}


def fit_spec_from_config(cfg: dict, atom: AtomParams) -> FitSpec:
    f = cfg["fit"]
    d = cfg["drive"]
    probe_power = f["probe_power_dbm"]
    if probe_power is None:
        if d["probe_power_dbm"] is not None:
            probe_power = d["probe_power_dbm"]
        else:
            raise ConfigError("fit: set fit.probe_power_dbm or drive.probe_power_dbm")
    bounds = {}
    for name, pair in f["bounds"].items():
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(v, (int, float)) for v in pair)
        ):
            raise ConfigError(f"fit.bounds.{name}: expected [low, high]")
        _, scale = _BOUND_SCALES[name]
        bounds[name] = (pair[0] * scale, pair[1] * scale)
    return FitSpec(
        base=atom,
        free=tuple(f["free"]),
        probe_power_dbm=probe_power,
        omega_c_hz=None if d["control_freq_ghz"] is None else d["control_freq_ghz"] * 1e9,
        bounds=bounds,
        max_iterations=f["max_iterations"],
        restarts=f["restarts"],
        restart_window=f["restart_window"],
        seed=f["seed"],
        resid_tol=cfg["solver"]["steady_residual_tol"],
    )

"""Command-line front end.

Subcommands: steady, sweep, kerr, saturation, pulse, fit, calibrate.
Tabular results go to ``--out`` or stdout as CSV; JSON summaries go to
stdout, or to stderr when the CSV already occupies stdout.  Exit codes:
0 success, 2 configuration/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import calibration, config as cfgmod
from .constants import TWO_PI
from .core import transmission_at
from .errors import ConfigError, InvalidRates, KerrlineError, NonPositive, ZeroProbe
from .experiments import kerr_slope, pulse_response, saturation_scan, sweep_map
from .fitting import Dataset, fit
from .params import DriveParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _emit_json(payload, stream):
    json.dump(payload, stream, indent=2, sort_keys=True, default=_json_default)
    stream.write("\n")


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_csv(writer, out_path):
    fh, close = _open_out(out_path)
    try:
        writer(fh)
    finally:
        if close:
            fh.close()
    # JSON summaries move to stderr when the CSV owns stdout
    return sys.stdout if close else sys.stderr


def _load(args):
    cfg = cfgmod.load_config(args.config)
    overrides = getattr(args, "_overrides", [])
    for path, value in overrides:
        section = cfg
        for key in path[:-1]:
            section = section[key]
        section[path[-1]] = value
    return cfgmod.validate_config(cfg)


def _add_config_arg(sp):
    sp.add_argument("--config", required=True, help="JSON parameter file")
    sp.add_argument("--out", default=None, help="output path (default: stdout)")


def _drive_for_point(cfg, atom):
    d = cfg["drive"]
    omega_p = TWO_PI * cfgmod.probe_freq_hz(cfg, atom)
    omega_c = (
        atom.omega12 if d["control_freq_ghz"] is None else TWO_PI * d["control_freq_ghz"] * 1e9
    )
    if d["probe_power_dbm"] is not None:
        p_probe = calibration.dbm_to_watts(d["probe_power_dbm"])
    else:
        p_probe = calibration.power_from_photon_number(
            d["probe_photons"], atom.omega01, atom.gamma_rel_10
        )
    rabi_p = calibration.rabi_from_power(p_probe, omega_p, atom.gamma_rel_10, "probe")
    if d["control_power_dbm"] is not None:
        p_ctrl = calibration.dbm_to_watts(d["control_power_dbm"])
    elif d["control_photons"] is not None:
        p_ctrl = calibration.power_from_photon_number(
            d["control_photons"], omega_c, atom.gamma_rel_21
        )
    else:
        p_ctrl = 0.0
    rabi_c = calibration.rabi_from_power(p_ctrl, omega_c, atom.gamma_rel_10, "control")
    return DriveParams(omega_p=omega_p, omega_c=omega_c, rabi_p=rabi_p, rabi_c=rabi_c)


def cmd_steady(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    drive = _drive_for_point(cfg, atom)
    point = transmission_at(atom, drive, cfg["solver"]["steady_residual_tol"])
    payload = {
        "t_re": point.t.real,
        "t_im": point.t.imag,
        "magnitude": point.magnitude,
        "phase_deg": point.phase_deg,
        "r_re": point.r.real,
        "r_im": point.r.imag,
    }
    fh, close = _open_out(args.out)
    try:
        _emit_json(payload, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    spec = cfgmod.sweep_spec_from_config(cfg, atom)
    result = sweep_map(spec, parallelism=cfg["parallelism"])
    _write_csv(result.write_csv, args.out)
    return EXIT_OK


def cmd_kerr(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    k = cfg["kerr"]
    d = cfg["drive"]
    omega_p = atom.omega01 + TWO_PI * k["detuning_mhz"] * 1e6
    probe_photons = cfgmod.probe_photons_from_drive(cfg, atom, omega_p)
    photons = np.linspace(k["photon_min"], k["photon_max"], k["photon_points"])
    result = kerr_slope(
        atom,
        delta_p_hz=k["detuning_mhz"] * 1e6,
        photon_grid=photons,
        probe_photons=probe_photons,
        omega_c_hz=None if d["control_freq_ghz"] is None else d["control_freq_ghz"] * 1e9,
        resid_tol=cfg["solver"]["steady_residual_tol"],
        parallelism=cfg["parallelism"],
    )
    summary_stream = _write_csv(result.write_csv, args.out)
    _emit_json({"slope_deg_per_photon": result.slope_deg_per_photon}, summary_stream)
    return EXIT_OK


def cmd_saturation(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    s = cfg["saturation"]
    d = cfg["drive"]
    powers = np.linspace(s["power_start_dbm"], s["power_stop_dbm"], s["power_points"])
    result = saturation_scan(
        atom,
        delta_p_hz=s["detuning_mhz"] * 1e6,
        n_c=s["control_photons"],
        probe_powers_dbm=powers,
        omega_c_hz=None if d["control_freq_ghz"] is None else d["control_freq_ghz"] * 1e9,
        tail_decades=s["tail_decades"],
        resid_tol=cfg["solver"]["steady_residual_tol"],
        parallelism=cfg["parallelism"],
    )
    summary_stream = _write_csv(result.write_csv, args.out)
    _emit_json(
        {
            "exponent_phi_vs_power": result.exponent_phi_vs_power,
            "exponent_q_vs_vin": result.exponent_q_vs_vin,
            "tail_points": result.tail_points,
        },
        summary_stream,
    )
    return EXIT_OK


def cmd_pulse(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    spec = cfgmod.pulse_spec_from_config(cfg, atom)
    result = pulse_response(spec)
    summary_stream = _write_csv(result.write_csv, args.out)
    _emit_json({"plateau_delta_phi_deg": result.plateau_delta_phi_deg}, summary_stream)
    return EXIT_OK


def cmd_fit(args):
    cfg = _load(args)
    atom = cfgmod.atom_from_config(cfg)
    spec = cfgmod.fit_spec_from_config(cfg, atom)
    try:
        with open(args.data, "r", encoding="utf-8", newline="") as fh:
            dataset = Dataset.read_csv(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {args.data!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"dataset {args.data!r}: {exc}") from exc
    report = fit(dataset, spec)
    fh, close = _open_out(args.out)
    try:
        fh.write(report.to_json() + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_calibrate(args):
    if args.dbm is None and args.watts is None and args.photons is None:
        raise ConfigError("calibrate: provide one of --dbm, --watts, --photons")
    given = [v is not None for v in (args.dbm, args.watts, args.photons)]
    if sum(given) != 1:
        raise ConfigError("calibrate: provide exactly one of --dbm, --watts, --photons")
    payload = {}
    conversions = []
    if args.omega_c_ghz is not None:
        if args.gamma21_mhz is None:
            raise ConfigError("calibrate: --omega-c-ghz needs --gamma21-mhz")
        conversions.append(
            ("control", TWO_PI * args.omega_c_ghz * 1e9, TWO_PI * args.gamma21_mhz * 1e6)
        )
    if args.omega_p_ghz is not None:
        if args.gamma10_mhz is None:
            raise ConfigError("calibrate: --omega-p-ghz needs --gamma10-mhz")
        conversions.append(
            ("probe", TWO_PI * args.omega_p_ghz * 1e9, TWO_PI * args.gamma10_mhz * 1e6)
        )
    if not conversions:
        raise ConfigError("calibrate: provide --omega-c-ghz/--gamma21-mhz or --omega-p-ghz/--gamma10-mhz")
    for tone, omega, gamma in conversions:
        if args.photons is not None:
            watts = calibration.power_from_photon_number(args.photons, omega, gamma)
        elif args.dbm is not None:
            watts = calibration.dbm_to_watts(args.dbm)
        else:
            watts = args.watts
        entry = {
            "power_watts": watts,
            "power_dbm": calibration.watts_to_dbm(watts) if watts > 0 else None,
            "photon_flux_per_s": calibration.photon_flux(watts, omega),
            "mean_photons": calibration.mean_photon_number(watts, omega, gamma),
        }
        gamma10 = gamma if tone == "probe" else (
            TWO_PI * args.gamma10_mhz * 1e6 if args.gamma10_mhz is not None else None
        )
        if gamma10 is not None:
            rabi = calibration.rabi_from_power(watts, omega, gamma10, tone)
            entry["rabi_mhz"] = rabi / (TWO_PI * 1e6)
        payload[tone] = entry
    fh, close = _open_out(args.out)
    try:
        _emit_json(payload, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _float_flag(sp, name, dest_path, help_text):
    """Register a float flag that overrides a config entry."""

    class _Set(argparse.Action):
        def __call__(self, parser, namespace, values, option_string=None):
            if not hasattr(namespace, "_overrides"):
                namespace._overrides = []
            namespace._overrides.append((dest_path, values))

    sp.add_argument(name, type=float, action=_Set, help=help_text, metavar="X")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kerrline",
        description=(
            "Steady-state and time-domain response of a three-level artificial atom "
            "coupled to an open transmission line, plus transmission-data fitting."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("steady", help="one operating point as JSON")
    _add_config_arg(sp)
    _float_flag(sp, "--probe-freq-ghz", ("drive", "probe_freq_ghz"), "absolute probe frequency")
    _float_flag(sp, "--probe-detuning-mhz", ("drive", "probe_detuning_mhz"), "probe detuning from the 0-1 line")
    _float_flag(sp, "--probe-photons", ("drive", "probe_photons"), "probe power, photons per interaction time")
    _float_flag(sp, "--control-photons", ("drive", "control_photons"), "control power, photons per interaction time")
    _float_flag(sp, "--control-power-dbm", ("drive", "control_power_dbm"), "control power in dBm")
    sp.set_defaults(func=cmd_steady)

    sp = sub.add_parser("sweep", help="probe-frequency x control-power transmission map (CSV)")
    _add_config_arg(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("kerr", help="phase shift vs control photon number plus fitted slope")
    _add_config_arg(sp)
    _float_flag(sp, "--detuning-mhz", ("kerr", "detuning_mhz"), "probe detuning for the scan")
    sp.set_defaults(func=cmd_kerr)

    sp = sub.add_parser("saturation", help="phase shift vs probe power plus tail exponent")
    _add_config_arg(sp)
    sp.set_defaults(func=cmd_saturation)

    sp = sub.add_parser("pulse", help="time-resolved probe phase under a control pulse (CSV)")
    _add_config_arg(sp)
    sp.set_defaults(func=cmd_pulse)

    sp = sub.add_parser("fit", help="fit atom parameters to a transmission dataset")
    _add_config_arg(sp)
    sp.add_argument("data", help="dataset CSV: freq_hz,power_dbm,t_re,t_im[,weight]")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("calibrate", help="power / photon-number / Rabi conversions as JSON")
    sp.add_argument("--dbm", type=float, default=None, help="power in dBm")
    sp.add_argument("--watts", type=float, default=None, help="power in W")
    sp.add_argument("--photons", type=float, default=None, help="mean photons per interaction time")
    sp.add_argument("--omega-c-ghz", type=float, default=None, help="control carrier frequency")
    sp.add_argument("--gamma21-mhz", type=float, default=None, help="2->1 relaxation rate /2pi")
    sp.add_argument("--omega-p-ghz", type=float, default=None, help="probe carrier frequency")
    sp.add_argument("--gamma10-mhz", type=float, default=None, help="1->0 relaxation rate /2pi")
    sp.add_argument("--out", default=None, help="output path (default: stdout)")
    sp.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, NonPositive, InvalidRates, ZeroProbe, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KerrlineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

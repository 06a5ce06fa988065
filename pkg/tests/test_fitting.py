import io
import json
import math

import numpy as np
import pytest

from kerrline import (
    Dataset,
    DegenerateJacobian,
    DriveParams,
    FitSpec,
    fit,
    model_predict,
    synthesize,
    transmission_at,
)
from kerrline.calibration import dbm_to_watts, rabi_from_power

from conftest import mhz


FREQS = np.linspace(7.1e9 - 150e6, 7.1e9 + 150e6, 21)
POWERS = np.linspace(-136.0, -112.0, 4)


def _grid():
    f, p = np.meshgrid(FREQS, POWERS)
    return f.ravel(), p.ravel()


class TestModelPredict:
    def test_reduces_to_transmission_point(self, low_power_atom):
        atom = low_power_atom
        freq = atom.omega01 / (2 * np.pi) + 25e6
        power = -120.0
        t = model_predict(atom, [freq], [power], probe_power_dbm=-140.0)[0]
        omega_p = 2 * np.pi * freq
        drive = DriveParams(
            omega_p=omega_p,
            omega_c=atom.omega12,
            rabi_p=rabi_from_power(dbm_to_watts(-140.0), omega_p, atom.gamma_rel_10, "probe"),
            rabi_c=rabi_from_power(dbm_to_watts(power), atom.omega12, atom.gamma_rel_10, "control"),
        )
        assert t == pytest.approx(transmission_at(atom, drive).t, rel=1e-12)

    def test_phase_offset_of_pi_negates(self, low_power_atom):
        freq = [7.1e9 + 30e6]
        power = [-118.0]
        base = model_predict(low_power_atom, freq, power, -140.0)
        flipped = model_predict(low_power_atom, freq, power, -140.0, phase_offset=math.pi)
        assert flipped[0] == pytest.approx(-base[0], rel=1e-12)
        scaled = model_predict(low_power_atom, freq, power, -140.0, amp_scale=0.5)
        assert scaled[0] == pytest.approx(0.5 * base[0], rel=1e-12)

    def test_forward_difference_matches_central_oracle(self, low_power_atom):
        # derivative of t with respect to the 1->0 relaxation rate
        atom = low_power_atom
        freq = [7.1e9 + 40e6]
        power = [-116.0]
        g = atom.gamma_rel_10
        h = 1e-6 * g

        def t_at(gamma):
            return model_predict(atom.with_(gamma_rel_10=gamma), freq, power, -140.0)[0]

        forward = (t_at(g + h) - t_at(g)) / h
        central = (t_at(g + h) - t_at(g - h)) / (2 * h)
        assert abs(forward - central) / abs(central) < 1e-6


class TestSynthesize:
    def test_zero_noise_is_exact_model(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.0, seed=1)
        ref = model_predict(low_power_atom, f, p, -140.0)
        assert np.array_equal(ds.t, ref)

    def test_seed_determinism(self, low_power_atom):
        f, p = _grid()
        a = synthesize(low_power_atom, f, p, -140.0, sigma=0.02, seed=42)
        b = synthesize(low_power_atom, f, p, -140.0, sigma=0.02, seed=42)
        c = synthesize(low_power_atom, f, p, -140.0, sigma=0.02, seed=43)
        assert np.array_equal(a.t, b.t)
        assert not np.array_equal(a.t, c.t)

    def test_averaging_halves_noise(self, low_power_atom):
        n = 10_000
        f = np.full(n, 7.1e9 + 40e6)
        p = np.full(n, -120.0)
        ref = model_predict(low_power_atom, f[:1], p[:1], -140.0)[0]
        one = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=7, averages=1)
        four = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=7, averages=4)
        std1 = np.std(np.abs(one.t - ref))
        std4 = np.std(np.abs(four.t - ref))
        assert std1 / std4 == pytest.approx(2.0, rel=0.05)


class TestFit:
    def test_zero_noise_fixed_point(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.0, seed=0)
        spec = FitSpec(
            base=low_power_atom,
            free=("gamma_rel_10", "gamma_coh_10", "gamma_coh_21"),
            probe_power_dbm=-140.0,
        )
        report = fit(ds, spec)
        assert report.status == "converged"
        assert report.iterations <= 2
        assert report.params["gamma_rel_10"] == pytest.approx(low_power_atom.gamma_rel_10, rel=1e-9)
        assert report.params["gamma_coh_10"] == pytest.approx(low_power_atom.gamma_coh_10, rel=1e-9)
        assert report.params["gamma_coh_21"] == pytest.approx(low_power_atom.gamma_coh_21, rel=1e-9)

    def test_noisy_round_trip_with_perturbed_guesses(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.005, seed=97)
        start = low_power_atom.with_(
            gamma_rel_10=low_power_atom.gamma_rel_10 * 1.2,
            gamma_coh_10=low_power_atom.gamma_coh_10 * 0.8,
            gamma_coh_21=low_power_atom.gamma_coh_21 * 1.2,
        )
        spec = FitSpec(
            base=start,
            free=("gamma_rel_10", "gamma_coh_10", "gamma_coh_21"),
            probe_power_dbm=-140.0,
            bounds={
                "gamma_rel_10": (mhz(30), mhz(150)),
                "gamma_coh_10": (mhz(20), mhz(120)),
                "gamma_coh_21": (mhz(30), mhz(160)),
            },
        )
        report = fit(ds, spec)
        assert report.status == "converged"
        for name in spec.free:
            truth = getattr(low_power_atom, name)
            assert report.params[name] == pytest.approx(truth, rel=0.05)

    def test_underdetermined_raises(self, low_power_atom):
        ds = Dataset(np.array([7.1e9]), np.array([-120.0]), np.array([0.5 + 0.1j]))
        spec = FitSpec(
            base=low_power_atom,
            free=("gamma_rel_10", "gamma_coh_10", "gamma_coh_21"),
            probe_power_dbm=-140.0,
        )
        with pytest.raises(DegenerateJacobian):
            fit(ds, spec)

    def test_objective_monotone_over_accepted_steps(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=5)
        start = low_power_atom.with_(gamma_coh_10=low_power_atom.gamma_coh_10 * 1.3)
        spec = FitSpec(base=start, free=("gamma_coh_10",), probe_power_dbm=-140.0)
        report = fit(ds, spec)
        hist = np.array(report.objective_history)
        assert np.all(np.diff(hist) <= 0.0)

    def test_record_order_invariance(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=11)
        start = low_power_atom.with_(
            gamma_rel_10=low_power_atom.gamma_rel_10 * 1.15,
            gamma_coh_10=low_power_atom.gamma_coh_10 * 0.9,
        )
        spec = FitSpec(base=start, free=("gamma_rel_10", "gamma_coh_10"),
                       probe_power_dbm=-140.0)
        report_a = fit(ds, spec)
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(ds))
        ds_shuffled = Dataset(ds.freq_hz[perm], ds.power_dbm[perm], ds.t[perm])
        report_b = fit(ds_shuffled, spec)
        for name in spec.free:
            assert report_a.params[name] == pytest.approx(report_b.params[name], rel=1e-10)

    def test_gradient_assembled_from_jacobian(self, low_power_atom):
        # J^T r must match finite differences of the scalar objective
        from kerrline.fitting import _Objective

        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=3)
        spec = FitSpec(
            base=low_power_atom, free=("gamma_rel_10", "gamma_coh_10"),
            probe_power_dbm=-140.0,
        )
        obj = _Objective(ds, spec)
        rng = np.random.default_rng(19)
        for _ in range(3):
            x = obj.start() * (1.0 + 0.1 * rng.uniform(-1, 1, 2))
            r = obj.residuals(x)
            jac = np.empty((r.size, 2))
            for k in range(2):
                h = 1e-7
                xk = x.copy()
                xk[k] += h
                jac[:, k] = (obj.residuals(xk) - r) / h
            grad = 2.0 * jac.T @ r
            for k in range(2):
                h = 1e-7
                xp = x.copy()
                xp[k] += h
                xm = x.copy()
                xm[k] -= h
                rp = obj.residuals(xp)
                rm = obj.residuals(xm)
                fd = (float(rp @ rp) - float(rm @ rm)) / (2 * h)
                assert grad[k] == pytest.approx(fd, rel=1e-5)

    def test_amplitude_phase_objective_finds_same_optimum(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.0, seed=0)
        start = low_power_atom.with_(
            gamma_rel_10=low_power_atom.gamma_rel_10 * 1.1,
            gamma_coh_10=low_power_atom.gamma_coh_10 * 0.9,
        )
        kwargs = dict(base=start, free=("gamma_rel_10", "gamma_coh_10"),
                      probe_power_dbm=-140.0)
        report_reim = fit(ds, FitSpec(residual_mode="reim", **kwargs))
        report_ap = fit(ds, FitSpec(residual_mode="ampphase", **kwargs))
        for name in ("gamma_rel_10", "gamma_coh_10"):
            assert report_reim.params[name] == pytest.approx(
                report_ap.params[name], rel=1e-6
            )

    def test_nuisance_calibration_parameters_recovered(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.002, seed=31,
                        amp_scale=0.9, phase_offset=0.12)
        spec = FitSpec(
            base=low_power_atom,
            free=("gamma_coh_10", "amp_scale", "phase_offset"),
            probe_power_dbm=-140.0,
        )
        report = fit(ds, spec)
        assert report.status == "converged"
        assert report.params["amp_scale"] == pytest.approx(0.9, rel=0.02)
        assert report.params["phase_offset"] == pytest.approx(0.12, abs=0.01)
        assert report.params["gamma_coh_10"] == pytest.approx(
            low_power_atom.gamma_coh_10, rel=0.02
        )

    def test_zero_weight_records_are_ignored(self, low_power_atom):
        f, p = _grid()
        clean = synthesize(low_power_atom, f, p, -140.0, sigma=0.0, seed=0)
        t = clean.t.copy()
        w = np.ones(len(clean))
        t[:10] += 0.7 - 0.4j  # corrupted points
        w[:10] = 0.0
        ds = Dataset(clean.freq_hz, clean.power_dbm, t, w)
        start = low_power_atom.with_(gamma_coh_10=low_power_atom.gamma_coh_10 * 1.2)
        spec = FitSpec(base=start, free=("gamma_coh_10",), probe_power_dbm=-140.0)
        report = fit(ds, spec)
        assert report.params["gamma_coh_10"] == pytest.approx(
            low_power_atom.gamma_coh_10, rel=1e-6
        )

    def test_multi_start_is_seeded_and_deterministic(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=8)
        start = low_power_atom.with_(gamma_coh_10=low_power_atom.gamma_coh_10 * 1.25)
        kwargs = dict(base=start, free=("gamma_rel_10", "gamma_coh_10"),
                      probe_power_dbm=-140.0, restarts=3)
        a = fit(ds, FitSpec(seed=5, **kwargs))
        b = fit(ds, FitSpec(seed=5, **kwargs))
        assert a.params == b.params
        assert a.status == "converged"

    def test_iteration_cap_flags_non_convergence(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=21)
        start = low_power_atom.with_(
            gamma_rel_10=low_power_atom.gamma_rel_10 * 1.3,
            gamma_coh_10=low_power_atom.gamma_coh_10 * 0.7,
        )
        spec = FitSpec(base=start, free=("gamma_rel_10", "gamma_coh_10"),
                       probe_power_dbm=-140.0, max_iterations=1)
        report = fit(ds, spec)
        assert report.status == "non_convergence"
        assert report.iterations == 1
        # the best-so-far point is still reported and is an improvement
        hist = report.objective_history
        assert hist[-1] < hist[0]

    def test_report_json_keys(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.0, seed=0)
        spec = FitSpec(base=low_power_atom, free=("gamma_coh_10",), probe_power_dbm=-140.0)
        report = fit(ds, spec)
        payload = json.loads(report.to_json())
        assert set(payload) == {"params", "stderr", "residual_norm", "status", "iterations"}


class TestDatasetIO:
    def test_csv_round_trip(self, low_power_atom):
        f, p = _grid()
        ds = synthesize(low_power_atom, f, p, -140.0, sigma=0.01, seed=2)
        buf = io.StringIO()
        ds.write_csv(buf)
        buf.seek(0)
        back = Dataset.read_csv(buf)
        assert np.allclose(back.freq_hz, ds.freq_hz, rtol=1e-11)
        assert np.allclose(back.t, ds.t, rtol=1e-11)

    def test_rejects_nonfinite_and_mismatched(self):
        with pytest.raises(ValueError):
            Dataset(np.array([1.0, np.nan]), np.array([-120.0, -121.0]),
                    np.array([1 + 0j, 1 + 0j]))
        with pytest.raises(ValueError):
            Dataset(np.array([1.0]), np.array([-120.0, -121.0]), np.array([1 + 0j]))
        with pytest.raises(ValueError):
            Dataset.read_csv(io.StringIO("a,b\n1,2\n"))

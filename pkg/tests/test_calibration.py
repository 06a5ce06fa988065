import math

import numpy as np
import pytest

from kerrline import (
    NonPositive,
    PowerPoint,
    control_photon_number,
    dbm_to_watts,
    mean_photon_number,
    photon_flux,
    power_from_photon_number,
    probe_photon_number,
    rabi_from_power,
    watts_to_dbm,
)
from kerrline.constants import HBAR, TWO_PI


def test_dbm_anchors():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watts(-30.0) == pytest.approx(1e-6, rel=1e-12)
    # -121.4 dBm is 0.72 fW to the quoted rounding
    assert dbm_to_watts(-121.4) == pytest.approx(7.24e-16, rel=1e-3)


def test_watts_dbm_round_trip():
    for p in (-170.0, -121.4, -30.0, 0.0, 10.0):
        w = dbm_to_watts(p)
        assert watts_to_dbm(w) == pytest.approx(p, abs=1e-12)
    for w in (1e-18, 7.24e-16, 1e-3):
        assert dbm_to_watts(watts_to_dbm(w)) == pytest.approx(w, rel=1e-12)


def test_control_photon_anchor():
    n = control_photon_number(dbm_to_watts(-121.4), TWO_PI * 6.38e9, TWO_PI * 170e6)
    assert n == pytest.approx(1.0, abs=0.01)


def test_probe_photon_anchor():
    n = probe_photon_number(dbm_to_watts(-122.0), TWO_PI * 7.26e9, TWO_PI * 140e6)
    assert n == pytest.approx(1.0, abs=0.1)


def test_photon_number_scalings():
    w, g = TWO_PI * 6.38e9, TWO_PI * 170e6
    assert control_photon_number(0.0, w, g) == 0.0
    base = control_photon_number(1e-15, w, g)
    assert control_photon_number(1e-15, w, g / 2) == pytest.approx(2 * base, rel=1e-12)
    assert probe_photon_number(2e-15, w, g) == pytest.approx(
        2 * probe_photon_number(1e-15, w, g), rel=1e-12
    )


def test_rabi_control_probe_ratio_exact():
    p, w, g = 3.7e-16, TWO_PI * 6.38e9, TWO_PI * 140e6
    ratio = rabi_from_power(p, w, g, "control") / rabi_from_power(p, w, g, "probe")
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert rabi_from_power(0.0, w, g, "probe") == 0.0


def test_probe_rabi_value_high_precision():
    # recompute sqrt(2 * Gamma * P / (hbar * omega)) independently with mpmath
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    p = mpmath.mpf("1e-3") * mpmath.power(10, mpmath.mpf("-122.0") / 10)
    gamma = 2 * mpmath.pi * mpmath.mpf("140e6")
    omega = 2 * mpmath.pi * mpmath.mpf("7.26e9")
    hbar = mpmath.mpf("1.054571817e-34")
    expect = mpmath.sqrt(2 * gamma * p / (hbar * omega))
    got = rabi_from_power(dbm_to_watts(-122.0), TWO_PI * 7.26e9, TWO_PI * 140e6, "probe")
    assert got == pytest.approx(float(expect), rel=1e-12)
    assert got / TWO_PI == pytest.approx(76.6e6, rel=2e-3)


def test_unit_photon_flux_consistency():
    # <N> = 1 corresponds to a flux of gamma/2pi photons per second
    w, g = TWO_PI * 7.0e9, TWO_PI * 150e6
    p = power_from_photon_number(1.0, w, g)
    assert photon_flux(p, w) == pytest.approx(g / TWO_PI, rel=1e-12)
    assert mean_photon_number(p, w, g) == pytest.approx(1.0, rel=1e-12)


def test_monotonicity():
    w, g = TWO_PI * 7.0e9, TWO_PI * 100e6
    powers = np.linspace(1e-18, 1e-14, 50)
    photons = [mean_photon_number(p, w, g) for p in powers]
    rabis = [rabi_from_power(p, w, g, "probe") for p in powers]
    assert np.all(np.diff(photons) > 0)
    assert np.all(np.diff(rabis) > 0)
    ws = [dbm_to_watts(d) for d in np.linspace(-150, -100, 40)]
    assert np.all(np.diff(ws) > 0)


def test_power_point_invariants():
    pt = PowerPoint.from_dbm(-121.4, TWO_PI * 6.38e9, TWO_PI * 170e6)
    assert pt.power_watts == pytest.approx(1e-3 * 10 ** (pt.power_dbm / 10.0), rel=1e-15)
    assert pt.mean_photons == pytest.approx(1.0, abs=0.01)
    assert pt.photon_flux == pytest.approx(pt.power_watts / (HBAR * TWO_PI * 6.38e9), rel=1e-15)


def test_error_paths():
    with pytest.raises(NonPositive):
        watts_to_dbm(0.0)
    with pytest.raises(NonPositive):
        dbm_to_watts(float("nan"))
    with pytest.raises(NonPositive):
        photon_flux(1e-15, 0.0)
    with pytest.raises(NonPositive):
        mean_photon_number(1e-15, TWO_PI * 7e9, 0.0)
    with pytest.raises(NonPositive):
        rabi_from_power(-1e-15, TWO_PI * 7e9, TWO_PI * 1e8, "probe")
    with pytest.raises(ValueError):
        rabi_from_power(1e-15, TWO_PI * 7e9, TWO_PI * 1e8, "pump")

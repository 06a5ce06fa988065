"""Timing comparison of the compiled and pure kernels on the hot paths.

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from kerrline import AtomParams
from kerrline._kernels import available_backends
from kerrline.core import resolved_rates
from kerrline.constants import TWO_PI


def _atom():
    return AtomParams.from_hz(
        omega01=7.26e9, omega12=6.38e9, gamma_rel_10=140e6, gamma_rel_21=170e6,
        gamma_coh_10=100e6, gamma_coh_21=184e6,
    )


def bench_steady(backend, n_points=3417, repeats=3):
    """Paired on/off sweep of the default map size (201 freqs x 17 powers)."""
    atom = _atom()
    rates = resolved_rates(atom)
    rng = np.random.default_rng(7)
    jobs = np.empty((n_points * 2, 4))
    jobs[:, 0] = rng.uniform(-TWO_PI * 150e6, TWO_PI * 150e6, n_points * 2)
    jobs[:, 1] = 0.0
    jobs[:, 2] = TWO_PI * 2e6
    jobs[:, 3] = rng.uniform(0.0, TWO_PI * 300e6, n_points * 2)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        rho10, resid = backend.steady_rho10_batch(rates, jobs)
        best = min(best, time.perf_counter() - t0)
    assert np.all(np.isfinite(resid))
    return best, jobs.shape[0]


def bench_propagate(backend, repeats=3):
    """One long pulse trajectory (about 1e3 accepted steps at rtol 1e-9)."""
    from kerrline._kernels import pure

    atom = _atom()
    rates = resolved_rates(atom)
    l_off = pure.generator(rates, TWO_PI * 20e6, 0.0, TWO_PI * 2e6, 0.0)
    l_on = pure.generator(rates, TWO_PI * 20e6, 0.0, TWO_PI * 2e6, TWO_PI * 67e6)
    lc = (l_on - l_off) / (TWO_PI * 67e6)
    t21 = TWO_PI / atom.gamma_rel_21
    knots_t = np.array([20 * t21 * (1 - 1e-9), 20 * t21, 120 * t21, 120 * t21 * (1 + 1e-9)])
    knots_v = np.array([0.0, TWO_PI * 67e6, TWO_PI * 67e6, 0.0])
    y0 = np.zeros(9, dtype=np.complex128)
    y0[0] = 1.0
    t_out = np.linspace(0.0, 140 * t21, 600)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        states, status = backend.propagate(l_off, lc, knots_t, knots_v, y0, t_out, 1e-9, 1e-12, 10_000_000)
        best = min(best, time.perf_counter() - t0)
    assert status == 0
    return best, t_out.size


def main():
    backends = available_backends()
    names = [b.NAME for b in backends]
    print(f"backends found: {', '.join(names)}")
    rows = []
    for b in backends:
        t_steady, n_jobs = bench_steady(b)
        t_prop, n_out = bench_propagate(b)
        rows.append((b.NAME, t_steady, n_jobs, t_prop, n_out))
    print()
    print(f"{'backend':<10} {'steady sweep':>16} {'per solve':>12} {'pulse traj':>12}")
    for name, ts, nj, tp, _ in rows:
        print(f"{name:<10} {ts * 1e3:>13.1f} ms {ts / nj * 1e6:>9.2f} us {tp * 1e3:>9.1f} ms")
    if len(rows) == 2:
        print()
        print(f"speedup (pure/compiled): steady {rows[1][1] / rows[0][1]:.1f}x, "
              f"propagate {rows[1][3] / rows[0][3]:.1f}x")


if __name__ == "__main__":
    main()

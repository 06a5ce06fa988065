"""Pure-numpy reference kernels.

These are the fallback twins of the compiled routines in ``_speedup.pyx``;
both implement exactly the same math on the row-major vectorization
vec(rho)[3*i + j] = rho[i, j].  Rates enter already resolved (the
``gamma20`` default and dephasing-mode bookkeeping happen upstream in
:mod:`kerrline.params`), as the 5-tuple::

    rates = (gamma_rel_10, gamma_rel_21, gamma_coh_10, gamma_coh_21, gamma_coh_20)

and one operating point is the 4-tuple ``(delta_p, delta_c, rabi_p, rabi_c)``.
"""

import numpy as np

NAME = "pure"

_I3 = np.eye(3, dtype=np.complex128)
_TRACE_IDX = (0, 4, 8)


def generator(rates, delta_p, delta_c, rabi_p, rabi_c):
    """9x9 generator of d vec(rho)/dt for one operating point."""
    g_rel10, g_rel21, g10, g21, g20 = rates
    h = np.array(
        [
            [0.0, rabi_p / 2.0, 0.0],
            [rabi_p / 2.0, -delta_p, rabi_c / 2.0],
            [0.0, rabi_c / 2.0, -(delta_p + delta_c)],
        ],
        dtype=np.complex128,
    )
    lop = -1j * (np.kron(h, _I3) - np.kron(_I3, h.T))
    for (i, j, rate) in ((0, 1, g_rel10), (1, 2, g_rel21)):
        a = np.zeros((3, 3), dtype=np.complex128)
        a[i, j] = 1.0
        ada = a.conj().T @ a
        lop += rate * (np.kron(a, a.conj()) - 0.5 * (np.kron(ada, _I3) + np.kron(_I3, ada.T)))
    # force the requested coherence decay rates on the off-diagonal blocks
    extra = np.zeros(9)
    for (i, j, want, have) in (
        (1, 0, g10, g_rel10 / 2.0),
        (2, 1, g21, (g_rel10 + g_rel21) / 2.0),
        (2, 0, g20, g_rel21 / 2.0),
    ):
        extra[3 * i + j] = want - have
        extra[3 * j + i] = want - have
    lop -= np.diag(extra.astype(np.complex128))
    return lop


def steady_from_generator(lop):
    """Steady state of a trace-preserving generator.

    Replaces the first row with the trace constraint and LU-solves; returns
    (rho, residual) where residual is the max-norm of lop @ vec(rho) after
    normalizing lop to unit largest entry.  Raises numpy.linalg.LinAlgError
    on an exactly singular replaced system.
    """
    scale = np.abs(lop).max()
    if scale == 0.0:
        raise np.linalg.LinAlgError("zero generator has no unique steady state")
    ln = lop / scale
    a = ln.copy()
    a[0, :] = 0.0
    a[0, list(_TRACE_IDX)] = 1.0
    b = np.zeros(9, dtype=np.complex128)
    b[0] = 1.0
    x = np.linalg.solve(a, b)
    resid = float(np.abs(ln @ x).max())
    return x.reshape(3, 3), resid


def steady_rho(rates, delta_p, delta_c, rabi_p, rabi_c):
    """Steady state at one operating point: (rho 3x3, normalized residual)."""
    return steady_from_generator(generator(rates, delta_p, delta_c, rabi_p, rabi_c))


def steady_rho10_batch(rates, jobs):
    """Vector of steady-state rho[1,0] over operating points.

    jobs is float64 (k, 4) with columns (delta_p, delta_c, rabi_p, rabi_c).
    Returns (rho10 complex (k,), residual float (k,)).  Singular points get
    rho10 = nan and residual = inf instead of raising, so a sweep can attach
    grid coordinates to the failure.
    """
    k = jobs.shape[0]
    rho10 = np.empty(k, dtype=np.complex128)
    resid = np.empty(k, dtype=np.float64)
    for n in range(k):
        try:
            rho, r = steady_rho(rates, jobs[n, 0], jobs[n, 1], jobs[n, 2], jobs[n, 3])
        except np.linalg.LinAlgError:
            rho10[n] = np.nan
            resid[n] = np.inf
            continue
        rho10[n] = rho[1, 0]
        resid[n] = r
    return rho10, resid


# -- Dormand-Prince 5(4) embedded pair -------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

STATUS_OK = 0
STATUS_STEP_FAILURE = 1


def propagate(l0, lc, knots_t, knots_v, y0, t_out, rtol, atol, max_steps=1_000_000):
    """Integrate y' = (l0 + v(t) * lc) y through the points t_out.

    v(t) interpolates (knots_t, knots_v) piecewise-linearly with flat
    extrapolation; pass empty knots for a time-independent generator.
    Returns (Y (len(t_out), 9), status).  t_out must be increasing and
    start at the initial time.
    """
    if len(knots_t):
        env = lambda t: np.interp(t, knots_t, knots_v)
    else:
        env = lambda t: 0.0
    return _propagate_impl(l0, lc, env, y0, t_out, rtol, atol, max_steps)


def propagate_callback(l0, lc, envelope, y0, t_out, rtol, atol, max_steps=1_000_000):
    """Same as :func:`propagate` with an arbitrary Python callable envelope."""
    return _propagate_impl(l0, lc, envelope, y0, t_out, rtol, atol, max_steps)


def _propagate_impl(l0, lc, env, y0, t_out, rtol, atol, max_steps):
    t_out = np.asarray(t_out, dtype=np.float64)
    out = np.empty((t_out.size, 9), dtype=np.complex128)
    t = float(t_out[0])
    y = np.array(y0, dtype=np.complex128)
    out[0] = y
    i_out = 1
    if i_out >= t_out.size:
        return out, STATUS_OK

    def rhs(tt, yy):
        return l0 @ yy + (float(env(tt)) * (lc @ yy) if lc is not None else 0.0)

    f = rhs(t, y)
    # initial step from the RHS magnitude, bounded by the first output gap
    span = float(t_out[-1] - t_out[0])
    fmag = float(np.abs(f).max())
    h = min(span, (0.01 * max(np.abs(y).max(), atol) / fmag) if fmag > 0 else span)
    h = max(h, span * 1e-12)

    k = np.empty((7, 9), dtype=np.complex128)
    steps = 0
    while i_out < t_out.size:
        if steps >= max_steps:
            return out, STATUS_STEP_FAILURE
        steps += 1
        t_target = float(t_out[i_out])
        hit = False
        if h >= t_target - t:
            h = t_target - t
            hit = True
        k[0] = f
        for s in range(1, 7):
            ys = y + h * (_DP_A[s] @ k[:s])
            k[s] = rhs(t + _DP_C[s] * h, ys)
        y_new = y + h * (_DP_B5 @ k)
        err_vec = h * (_DP_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / sc) ** 2)))
        if err <= 1.0:
            y = y_new
            f = k[6]  # FSAL: last stage is the RHS at (t+h, y_new)
            if hit:
                t = t_target
                out[i_out] = y
                i_out += 1
            else:
                t += h
        factor = 0.9 * (err ** -0.2) if err > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h <= span * 1e-15:
            return out, STATUS_STEP_FAILURE
    return out, STATUS_OK

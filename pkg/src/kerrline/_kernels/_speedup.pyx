# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled kernels: steady-state solves and time propagation.

Twin of ``pure.py`` (same math, same vectorization, same step control);
keep the two in sync.  The point-solve and batch routines run without the
GIL so sweep threads actually overlap.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, fabs, sqrt

cnp.import_array()

NAME = "compiled"
STATUS_OK = 0
STATUS_STEP_FAILURE = 1

cdef int C_STATUS_OK = 0
cdef int C_STATUS_STEP_FAILURE = 1

ctypedef double complex dcomplex


cdef void _fill_generator(double g_rel10, double g_rel21, double g10, double g21,
                          double g20, double dp, double dc, double op, double oc,
                          dcomplex* L) noexcept nogil:
    """Row-major 9x9 generator; vec(rho)[3*i+j] = rho[i,j]."""
    cdef double h[3][3]
    cdef int i, j, k, l, r
    cdef double e10, e21, e20
    for i in range(81):
        L[i] = 0.0
    h[0][0] = 0.0
    h[0][1] = 0.5 * op
    h[0][2] = 0.0
    h[1][0] = 0.5 * op
    h[1][1] = -dp
    h[1][2] = 0.5 * oc
    h[2][0] = 0.0
    h[2][1] = 0.5 * oc
    h[2][2] = -(dp + dc)
    # -i (kron(H, I) - kron(I, H^T))
    for i in range(3):
        for k in range(3):
            if h[i][k] != 0.0:
                for j in range(3):
                    L[(3 * i + j) * 9 + 3 * k + j] -= 1j * h[i][k]
    for i in range(3):
        for j in range(3):
            for l in range(3):
                if h[l][j] != 0.0:
                    L[(3 * i + j) * 9 + 3 * i + l] += 1j * h[l][j]
    # relaxation channels |0><1| at g_rel10 and |1><2| at g_rel21
    L[0 * 9 + 4] += g_rel10
    L[4 * 9 + 8] += g_rel21
    for i in range(3):
        for j in range(3):
            r = 3 * i + j
            L[r * 9 + r] -= 0.5 * g_rel10 * ((i == 1) + (j == 1)) \
                + 0.5 * g_rel21 * ((i == 2) + (j == 2))
    # force the requested coherence decay rates
    e10 = g10 - 0.5 * g_rel10
    e21 = g21 - 0.5 * (g_rel10 + g_rel21)
    e20 = g20 - 0.5 * g_rel21
    L[3 * 9 + 3] -= e10
    L[1 * 9 + 1] -= e10
    L[7 * 9 + 7] -= e21
    L[5 * 9 + 5] -= e21
    L[6 * 9 + 6] -= e20
    L[2 * 9 + 2] -= e20


cdef int _steady_solve(dcomplex* L, dcomplex* rho, double* resid) noexcept nogil:
    """Trace-replaced LU solve with partial pivoting.

    L is overwritten.  Returns 0 on success, 1 on an exactly singular pivot
    or a zero generator.  resid gets max|L_scaled @ x|.
    """
    cdef dcomplex A[81]
    cdef dcomplex Ls[81]
    cdef dcomplex b[9]
    cdef dcomplex tmp, f, acc
    cdef double scale = 0.0, mag, best
    cdef int i, j, k, p
    for i in range(81):
        mag = fabs(L[i].real) + fabs(L[i].imag)
        if mag > scale:
            scale = mag
    if scale == 0.0:
        return 1
    for i in range(81):
        Ls[i] = L[i] / scale
        A[i] = Ls[i]
    for j in range(9):
        A[0 * 9 + j] = 0.0
    A[0] = 1.0
    A[4] = 1.0
    A[8] = 1.0
    for i in range(9):
        b[i] = 0.0
    b[0] = 1.0
    # forward elimination with partial pivoting
    for k in range(9):
        best = 0.0
        p = k
        for i in range(k, 9):
            mag = fabs(A[i * 9 + k].real) + fabs(A[i * 9 + k].imag)
            if mag > best:
                best = mag
                p = i
        if best == 0.0:
            return 1
        if p != k:
            for j in range(9):
                tmp = A[k * 9 + j]
                A[k * 9 + j] = A[p * 9 + j]
                A[p * 9 + j] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        for i in range(k + 1, 9):
            f = A[i * 9 + k] / A[k * 9 + k]
            if f != 0.0:
                A[i * 9 + k] = 0.0
                for j in range(k + 1, 9):
                    A[i * 9 + j] -= f * A[k * 9 + j]
                b[i] -= f * b[k]
    # back substitution
    for k in range(8, -1, -1):
        acc = b[k]
        for j in range(k + 1, 9):
            acc -= A[k * 9 + j] * rho[j]
        rho[k] = acc / A[k * 9 + k]
    # residual against the unmodified (scaled) generator
    best = 0.0
    for i in range(9):
        acc = 0.0
        for j in range(9):
            acc += Ls[i * 9 + j] * rho[j]
        mag = sqrt(acc.real * acc.real + acc.imag * acc.imag)
        if mag > best:
            best = mag
    resid[0] = best
    return 0


def generator(rates, double delta_p, double delta_c, double rabi_p, double rabi_c):
    """9x9 generator as an ndarray (parity helper with the pure backend)."""
    cdef double g_rel10 = rates[0]
    cdef double g_rel21 = rates[1]
    cdef double g10 = rates[2]
    cdef double g21 = rates[3]
    cdef double g20 = rates[4]
    out = np.empty((9, 9), dtype=np.complex128)
    cdef dcomplex[:, ::1] mv = out
    _fill_generator(g_rel10, g_rel21, g10, g21, g20, delta_p, delta_c, rabi_p, rabi_c, &mv[0, 0])
    return out


def steady_rho(rates, double delta_p, double delta_c, double rabi_p, double rabi_c):
    """Steady state at one operating point: (rho 3x3, normalized residual)."""
    cdef double g_rel10 = rates[0]
    cdef double g_rel21 = rates[1]
    cdef double g10 = rates[2]
    cdef double g21 = rates[3]
    cdef double g20 = rates[4]
    cdef dcomplex L[81]
    cdef dcomplex x[9]
    cdef double resid = 0.0
    cdef int status
    with nogil:
        _fill_generator(g_rel10, g_rel21, g10, g21, g20, delta_p, delta_c, rabi_p, rabi_c, L)
        status = _steady_solve(L, x, &resid)
    if status:
        raise np.linalg.LinAlgError("singular steady-state system")
    rho = np.empty((3, 3), dtype=np.complex128)
    cdef dcomplex[:, ::1] mv = rho
    cdef int i, j
    for i in range(3):
        for j in range(3):
            mv[i, j] = x[3 * i + j]
    return rho, resid


def steady_rho10_batch(rates, cnp.ndarray[cnp.float64_t, ndim=2] jobs):
    """Steady-state rho[1,0] over (delta_p, delta_c, rabi_p, rabi_c) rows.

    Singular points yield nan/inf instead of raising.
    """
    cdef double g_rel10 = rates[0]
    cdef double g_rel21 = rates[1]
    cdef double g10 = rates[2]
    cdef double g21 = rates[3]
    cdef double g20 = rates[4]
    cdef Py_ssize_t k = jobs.shape[0], n
    rho10 = np.empty(k, dtype=np.complex128)
    resid = np.empty(k, dtype=np.float64)
    cdef dcomplex[::1] rv = rho10
    cdef double[::1] sv = resid
    cdef double[:, ::1] jv = np.ascontiguousarray(jobs)
    cdef dcomplex L[81]
    cdef dcomplex x[9]
    cdef double r
    cdef int status
    with nogil:
        for n in range(k):
            _fill_generator(g_rel10, g_rel21, g10, g21, g20,
                            jv[n, 0], jv[n, 1], jv[n, 2], jv[n, 3], L)
            status = _steady_solve(L, x, &r)
            if status:
                rv[n] = NAN
                sv[n] = INFINITY
            else:
                rv[n] = x[3]
                sv[n] = r
    return rho10, resid


# -- Dormand-Prince 5(4) -----------------------------------------------------

cdef double DP_C[7]
cdef double DP_A[7][6]
cdef double DP_B5[7]
cdef double DP_E[7]
DP_C = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
DP_A = [
    [0, 0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0],
    [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84],
]
DP_B5 = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0]
DP_E = [
    35.0 / 384 - 5179.0 / 57600,
    0.0,
    500.0 / 1113 - 7571.0 / 16695,
    125.0 / 192 - 393.0 / 640,
    -2187.0 / 6784 + 92097.0 / 339200,
    11.0 / 84 - 187.0 / 2100,
    -1.0 / 40,
]


cdef double _env_interp(double t, double[::1] kt, double[::1] kv) noexcept nogil:
    """Piecewise-linear interpolation with flat extrapolation."""
    cdef Py_ssize_t n = kt.shape[0], lo, hi, mid
    if n == 0:
        return 0.0
    if t <= kt[0]:
        return kv[0]
    if t >= kt[n - 1]:
        return kv[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if kt[mid] <= t:
            lo = mid
        else:
            hi = mid
    if kt[hi] == kt[lo]:
        return kv[hi]
    return kv[lo] + (kv[hi] - kv[lo]) * (t - kt[lo]) / (kt[hi] - kt[lo])


cdef void _rhs(dcomplex* l0, dcomplex* lc, double v, dcomplex* y, dcomplex* out) noexcept nogil:
    cdef int i, j
    cdef dcomplex acc
    for i in range(9):
        acc = 0.0
        for j in range(9):
            acc += (l0[i * 9 + j] + v * lc[i * 9 + j]) * y[j]
        out[i] = acc


def propagate(cnp.ndarray[cnp.complex128_t, ndim=2] l0_arr,
              cnp.ndarray[cnp.complex128_t, ndim=2] lc_arr,
              cnp.ndarray[cnp.float64_t, ndim=1] knots_t,
              cnp.ndarray[cnp.float64_t, ndim=1] knots_v,
              cnp.ndarray[cnp.complex128_t, ndim=1] y0,
              cnp.ndarray[cnp.float64_t, ndim=1] t_out,
              double rtol, double atol, long max_steps=1000000):
    """Adaptive propagation of y' = (l0 + v(t) lc) y through t_out."""
    cdef dcomplex l0[81]
    cdef dcomplex lc[81]
    cdef dcomplex y[9]
    cdef dcomplex ynew[9]
    cdef dcomplex ys[9]
    cdef dcomplex kst[7][9]
    cdef dcomplex errv, acc
    cdef double[::1] kt = np.ascontiguousarray(knots_t)
    cdef double[::1] kv = np.ascontiguousarray(knots_v)
    cdef double[::1] tv = np.ascontiguousarray(t_out)
    cdef dcomplex[:, ::1] l0v = np.ascontiguousarray(l0_arr)
    cdef dcomplex[:, ::1] lcv = np.ascontiguousarray(lc_arr)
    cdef dcomplex[::1] y0v = np.ascontiguousarray(y0)
    cdef Py_ssize_t n_out = tv.shape[0], i_out, i, j, s
    cdef double t, h, span, fmag, ymag, err, sc, factor, t_target, v
    cdef long steps = 0
    cdef int status = C_STATUS_OK
    cdef int hit

    out = np.empty((n_out, 9), dtype=np.complex128)
    cdef dcomplex[:, ::1] ov = out
    for i in range(9):
        for j in range(9):
            l0[i * 9 + j] = l0v[i, j]
            lc[i * 9 + j] = lcv[i, j]
    for i in range(9):
        y[i] = y0v[i]
        ov[0, i] = y[i]
    if n_out == 1:
        return out, STATUS_OK

    with nogil:
        t = tv[0]
        i_out = 1
        v = _env_interp(t, kt, kv)
        _rhs(l0, lc, v, y, kst[0])
        span = tv[n_out - 1] - tv[0]
        fmag = 0.0
        ymag = 0.0
        for i in range(9):
            sc = sqrt(kst[0][i].real * kst[0][i].real + kst[0][i].imag * kst[0][i].imag)
            if sc > fmag:
                fmag = sc
            sc = sqrt(y[i].real * y[i].real + y[i].imag * y[i].imag)
            if sc > ymag:
                ymag = sc
        if ymag < atol:
            ymag = atol
        if fmag > 0:
            h = 0.01 * ymag / fmag
            if h > span:
                h = span
        else:
            h = span
        if h < span * 1e-12:
            h = span * 1e-12

        while i_out < n_out:
            if steps >= max_steps:
                status = C_STATUS_STEP_FAILURE
                break
            steps += 1
            t_target = tv[i_out]
            hit = 0
            if h >= t_target - t:
                h = t_target - t
                hit = 1
            for s in range(1, 7):
                for i in range(9):
                    acc = 0.0
                    for j in range(s):
                        if DP_A[s][j] != 0.0:
                            acc += DP_A[s][j] * kst[j][i]
                    ys[i] = y[i] + h * acc
                v = _env_interp(t + DP_C[s] * h, kt, kv)
                _rhs(l0, lc, v, ys, kst[s])
            err = 0.0
            for i in range(9):
                acc = 0.0
                errv = 0.0
                for s in range(7):
                    if DP_B5[s] != 0.0:
                        acc += DP_B5[s] * kst[s][i]
                    if DP_E[s] != 0.0:
                        errv += DP_E[s] * kst[s][i]
                ynew[i] = y[i] + h * acc
                errv = h * errv
                sc = sqrt(y[i].real * y[i].real + y[i].imag * y[i].imag)
                fmag = sqrt(ynew[i].real * ynew[i].real + ynew[i].imag * ynew[i].imag)
                if fmag > sc:
                    sc = fmag
                sc = atol + rtol * sc
                err += (errv.real * errv.real + errv.imag * errv.imag) / (sc * sc)
            err = sqrt(err / 9.0)
            if err <= 1.0:
                for i in range(9):
                    y[i] = ynew[i]
                    kst[0][i] = kst[6][i]  # FSAL
                if hit:
                    t = t_target
                    for i in range(9):
                        ov[i_out, i] = y[i]
                    i_out += 1
                else:
                    t += h
            if err > 0.0:
                factor = 0.9 * err ** -0.2
            else:
                factor = 5.0
            if factor > 5.0:
                factor = 5.0
            if factor < 0.2:
                factor = 0.2
            h *= factor
            if h <= span * 1e-15:
                status = C_STATUS_STEP_FAILURE
                break
    return out, status

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the duality-map power iteration.

The matrices are tiny (a few dozen rows at most) but the iteration is
invoked tens of thousands of times inside bisections and restart sweeps,
so per-call overhead dominates. These loops avoid temporaries entirely.
"""

from libc.math cimport fabs, pow

import numpy as np


cdef double _pnorm(double* v, Py_ssize_t n, double p) noexcept nogil:
    cdef Py_ssize_t j
    cdef double m = 0.0, s = 0.0, a
    for j in range(n):
        a = fabs(v[j])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    for j in range(n):
        s += pow(fabs(v[j]) / m, p)
    return m * pow(s, 1.0 / p)


cdef inline double _psi(double t, double r) noexcept nogil:
    # |t|^(r-1) * sign(t), single-valued for r > 1
    if t > 0.0:
        return pow(t, r - 1.0)
    if t < 0.0:
        return -pow(-t, r - 1.0)
    return 0.0


cdef int _iterate_one(const double[:, ::1] A, double* x, double* y, double* z, double* d,
                      double p, double q, double tol, int maxiter,
                      double* out_val, long* out_iters, double* out_viol) noexcept nogil:
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], i, j
    cdef double prev = -1.0, val = 0.0, s, wn, move, viol = 0.0
    cdef int it, converged = 0
    cdef long steps = 0
    for it in range(maxiter):
        for i in range(m):
            s = 0.0
            for j in range(n):
                s += A[i, j] * x[j]
            y[i] = s
        val = _pnorm(y, m, p)
        if prev >= 0.0 and prev - val > viol:
            viol = prev - val
        prev = val
        if val == 0.0:
            converged = 1
            break
        for i in range(m):
            y[i] = _psi(y[i], p)
        for j in range(n):
            s = 0.0
            for i in range(m):
                s += A[i, j] * y[i]
            z[j] = _psi(s, q)
        wn = _pnorm(z, n, p)
        if wn == 0.0:
            # stationary point of the quotient: gradient vanished
            converged = 1
            break
        for j in range(n):
            z[j] = z[j] / wn
            d[j] = z[j] - x[j]
            x[j] = z[j]
        steps += 1
        move = _pnorm(d, n, p)
        if move < tol:
            converged = 1
            break
    # certified value: exact norm of the final image
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        y[i] = s
    out_val[0] = _pnorm(y, m, p)
    out_iters[0] = steps
    if viol > out_viol[0]:
        out_viol[0] = viol
    return converged


def multi_power_iterate(A, X, double p, double tol, int maxiter):
    """Run the duality-map power iteration from every column of X.

    Returns (values, Xout, iters, converged, mono_violation) where values[k]
    is the exact quotient at the final iterate of start k and mono_violation
    is the largest observed drop of the quotient along any iteration.
    """
    cdef const double[:, ::1] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Xm = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = Am.shape[0], n = Am.shape[1], K = Xm.shape[1], j, k
    cdef double q = p / (p - 1.0)

    values = np.empty(K, dtype=np.float64)
    Xout = np.empty((n, K), dtype=np.float64, order="F")
    iters = np.zeros(K, dtype=np.int64)
    conv = np.zeros(K, dtype=np.uint8)
    cdef double[::1] vals_m = values
    cdef double[::1, :] Xout_m = Xout
    cdef long[::1] iters_m = iters
    cdef unsigned char[::1] conv_m = conv

    work = np.empty(m + 3 * n, dtype=np.float64)
    cdef double[::1] w = work
    cdef double* y = &w[0]
    cdef double* z = &w[m]
    cdef double* d = &w[m + n]
    cdef double* x = &w[m + 2 * n]
    cdef double viol = 0.0
    cdef double val
    cdef long its

    with nogil:
        for k in range(K):
            for j in range(n):
                x[j] = Xm[j, k]
            its = 0
            conv_m[k] = <unsigned char> _iterate_one(Am, x, y, z, d, p, q, tol,
                                                     maxiter, &val, &its, &viol)
            vals_m[k] = val
            iters_m[k] = its
            for j in range(n):
                Xout_m[j, k] = x[j]

    return values, np.ascontiguousarray(Xout), iters, conv.astype(bool), viol


def power_iterate(A, x0, double p, double tol, int maxiter):
    """Single-start variant of multi_power_iterate."""
    X = np.asarray(x0, dtype=np.float64).reshape(-1, 1)
    values, Xout, iters, conv, viol = multi_power_iterate(A, X, p, tol, maxiter)
    return values[0], Xout[:, 0], int(iters[0]), bool(conv[0]), viol

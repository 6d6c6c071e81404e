# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Batched cyclic Jacobi diagonalization of small complex Hermitian matrices."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef int _jacobi_one(double* a, double* v, double* w, int n,
                     double tol, int max_sweeps) noexcept nogil:
    """Diagonalize one row-major interleaved (re, im) matrix in place.

    Returns the sweeps used, or -1 if the budget ran out.
    """
    cdef int p, q, k, sweep, ip, iq
    cdef double norm = 0.0, off, mag, app, aqq, theta, t, c, s
    cdef double pr, pi, xr, xi, yr, yi, scr, sci, ccr, cci
    cdef int converged = 0

    for k in range(n * n):
        norm += a[2 * k] * a[2 * k] + a[2 * k + 1] * a[2 * k + 1]
        v[2 * k] = 0.0
        v[2 * k + 1] = 0.0
    for k in range(n):
        v[2 * (k * n + k)] = 1.0
    norm = sqrt(norm)

    sweep = 0
    while sweep <= max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                ip = 2 * (p * n + q)
                off += a[ip] * a[ip] + a[ip + 1] * a[ip + 1]
        off = sqrt(2.0 * off)
        if off <= tol * norm:
            converged = 1
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                ip = 2 * (p * n + q)
                mag = hypot(a[ip], a[ip + 1])
                if mag == 0.0:
                    continue
                app = a[2 * (p * n + p)]
                aqq = a[2 * (q * n + q)]
                theta = (aqq - app) / (2.0 * mag)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                # phase e^{i phi} of a[p, q]
                pr = a[ip] / mag
                pi = a[ip + 1] / mag
                # s * conj(ph) and c * conj(ph)
                scr = s * pr
                sci = -s * pi
                ccr = c * pr
                cci = -c * pi
                # A <- A U and V <- V U (columns p, q)
                for k in range(n):
                    ip = 2 * (k * n + p)
                    iq = 2 * (k * n + q)
                    xr = a[ip]; xi = a[ip + 1]; yr = a[iq]; yi = a[iq + 1]
                    a[ip] = c * xr - (scr * yr - sci * yi)
                    a[ip + 1] = c * xi - (scr * yi + sci * yr)
                    a[iq] = s * xr + (ccr * yr - cci * yi)
                    a[iq + 1] = s * xi + (ccr * yi + cci * yr)
                    xr = v[ip]; xi = v[ip + 1]; yr = v[iq]; yi = v[iq + 1]
                    v[ip] = c * xr - (scr * yr - sci * yi)
                    v[ip + 1] = c * xi - (scr * yi + sci * yr)
                    v[iq] = s * xr + (ccr * yr - cci * yi)
                    v[iq + 1] = s * xi + (ccr * yi + cci * yr)
                # A <- U^H A (rows p, q); uses s*ph and c*ph
                for k in range(n):
                    ip = 2 * (p * n + k)
                    iq = 2 * (q * n + k)
                    xr = a[ip]; xi = a[ip + 1]; yr = a[iq]; yi = a[iq + 1]
                    a[ip] = c * xr - (scr * yr + sci * yi)
                    a[ip + 1] = c * xi - (scr * yi - sci * yr)
                    a[iq] = s * xr + (ccr * yr + cci * yi)
                    a[iq + 1] = s * xi + (ccr * yi - cci * yr)
                ip = 2 * (p * n + q)
                iq = 2 * (q * n + p)
                a[ip] = 0.0; a[ip + 1] = 0.0
                a[iq] = 0.0; a[iq + 1] = 0.0
                ip = 2 * (p * n + p)
                iq = 2 * (q * n + q)
                a[ip] = app - t * mag; a[ip + 1] = 0.0
                a[iq] = aqq + t * mag; a[iq + 1] = 0.0
        sweep += 1

    for p in range(n):
        w[p] = a[2 * (p * n + p)]
    if converged:
        return sweep
    return -1


def jacobi_batch(H, double tol=1e-13, int max_sweeps=64, int num_threads=0):
    """Eigen-decompose a stack of Hermitian matrices.

    Parameters
    ----------
    H : (N, n, n) complex array
    tol : relative off-diagonal Frobenius tolerance
    max_sweeps : sweep budget per matrix
    num_threads : OpenMP threads, 0 lets the runtime choose

    Returns
    -------
    w : (N, n) unsorted eigenvalues
    V : (N, n, n) eigenvectors as columns
    sweeps : (N,) int, -1 where the budget was exhausted
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] A = np.array(H, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t N = A.shape[0]
    cdef int n = A.shape[1]
    V_arr = np.empty((N, n, n), dtype=np.complex128)
    w_arr = np.empty((N, n), dtype=np.float64)
    sweeps_arr = np.empty(N, dtype=np.intc)
    cdef double[:, ::1] a_view = A.view(np.float64).reshape(N, 2 * n * n)
    cdef double[:, ::1] v_view = V_arr.view(np.float64).reshape(N, 2 * n * n)
    cdef double[:, ::1] w_view = w_arr
    cdef int[::1] s_view = sweeps_arr
    cdef Py_ssize_t i
    if N == 0:
        return w_arr, V_arr, sweeps_arr
    if num_threads <= 0:
        for i in prange(N, nogil=True, schedule="static"):
            s_view[i] = _jacobi_one(&a_view[i, 0], &v_view[i, 0], &w_view[i, 0], n, tol, max_sweeps)
    else:
        for i in prange(N, nogil=True, schedule="static", num_threads=num_threads):
            s_view[i] = _jacobi_one(&a_view[i, 0], &v_view[i, 0], &w_view[i, 0], n, tol, max_sweeps)
    return w_arr, V_arr, sweeps_arr

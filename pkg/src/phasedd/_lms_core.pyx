# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LMS inner loop; see phasedd._lms_py for the reference version."""
import numpy as np

from libc.math cimport floor, fabs, sqrt

cdef double SCALE = sqrt(20.0)


cdef inline double _odd_level(double v) nogil:
    cdef double r = 2.0 * floor(v / 2.0) + 1.0
    if r > 5.0:
        r = 5.0
    elif r < -5.0:
        r = -5.0
    return r


cdef inline double complex _decide(double complex y) nogil:
    cdef double zr = y.real * SCALE
    cdef double zi = y.imag * SCALE
    cdef double xr = _odd_level(zr)
    cdef double xi = _odd_level(zi)
    if fabs(xr) == 5.0 and fabs(xi) == 5.0:
        if fabs(zr) > fabs(zi):
            xi = 3.0 if xi > 0 else -3.0
        else:
            xr = 3.0 if xr > 0 else -3.0
    return (xr + 1j * xi) / SCALE


def lms_run(const double complex[:, ::1] x, const double complex[::1] d,
            double complex[:, ::1] w, double mu, Py_ssize_t n_train, bint track,
            Py_ssize_t start, Py_ssize_t stride, Py_ssize_t n_out):
    """Run the multi-branch LMS in place on ``w``; returns (y, err)."""
    cdef Py_ssize_t B = x.shape[0], N = x.shape[1], T = w.shape[1]
    cdef Py_ssize_t h = T // 2
    cdef Py_ssize_t k, b, t, c, idx
    cdef double complex acc, e, ce, xv, wv
    y_arr = np.zeros(n_out, dtype=np.complex128)
    err_arr = np.zeros(n_out, dtype=np.complex128)
    cdef double complex[::1] y = y_arr
    cdef double complex[::1] err = err_arr
    with nogil:
        for k in range(n_out):
            c = start + k * stride
            acc = 0
            for b in range(B):
                for t in range(T):
                    idx = (c + h - t) % N
                    if idx < 0:
                        idx = idx + N
                    wv = w[b, t]
                    acc = acc + (wv.real - 1j * wv.imag) * x[b, idx]
            y[k] = acc
            if k < n_train:
                e = d[k] - acc
            else:
                e = _decide(acc) - acc
            err[k] = e
            if k >= n_train and not track:
                continue
            ce = mu * (e.real - 1j * e.imag)
            for b in range(B):
                for t in range(T):
                    idx = (c + h - t) % N
                    if idx < 0:
                        idx = idx + N
                    w[b, t] = w[b, t] + x[b, idx] * ce
    return y_arr, err_arr

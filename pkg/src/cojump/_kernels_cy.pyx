# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transform kernels.

Same contract as ``_kernels_py``: a circular maximal-overlap pyramid and
the fused subgrid cross-product accumulator used by the two-scale
estimators.  Per-element tap order matches the NumPy fallback; reductions
accumulate in extended precision.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True


cdef Py_ssize_t _usable_levels(Py_ssize_t n, Py_ssize_t width, Py_ssize_t cap) nogil:
    cdef Py_ssize_t j = 0
    cdef Py_ssize_t wj
    while j < cap:
        wj = ((<Py_ssize_t> 1) << j) * (width - 1) + 1
        if wj > n or ((<Py_ssize_t> 1) << (j + 1)) > n:
            break
        j += 1
    return j


def max_usable_levels(n, width, cap):
    """Deepest transform level allowed for ``n`` samples (0 when even
    level 1 does not fit)."""
    return int(_usable_levels(n, width, cap))


cdef void _pyramid(double* vin, double* vout, double* w,
                   const double* h, const double* g,
                   Py_ssize_t n, Py_ssize_t width, Py_ssize_t step) nogil:
    # One pyramid stage: fill w (detail) and vout (next smooth) from vin.
    cdef Py_ssize_t t, tap, idx
    cdef double accw, accv, xv
    for t in range(n):
        accw = 0.0
        accv = 0.0
        idx = t
        for tap in range(width):
            xv = vin[idx]
            accw = accw + h[tap] * xv
            accv = accv + g[tap] * xv
            idx -= step
            if idx < 0:
                idx += n
        w[t] = accw
        vout[t] = accv


def modwt_forward(object x_in, object h_in, object g_in, int levels):
    """Circular maximal-overlap pyramid; see the NumPy twin for the contract."""
    cdef cnp.ndarray[double, ndim=1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t width = h.shape[0]
    cdef cnp.ndarray[double, ndim=2] details = np.empty((levels, n), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] smooth = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] buf_a = x.copy()
    cdef cnp.ndarray[double, ndim=1] buf_b = np.empty(n, dtype=np.float64)
    cdef double* vin = <double*> buf_a.data
    cdef double* vout = <double*> buf_b.data
    cdef double* tmp
    cdef double* hp = <double*> h.data
    cdef double* gp = <double*> g.data
    cdef double* wp
    cdef double* sm = <double*> smooth.data
    cdef Py_ssize_t j, t, stride = 1
    for j in range(levels):
        wp = &details[j, 0]
        with nogil:
            _pyramid(vin, vout, wp, hp, gp, n, width, stride % n)
        tmp = vin
        vin = vout
        vout = tmp
        stride <<= 1
    for t in range(n):
        sm[t] = vin[t]
    return details, smooth


def subsampled_scale_sums(object r1_in, object r2_in, Py_ssize_t n_grids,
                          int level_cap, object h_in, object g_in):
    """Average per-scale cross-products over sparse subgrids; see the
    NumPy twin for the slot layout."""
    cdef cnp.ndarray[double, ndim=1] r1 = np.ascontiguousarray(r1_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] r2 = np.ascontiguousarray(r2_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef Py_ssize_t n = r1.shape[0]
    cdef Py_ssize_t width = h.shape[0]
    cdef cnp.ndarray[double, ndim=1] sums = np.zeros(level_cap + 1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cum1 = np.empty(n + 1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cum2 = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t mmax = n // n_grids + 1
    cdef cnp.ndarray[double, ndim=2] scratch = np.empty((6, mmax), dtype=np.float64)
    cdef double* c1 = <double*> cum1.data
    cdef double* c2 = <double*> cum2.data
    cdef double* sp = <double*> sums.data
    cdef double* hp = <double*> h.data
    cdef double* gp = <double*> g.data
    cdef double* a1
    cdef double* a2
    cdef double* b1
    cdef double* b2
    cdef double* w1
    cdef double* w2
    cdef double* tmp
    cdef Py_ssize_t off, k, m, depth, j, t, stride
    cdef long double acc
    cdef double* base = <double*> scratch.data

    with nogil:
        c1[0] = 0.0
        c2[0] = 0.0
        for k in range(n):
            c1[k + 1] = c1[k] + (<double*> r1.data)[k]
            c2[k + 1] = c2[k] + (<double*> r2.data)[k]
        for off in range(n_grids):
            m = (n - off) // n_grids
            if m < 1:
                continue
            a1 = base
            a2 = base + mmax
            b1 = base + 2 * mmax
            b2 = base + 3 * mmax
            w1 = base + 4 * mmax
            w2 = base + 5 * mmax
            for k in range(m):
                a1[k] = c1[off + (k + 1) * n_grids] - c1[off + k * n_grids]
                a2[k] = c2[off + (k + 1) * n_grids] - c2[off + k * n_grids]
            depth = _usable_levels(m, width, level_cap)
            if depth == 0:
                acc = 0.0
                for k in range(m):
                    acc += (<long double> a1[k]) * a2[k]
                sp[level_cap] += <double> acc
                continue
            stride = 1
            for j in range(depth):
                _pyramid(a1, b1, w1, hp, gp, m, width, stride % m)
                _pyramid(a2, b2, w2, hp, gp, m, width, stride % m)
                acc = 0.0
                for t in range(m):
                    acc += (<long double> w1[t]) * w2[t]
                sp[j] += <double> acc
                tmp = a1; a1 = b1; b1 = tmp
                tmp = a2; a2 = b2; b2 = tmp
                stride <<= 1
            acc = 0.0
            for t in range(m):
                acc += (<long double> a1[t]) * a2[t]
            sp[level_cap] += <double> acc
        for j in range(level_cap + 1):
            sp[j] /= n_grids
    return sums

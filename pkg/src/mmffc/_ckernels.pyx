# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics mirror ``_pykernels`` bit for bit."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log2, fabs
from libc.stdlib cimport malloc, free, qsort
from libc.string cimport memcpy

cnp.import_array()

cdef double SATURATION = 1e150
cdef double DIV_EPS = 1e-6
cdef unsigned long long SNAP_HALF = 1ULL << 19
cdef unsigned long long SNAP_MASK = ~((1ULL << 20) - 1)


cdef inline double _snap(double x) noexcept nogil:
    cdef unsigned long long u
    if x == 0.0:
        return 0.0
    memcpy(&u, &x, 8)
    u = (u + SNAP_HALF) & SNAP_MASK
    memcpy(&x, &u, 8)
    return x


cdef int _cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef void _eval(const long long[::1] code, const double[:, ::1] X,
                double* out, double* stack) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], m = code.shape[0], i, k
    cdef int sp
    cdef long long c
    cdef double a, b, r
    for i in range(n):
        sp = 0
        for k in range(m):
            c = code[k]
            if c >= 0:
                stack[sp] = X[i, c]
                sp += 1
                continue
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if c == -1:
                r = a + b
            elif c == -2:
                r = a - b
            elif c == -3:
                r = a * b
            else:
                if fabs(b) < DIV_EPS:
                    r = a
                else:
                    r = a / b
            if r > SATURATION:
                r = SATURATION
            elif r < -SATURATION:
                r = -SATURATION
            stack[sp - 1] = r
        out[i] = stack[0]


cdef Py_ssize_t _lower_bound(const double* arr, Py_ssize_t n, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _bin(const double* raw, Py_ssize_t n, int n_bins,
                     long long* bins, double* work) noexcept nogil:
    # work must hold 3*n + 2*n_bins + 2 doubles; returns bin count
    cdef double* values = work
    cdef double* s = work + n
    cdef double* cuts = work + 2 * n
    cdef Py_ssize_t i, k, d, ncut, nb
    cdef long long* remap
    for i in range(n):
        values[i] = _snap(raw[i])
    for i in range(n):
        s[i] = values[i]
    qsort(s, n, sizeof(double), _cmp_double)
    d = 0
    for i in range(n):
        if i == 0 or s[i] != s[i - 1]:
            s[d] = s[i]
            d += 1
    if d < n_bins:
        for i in range(n):
            bins[i] = _lower_bound(s, d, values[i])
        return d
    # cut points need the full sorted vector again
    for i in range(n):
        s[i] = values[i]
    qsort(s, n, sizeof(double), _cmp_double)
    ncut = 0
    for k in range(1, n_bins):
        i = (k * (n - 1)) // n_bins
        if ncut == 0 or s[i] != cuts[ncut - 1]:
            cuts[ncut] = s[i]
            ncut += 1
    remap = <long long*>(cuts + ncut)
    for k in range(ncut + 1):
        remap[k] = 0
    for i in range(n):
        bins[i] = _lower_bound(cuts, ncut, values[i])
        remap[bins[i]] = 1
    nb = 0
    for k in range(ncut + 1):
        if remap[k]:
            remap[k] = nb
            nb += 1
    for i in range(n):
        bins[i] = remap[bins[i]]
    return nb


cdef double _entropy(const long long* counts, Py_ssize_t m, Py_ssize_t stride,
                     long long total) noexcept nogil:
    cdef double h = 0.0, p
    cdef Py_ssize_t k
    for k in range(m):
        if counts[k * stride] > 0:
            p = <double>counts[k * stride] / <double>total
            h -= p * log2(p)
    return h


cdef double _igr(const long long* bins, Py_ssize_t n, Py_ssize_t n_bins,
                 const long long[::1] labels, Py_ssize_t n_classes) noexcept nogil:
    cdef long long* joint = <long long*>malloc((n_bins * n_classes + n_bins + n_classes) * sizeof(long long))
    cdef long long* bin_counts = joint + n_bins * n_classes
    cdef long long* class_counts = bin_counts + n_bins
    cdef Py_ssize_t i, j
    cdef double h_y, h_f, h_y_f, gain
    for i in range(n_bins * n_classes + n_bins + n_classes):
        joint[i] = 0
    for i in range(n):
        joint[bins[i] * n_classes + labels[i]] += 1
        bin_counts[bins[i]] += 1
        class_counts[labels[i]] += 1
    h_y = _entropy(class_counts, n_classes, 1, n)
    h_f = _entropy(bin_counts, n_bins, 1, n)
    if h_f == 0.0:
        free(joint)
        return 0.0
    h_y_f = 0.0
    for j in range(n_bins):
        if bin_counts[j] > 0:
            h_y_f += (<double>bin_counts[j] / <double>n) * _entropy(joint + j * n_classes, n_classes, 1, bin_counts[j])
    free(joint)
    gain = h_y - h_y_f
    if gain < 0.0:
        gain = 0.0
    return gain / h_f


def eval_postfix(code, X):
    cdef const long long[::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef double* stack = <double*>malloc((c.shape[0] + 1) * sizeof(double))
    with nogil:
        _eval(c, x, &o[0] if x.shape[0] > 0 else NULL, stack)
    free(stack)
    return out


def equal_frequency_bins(values, int n_bins):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    bins = np.empty(n, dtype=np.int64)
    cdef long long[::1] b = bins
    cdef double* work = <double*>malloc((3 * n + 2 * n_bins + 2) * sizeof(double))
    cdef Py_ssize_t nb
    with nogil:
        nb = _bin(&v[0], n, n_bins, &b[0], work)
    free(work)
    return bins, int(nb)


def igr_binned(bins, n_bins, labels, int n_classes):
    cdef const long long[::1] b = np.ascontiguousarray(bins, dtype=np.int64)
    cdef const long long[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t nb = n_bins
    cdef double r
    with nogil:
        r = _igr(&b[0], b.shape[0], nb, y, n_classes)
    return r


def igr_values(values, labels, int n_classes, int n_bins):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = v.shape[0], nb
    cdef long long* bins = <long long*>malloc(n * sizeof(long long))
    cdef double* work = <double*>malloc((3 * n + 2 * n_bins + 2) * sizeof(double))
    cdef double r
    with nogil:
        nb = _bin(&v[0], n, n_bins, bins, work)
        r = _igr(bins, n, nb, y, n_classes)
    free(bins)
    free(work)
    return r


def program_igr(code, X, labels, int n_classes, int n_bins):
    cdef const long long[::1] c = np.ascontiguousarray(code, dtype=np.int64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long long[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], nb
    cdef double* vals = <double*>malloc(n * sizeof(double))
    cdef double* stack = <double*>malloc((c.shape[0] + 1) * sizeof(double))
    cdef long long* bins = <long long*>malloc(n * sizeof(long long))
    cdef double* work = <double*>malloc((3 * n + 2 * n_bins + 2) * sizeof(double))
    cdef double r
    with nogil:
        _eval(c, x, vals, stack)
        nb = _bin(vals, n, n_bins, bins, work)
        r = _igr(bins, n, nb, y, n_classes)
    free(vals)
    free(stack)
    free(bins)
    free(work)
    return r


def hamming_rows(keys, ref):
    cdef const long long[:, ::1] k = np.ascontiguousarray(keys, dtype=np.int64)
    cdef const long long[::1] r = np.ascontiguousarray(ref, dtype=np.int64)
    out = np.zeros(k.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(k.shape[0]):
            for j in range(k.shape[1]):
                if k[i, j] != r[j]:
                    o[i] += 1
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled valid-mode correlation kernel.

Filters are processed four at a time so every image value loaded feeds four
accumulations; the inner loop runs over contiguous output columns with scalar
coefficients, which vectorizes without reassociating any sums, so results are
bit-stable across runs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def correlate_bank(double[:, ::1] img, double[:, ::1] filters, int side):
    """Correlate a bank of flattened side*side filters with img (valid mode).

    Returns an array of shape (n_filters, H - side + 1, W - side + 1).
    """
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t n_f = filters.shape[0]
    cdef Py_ssize_t m = side
    cdef Py_ssize_t out_h = h - m + 1
    cdef Py_ssize_t out_w = w - m + 1

    out_arr = np.zeros((n_f, out_h, out_w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr

    cdef Py_ssize_t f, i, a, b, j, p
    cdef Py_ssize_t blocks = n_f - n_f % 4
    cdef double c0, c1, c2, c3
    cdef double* r0
    cdef double* r1
    cdef double* r2
    cdef double* r3
    cdef const double* src

    with nogil:
        for f in range(0, blocks, 4):
            for i in range(out_h):
                r0 = &out[f, i, 0]
                r1 = &out[f + 1, i, 0]
                r2 = &out[f + 2, i, 0]
                r3 = &out[f + 3, i, 0]
                for a in range(m):
                    src = &img[i + a, 0]
                    for b in range(m):
                        p = a * m + b
                        c0 = filters[f, p]
                        c1 = filters[f + 1, p]
                        c2 = filters[f + 2, p]
                        c3 = filters[f + 3, p]
                        for j in range(out_w):
                            r0[j] += c0 * src[j + b]
                            r1[j] += c1 * src[j + b]
                            r2[j] += c2 * src[j + b]
                            r3[j] += c3 * src[j + b]
        for f in range(blocks, n_f):
            for i in range(out_h):
                r0 = &out[f, i, 0]
                for a in range(m):
                    src = &img[i + a, 0]
                    for b in range(m):
                        c0 = filters[f, a * m + b]
                        for j in range(out_w):
                            r0[j] += c0 * src[j + b]
    return out_arr

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: edit distance and the fused LSTM pointwise step."""

from cython cimport floating
from libc.math cimport tanh, tanhf
from libc.stdlib cimport malloc, free


def levenshtein(str a, str b):
    cdef Py_ssize_t n, m, i, j
    cdef Py_ssize_t *prev
    cdef Py_ssize_t *cur
    cdef Py_ssize_t *tmp
    cdef Py_ssize_t best, cand
    cdef Py_UCS4 ca
    if len(a) < len(b):
        a, b = b, a
    n = len(a)
    m = len(b)
    if m == 0:
        return n
    prev = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cur = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(m + 1):
            prev[j] = j
        for i in range(1, n + 1):
            ca = a[i - 1]
            cur[0] = i
            for j in range(1, m + 1):
                best = prev[j - 1] + (0 if ca == b[j - 1] else 1)
                cand = prev[j] + 1
                if cand < best:
                    best = cand
                cand = cur[j - 1] + 1
                if cand < best:
                    best = cand
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[m]
    finally:
        free(prev)
        free(cur)


cdef inline void _sigmoid_row(floating *out, const floating *x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    if floating is float:
        for k in range(n):
            out[k] = 0.5 * (1.0 + tanhf(0.5 * x[k]))
    else:
        for k in range(n):
            out[k] = 0.5 * (1.0 + tanh(0.5 * x[k]))


cdef inline void _tanh_row(floating *out, const floating *x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    if floating is float:
        for k in range(n):
            out[k] = tanhf(x[k])
    else:
        for k in range(n):
            out[k] = tanh(x[k])


def lstm_forward_pointwise(floating[:, ::1] z, floating[:, ::1] c_prev,
                           floating[:, ::1] gates, floating[:, ::1] c,
                           floating[:, ::1] tanh_c, floating[:, ::1] h):
    cdef Py_ssize_t B = c.shape[0], n = c.shape[1], b, k
    cdef floating *zr
    cdef floating *gr
    cdef floating *cr
    cdef floating *cp
    cdef floating *tr
    cdef floating *hr
    with nogil:
        for b in range(B):
            zr = &z[b, 0]
            gr = &gates[b, 0]
            cr = &c[b, 0]
            cp = &c_prev[b, 0]
            tr = &tanh_c[b, 0]
            hr = &h[b, 0]
            _sigmoid_row(gr, zr, 3 * n)
            _tanh_row(gr + 3 * n, zr + 3 * n, n)
            for k in range(n):
                cr[k] = gr[n + k] * cp[k] + gr[k] * gr[3 * n + k]
            _tanh_row(tr, cr, n)
            for k in range(n):
                hr[k] = gr[2 * n + k] * tr[k]


def lstm_backward_pointwise(floating[:, ::1] dh, floating[:, ::1] dc,
                            floating[:, ::1] gates, floating[:, ::1] c_prev,
                            floating[:, ::1] tanh_c, floating[:, ::1] dz,
                            floating[:, ::1] dc_prev):
    cdef Py_ssize_t B = dh.shape[0], n = dh.shape[1], b, k
    cdef floating gi, gf, go, gg, tc, dct, dhv
    cdef floating *gr
    cdef floating *dzr
    cdef floating *dhr
    cdef floating *dcr
    cdef floating *cp
    cdef floating *tr
    cdef floating *dcp
    with nogil:
        for b in range(B):
            gr = &gates[b, 0]
            dzr = &dz[b, 0]
            dhr = &dh[b, 0]
            dcr = &dc[b, 0]
            cp = &c_prev[b, 0]
            tr = &tanh_c[b, 0]
            dcp = &dc_prev[b, 0]
            for k in range(n):
                gi = gr[k]
                gf = gr[n + k]
                go = gr[2 * n + k]
                gg = gr[3 * n + k]
                tc = tr[k]
                dhv = dhr[k]
                dct = dcr[k] + dhv * go * (1 - tc * tc)
                dzr[k] = dct * gg * gi * (1 - gi)
                dzr[n + k] = dct * cp[k] * gf * (1 - gf)
                dzr[2 * n + k] = dhv * tc * go * (1 - go)
                dzr[3 * n + k] = dct * gi * (1 - gg * gg)
                dcp[k] = dct * gf


cdef extern from "xmmintrin.h":
    unsigned int _mm_getcsr() nogil
    void _mm_setcsr(unsigned int) nogil

DEF _FTZ_DAZ = 0x8040


def set_flush_denormal(bint enable):
    """Toggle flush-to-zero/denormals-are-zero for the calling thread; returns the old setting."""
    cdef unsigned int csr = _mm_getcsr()
    old = (csr & _FTZ_DAZ) == _FTZ_DAZ
    if enable:
        _mm_setcsr(csr | _FTZ_DAZ)
    else:
        _mm_setcsr(csr & ~_FTZ_DAZ)
    return old

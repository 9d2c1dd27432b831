# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled potential evaluation kernels (same contract as _kernels_py)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def vertex_logf(coef, eta, gamma):
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], K = c.shape[1]
    cdef Py_ssize_t nv = (<Py_ssize_t>1) << n
    cdef Py_ssize_t full = nv - 1
    cdef Py_ssize_t v, k, j, prev, low
    cdef double m, tot, eb, x

    top_arr = np.empty(K)
    emin_arr = np.empty(K)
    cdef double[::1] top = top_arr
    cdef double[::1] emin = emin_arr
    for k in range(K):
        m = c[0, k]
        for j in range(1, n):
            if c[j, k] > m:
                m = c[j, k]
        top[k] = m
        emin[k] = exp(-e[k])

    scaled_arr = np.empty((n, K))
    cdef double[:, ::1] sc = scaled_arr
    for j in range(n):
        for k in range(K):
            sc[j, k] = exp(c[j, k] - top[k])

    # subset sums over the bit pattern of v, built from v with its lowest bit cleared
    S_arr = np.zeros((nv, K))
    s_arr = np.zeros(nv)
    cdef double[:, ::1] S = S_arr
    cdef double[::1] s = s_arr
    for v in range(1, nv):
        prev = v & (v - 1)
        low = 0
        while not ((v >> low) & 1):
            low += 1
        s[v] = s[prev] + g[low]
        for k in range(K):
            S[v, k] = S[prev, k] + sc[low, k]

    logf_arr = np.empty(nv)
    etabar_arr = np.empty(nv)
    cdef double[::1] logf = logf_arr
    cdef double[::1] etabar = etabar_arr
    terms_arr = np.empty(K)
    cdef double[::1] terms = terms_arr
    for v in range(nv):
        m = -1e308
        for k in range(K):
            x = s[v] * e[k] + top[k] + log(S[full ^ v, k] + emin[k] * S[v, k])
            terms[k] = x
            if x > m:
                m = x
        for k in range(K):
            terms[k] = exp(terms[k] - m)
        tot = 0.0
        eb = 0.0
        for k in range(K):
            tot += terms[k]
            eb += terms[k] * e[k]
        logf[v] = m + log(tot)
        etabar[v] = eb / tot
    return logf_arr, etabar_arr


def rows_logf(learner_loss, expert_loss, coef, eta):
    cdef const double[::1] ll = np.ascontiguousarray(learner_loss, dtype=np.float64)
    cdef const double[:, ::1] el = np.ascontiguousarray(expert_loss, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t nr = el.shape[0], n = c.shape[0], K = c.shape[1]
    cdef Py_ssize_t r, j, k, i, nk = n * K
    cdef double m, d, tot, eb

    logf_arr = np.empty(nr)
    etabar_arr = np.empty(nr)
    cdef double[::1] logf = logf_arr
    cdef double[::1] etabar = etabar_arr
    # flat (n*K) scratch so the exp loop is a straight vectorizable pass
    buf_arr = np.empty(nk)
    etak_arr = np.tile(np.asarray(e), n)
    cdef double[::1] buf = buf_arr
    cdef double[::1] etak = etak_arr
    for r in range(nr):
        for j in range(n):
            d = ll[r] - el[r, j]
            for k in range(K):
                buf[j * K + k] = c[j, k] + e[k] * d
        m = buf[0]
        for i in range(1, nk):
            if buf[i] > m:
                m = buf[i]
        for i in range(nk):
            buf[i] = exp(buf[i] - m)
        tot = 0.0
        eb = 0.0
        for i in range(nk):
            tot += buf[i]
            eb += buf[i] * etak[i]
        logf[r] = m + log(tot)
        etabar[r] = eb / tot
    return logf_arr, etabar_arr

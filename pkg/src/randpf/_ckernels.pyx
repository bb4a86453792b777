# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Signatures and update order match the numpy versions; the two backends agree
to rounding error.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs

cnp.import_array()

ctypedef double complex cplx


cdef inline int _parity(long long v) nogil:
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return <int>(v & 1)


cdef void _rotate(cplx[:, ::1] st, long long x, long long z, int ny, double theta) nogil:
    cdef Py_ssize_t d = st.shape[0], k = st.shape[1]
    cdef Py_ssize_t b, c, j
    cdef double co = cos(theta), si = sin(theta)
    cdef cplx iy, fb, fc, ub, uc, mi
    cdef cplx[4] ipow
    ipow[0] = 1.0
    ipow[1] = 1j
    ipow[2] = -1.0
    ipow[3] = -1j
    iy = ipow[ny & 3]
    mi = -1j * si
    if x == 0:
        for b in range(d):
            fb = co + mi * iy * (1.0 - 2.0 * _parity(b & z))
            for j in range(k):
                st[b, j] = fb * st[b, j]
        return
    for b in range(d):
        c = b ^ x
        if c < b:
            continue
        # phase attached to the source index: (P psi)[b] = phase(b) * psi[b ^ x]
        fb = mi * iy * (1.0 - 2.0 * _parity(c & z))
        fc = mi * iy * (1.0 - 2.0 * _parity(b & z))
        for j in range(k):
            ub = st[b, j]
            uc = st[c, j]
            st[b, j] = co * ub + fb * uc
            st[c, j] = co * uc + fc * ub


def apply_pauli_steps(state, xmasks, zmasks, nys, thetas):
    d = state.shape[0]
    view = state.reshape(d, -1)
    if not view.flags.c_contiguous:
        raise ValueError("state must be C-contiguous")
    cdef cplx[:, ::1] st = view
    cdef const long long[::1] xs = np.ascontiguousarray(xmasks, dtype=np.int64)
    cdef const long long[::1] zs = np.ascontiguousarray(zmasks, dtype=np.int64)
    cdef const long long[::1] ys = np.ascontiguousarray(nys, dtype=np.int64)
    cdef const double[::1] th = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef Py_ssize_t i, n = th.shape[0]
    with nogil:
        for i in range(n):
            _rotate(st, xs[i], zs[i], <int>(ys[i] & 3), th[i])
    return state


def fwht(vec):
    cdef double[::1] a = vec
    cdef Py_ssize_t n = a.shape[0], h = 1, i, j
    cdef double u, v
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    with nogil:
        while h < n:
            i = 0
            while i < n:
                for j in range(i, i + h):
                    u = a[j]
                    v = a[j + h]
                    a[j] = u + v
                    a[j + h] = u - v
                i += 2 * h
            h *= 2
    return vec


cdef double _offdiag_norm(double[:, ::1] a, Py_ssize_t d) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(d):
        for j in range(d):
            if i != j:
                acc += a[i, 2 * j] * a[i, 2 * j] + a[i, 2 * j + 1] * a[i, 2 * j + 1]
    return sqrt(acc)


def jacobi_eigh(a, schedule, double tol, int max_sweeps, bint vectors=True):
    # a is viewed as (d, 2d) doubles: a[i, 2j] + 1j*a[i, 2j+1] == a_complex[i, j]
    cdef Py_ssize_t d = a.shape[0]
    cdef double[:, ::1] A = a.view(np.float64)
    v = np.eye(d, dtype=np.complex128) if vectors else np.zeros((1, 1), dtype=np.complex128)
    cdef double[:, ::1] V = v.view(np.float64)
    cdef const long long[:, :, ::1] sched = np.ascontiguousarray(schedule, dtype=np.int64)
    cdef Py_ssize_t nrounds = sched.shape[0], npairs = sched.shape[1]
    cdef Py_ssize_t r, k, i, p, q
    cdef double scale = 0.0, threshold, mag, app, aqq, tau, t, c, s
    cdef double er, ei, pr, pi, qr, qi, nr, ni, mr, mi
    cdef double *rp
    cdef double *rq
    cdef double *ri
    cdef double *base
    cdef double *vb
    cdef int sweeps = 0
    for i in range(d):
        for k in range(2 * d):
            scale += A[i, k] * A[i, k]
    threshold = tol * sqrt(scale)
    with nogil:
        while _offdiag_norm(A, d) > threshold:
            if sweeps == max_sweeps:
                sweeps = max_sweeps + 1
                break
            sweeps += 1
            for r in range(nrounds):
                for k in range(npairs):
                    p = sched[r, k, 0]
                    q = sched[r, k, 1]
                    if p >= d or q >= d:
                        continue
                    er = A[p, 2 * q]
                    ei = A[p, 2 * q + 1]
                    mag = sqrt(er * er + ei * ei)
                    if not mag > 1e-300:
                        continue
                    er = er / mag
                    ei = ei / mag
                    app = A[p, 2 * p]
                    aqq = A[q, 2 * q]
                    tau = (aqq - app) / (2.0 * mag)
                    t = (1.0 if tau >= 0.0 else -1.0) / (fabs(tau) + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    # rows p, q: row_p' = c row_p - s e row_q ; row_q' = s row_p + c e row_q
                    # columns follow from hermiticity of the rotated matrix
                    rp = &A[p, 0]
                    rq = &A[q, 0]
                    base = &A[0, 0]
                    for i in range(d):
                        if i == p or i == q:
                            continue
                        pr = rp[2 * i]
                        pi = rp[2 * i + 1]
                        qr = rq[2 * i]
                        qi = rq[2 * i + 1]
                        mr = er * qr - ei * qi
                        mi = er * qi + ei * qr
                        nr = c * pr - s * mr
                        ni = c * pi - s * mi
                        rp[2 * i] = nr
                        rp[2 * i + 1] = ni
                        ri = base + 2 * d * i
                        ri[2 * p] = nr
                        ri[2 * p + 1] = -ni
                        nr = s * pr + c * mr
                        ni = s * pi + c * mi
                        rq[2 * i] = nr
                        rq[2 * i + 1] = ni
                        ri[2 * q] = nr
                        ri[2 * q + 1] = -ni
                    A[p, 2 * q] = 0.0
                    A[p, 2 * q + 1] = 0.0
                    A[q, 2 * p] = 0.0
                    A[q, 2 * p + 1] = 0.0
                    A[p, 2 * p] = app - t * mag
                    A[p, 2 * p + 1] = 0.0
                    A[q, 2 * q] = aqq + t * mag
                    A[q, 2 * q + 1] = 0.0
                    if vectors:
                        # V[:, p] = c V[:, p] - s conj(e) V[:, q] ; V[:, q] = s V[:, p] + c conj(e) V[:, q]
                        vb = &V[0, 0]
                        for i in range(d):
                            ri = vb + 2 * d * i
                            pr = ri[2 * p]
                            pi = ri[2 * p + 1]
                            qr = ri[2 * q]
                            qi = ri[2 * q + 1]
                            mr = er * qr + ei * qi
                            mi = er * qi - ei * qr
                            ri[2 * p] = c * pr - s * mr
                            ri[2 * p + 1] = c * pi - s * mi
                            ri[2 * q] = s * pr + c * mr
                            ri[2 * q + 1] = s * pi + c * mi
    diag = np.array([A[i, 2 * i] for i in range(d)], dtype=np.float64)
    return diag, (v if vectors else None), sweeps

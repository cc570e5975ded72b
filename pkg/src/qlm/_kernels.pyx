# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-node geometry kernels (same contract as ``_kernels_py``)."""

import numpy as np
from libc.math cimport sqrt, fabs

cdef enum:
    STATUS_OK = 0
    STATUS_SIGMA = 1
    STATUS_SPACELIKE = 2
    STATUS_NORMAL = 3


cdef int _inv4(const double[:, ::1] a, double[:, ::1] out) nogil:
    # Gauss-Jordan with partial pivoting on a 4x8 augmented block
    cdef double m[4][8]
    cdef int i, j, k, piv
    cdef double best, f, tmp
    for i in range(4):
        for j in range(4):
            m[i][j] = a[i, j]
            m[i][j + 4] = 1.0 if i == j else 0.0
    for k in range(4):
        piv = k
        best = fabs(m[k][k])
        for i in range(k + 1, 4):
            if fabs(m[i][k]) > best:
                best = fabs(m[i][k])
                piv = i
        if best == 0.0:
            return 1
        if piv != k:
            for j in range(8):
                tmp = m[k][j]
                m[k][j] = m[piv][j]
                m[piv][j] = tmp
        f = 1.0 / m[k][k]
        for j in range(8):
            m[k][j] *= f
        for i in range(4):
            if i != k:
                f = m[i][k]
                if f != 0.0:
                    for j in range(8):
                        m[i][j] -= f * m[k][j]
    for i in range(4):
        for j in range(4):
            out[i, j] = m[i][j + 4]
    return 0


def christoffel(G_in, dG_in):
    cdef double[:, :, ::1] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef double[:, :, :, ::1] dG = np.ascontiguousarray(dG_in, dtype=np.float64)
    cdef Py_ssize_t n = G.shape[0]
    Ginv_arr = np.empty((n, 4, 4))
    gam_arr = np.empty((n, 4, 4, 4))
    cdef double[:, :, ::1] Ginv = Ginv_arr
    cdef double[:, :, :, ::1] gam = gam_arr
    cdef double low[4][4][4]
    cdef Py_ssize_t p
    cdef int a, b, c, d, err = 0
    cdef double s
    with nogil:
        for p in range(n):
            if _inv4(G[p], Ginv[p]) != 0:
                err = 1
                break
            for d in range(4):
                for a in range(4):
                    for b in range(a, 4):
                        low[d][a][b] = 0.5 * (dG[p, a, d, b] + dG[p, b, d, a]
                                              - dG[p, d, a, b])
                        low[d][b][a] = low[d][a][b]
            for c in range(4):
                for a in range(4):
                    for b in range(a, 4):
                        s = 0.0
                        for d in range(4):
                            s += Ginv[p, c, d] * low[d][a][b]
                        gam[p, c, a, b] = s
                        gam[p, c, b, a] = s
    if err:
        raise np.linalg.LinAlgError("singular metric matrix")
    return Ginv_arr, gam_arr


cdef inline double _dot(const double[:, ::1] g, double* x, double* y) nogil:
    cdef int i, j
    cdef double s = 0.0
    for i in range(4):
        for j in range(4):
            s += x[i] * g[i, j] * y[j]
    return s


def extrinsic(G_in, Ginv_in, gam_in, Yd_in, Ydd_in):
    cdef double[:, :, ::1] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef double[:, :, ::1] Ginv = np.ascontiguousarray(Ginv_in, dtype=np.float64)
    cdef double[:, :, :, ::1] gam = np.ascontiguousarray(gam_in, dtype=np.float64)
    cdef double[:, :, ::1] Yd = np.ascontiguousarray(Yd_in, dtype=np.float64)
    cdef double[:, :, :, ::1] Ydd = np.ascontiguousarray(Ydd_in, dtype=np.float64)
    cdef Py_ssize_t n = G.shape[0]
    sigma_arr = np.empty((n, 2, 2))
    H_arr = np.empty((n, 4))
    J_arr = np.empty((n, 4))
    status_arr = np.zeros(n, dtype=np.int32)
    cdef double[:, :, ::1] sigma = sigma_arr
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] J = J_arr
    cdef int[::1] status = status_arr
    cdef double t0[4]
    cdef double t1[4]
    cdef double hraw[4]
    cdef double V[4]
    cdef double sec[4]
    cdef double hv[4]
    cdef double si00, si01, si11, det, s, pa, pb, HH, nJ, c, scale
    cdef Py_ssize_t p
    cdef int a, b, i, j, k
    with nogil:
        for p in range(n):
            for i in range(4):
                t0[i] = Yd[p, 0, i]
                t1[i] = Yd[p, 1, i]
            sigma[p, 0, 0] = _dot(G[p], t0, t0)
            sigma[p, 0, 1] = _dot(G[p], t0, t1)
            sigma[p, 1, 0] = sigma[p, 0, 1]
            sigma[p, 1, 1] = _dot(G[p], t1, t1)
            det = sigma[p, 0, 0] * sigma[p, 1, 1] - sigma[p, 0, 1] * sigma[p, 0, 1]
            if sigma[p, 0, 0] <= 0.0 or det <= 0.0:
                status[p] = STATUS_SIGMA
                for i in range(4):
                    H[p, i] = 0.0
                    J[p, i] = 0.0
                continue
            si00 = sigma[p, 1, 1] / det
            si11 = sigma[p, 0, 0] / det
            si01 = -sigma[p, 0, 1] / det

            for i in range(4):
                hraw[i] = 0.0
            for a in range(2):
                for b in range(2):
                    if a == 0 and b == 0:
                        c = si00
                    elif a == 1 and b == 1:
                        c = si11
                    else:
                        c = si01
                    for k in range(4):
                        s = Ydd[p, a, b, k]
                        for i in range(4):
                            for j in range(4):
                                s += gam[p, k, i, j] * Yd[p, a, i] * Yd[p, b, j]
                        hraw[k] += c * s
            # remove tangential part
            pa = _dot(G[p], t0, hraw)
            pb = _dot(G[p], t1, hraw)
            for i in range(4):
                hv[i] = hraw[i] - (t0[i] * (si00 * pa + si01 * pb)
                                   + t1[i] * (si01 * pa + si11 * pb))
                H[p, i] = hv[i]
            HH = _dot(G[p], hv, hv)
            if HH <= 0.0:
                status[p] = STATUS_SPACELIKE
                for i in range(4):
                    J[p, i] = 0.0
                continue

            for i in range(4):
                V[i] = -Ginv[p, i, 0]
            pa = _dot(G[p], t0, V)
            pb = _dot(G[p], t1, V)
            for i in range(4):
                V[i] = V[i] - (t0[i] * (si00 * pa + si01 * pb)
                               + t1[i] * (si01 * pa + si11 * pb))
            s = _dot(G[p], V, hv) / HH
            for i in range(4):
                sec[i] = V[i] - s * hv[i]
            nJ = -_dot(G[p], sec, sec)
            if nJ <= 0.0:
                status[p] = STATUS_NORMAL
                for i in range(4):
                    J[p, i] = 0.0
                continue
            scale = sqrt(HH / nJ)
            for i in range(4):
                J[p, i] = scale * sec[i]
    return sigma_arr, H_arr, J_arr, status_arr


def connection(G_in, gam_in, Yd_in, E_in, dE_in, H_in):
    cdef double[:, :, ::1] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef double[:, :, :, ::1] gam = np.ascontiguousarray(gam_in, dtype=np.float64)
    cdef double[:, :, ::1] Yd = np.ascontiguousarray(Yd_in, dtype=np.float64)
    cdef double[:, ::1] E = np.ascontiguousarray(E_in, dtype=np.float64)
    cdef double[:, :, ::1] dE = np.ascontiguousarray(dE_in, dtype=np.float64)
    cdef double[:, ::1] H = np.ascontiguousarray(H_in, dtype=np.float64)
    cdef Py_ssize_t n = G.shape[0]
    out_arr = np.empty((n, 2))
    cdef double[:, ::1] out = out_arr
    cdef double cov[4]
    cdef double hv[4]
    cdef double s, hn
    cdef Py_ssize_t p
    cdef int a, i, j, k
    with nogil:
        for p in range(n):
            for i in range(4):
                hv[i] = H[p, i]
            hn = sqrt(_dot(G[p], hv, hv))
            for a in range(2):
                for k in range(4):
                    s = dE[p, a, k]
                    for i in range(4):
                        for j in range(4):
                            s += gam[p, k, i, j] * Yd[p, a, i] * E[p, j]
                    cov[k] = s
                out[p, a] = _dot(G[p], cov, hv) / hn
    return out_arr

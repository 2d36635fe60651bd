# cython: language_level=3
"""Compiled kernels: cyclic Jacobi eigensolver, one-sided Jacobi SVD,
exact pairwise squared distances and Lloyd iterations.

Every function here has a numpy twin in ``_fallback.py`` with the same
signature and return layout.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef double _offdiag_norm(double[:, ::1] A) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0], p, q
    cdef double acc = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            acc += A[p, q] * A[p, q]
    return sqrt(2.0 * acc)


def jacobi_eigh(S, double tol, int max_sweeps):
    """Cyclic-by-row Jacobi on a copy of symmetric ``S``.

    Sweeps until the off-diagonal Frobenius norm is <= ``tol``.
    Returns ``(diag, Vt, sweeps, off)``; rows of ``Vt`` are eigenvectors,
    unsorted.
    """
    cdef double[:, ::1] A = np.array(S, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    Vt_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] Vt = Vt_arr
    cdef Py_ssize_t p, q, j
    cdef int sweep = 0
    cdef double off, apq, app, aqq, tau, t, c, s, x, y
    with nogil:
        off = _offdiag_norm(A)
        while off > tol and sweep < max_sweeps:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    app = A[p, p]
                    aqq = A[q, q]
                    tau = (aqq - app) / (2.0 * apq)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for j in range(n):
                        x = A[p, j]
                        y = A[q, j]
                        A[p, j] = c * x - s * y
                        A[q, j] = s * x + c * y
                    A[p, p] = app - t * apq
                    A[q, q] = aqq + t * apq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for j in range(n):
                        if j != p and j != q:
                            A[j, p] = A[p, j]
                            A[j, q] = A[q, j]
                    for j in range(n):
                        x = Vt[p, j]
                        y = Vt[q, j]
                        Vt[p, j] = c * x - s * y
                        Vt[q, j] = s * x + c * y
            sweep += 1
            off = _offdiag_norm(A)
    diag = np.array([A[j, j] for j in range(n)], dtype=np.float64)
    return diag, Vt_arr, sweep, off


def jacobi_svd(G_in, double tol, int max_sweeps):
    """One-sided (Hestenes) Jacobi on the rows of ``G_in`` (k x m).

    Rows are the columns of the matrix being decomposed. Rotates pairs of
    rows until every pair is orthogonal to relative ``tol``. Returns
    ``(G, Vt, sweeps)`` with ``G = Vt @ G_in``.
    """
    cdef double[:, ::1] G = np.array(G_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t k = G.shape[0], m = G.shape[1]
    Vt_arr = np.eye(k, dtype=np.float64)
    cdef double[:, ::1] Vt = Vt_arr
    cdef Py_ssize_t p, q, j
    cdef int sweep = 0, rotated = 1
    cdef double alpha, beta, gamma, zeta, t, c, s, x, y
    with nogil:
        while rotated and sweep < max_sweeps:
            rotated = 0
            for p in range(k - 1):
                for q in range(p + 1, k):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for j in range(m):
                        alpha = alpha + G[p, j] * G[p, j]
                        beta = beta + G[q, j] * G[q, j]
                        gamma = gamma + G[p, j] * G[q, j]
                    if alpha == 0.0 or beta == 0.0:
                        continue
                    if fabs(gamma) <= tol * sqrt(alpha) * sqrt(beta):
                        continue
                    rotated = 1
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if zeta >= 0.0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for j in range(m):
                        x = G[p, j]
                        y = G[q, j]
                        G[p, j] = c * x - s * y
                        G[q, j] = s * x + c * y
                    for j in range(k):
                        x = Vt[p, j]
                        y = Vt[q, j]
                        Vt[p, j] = c * x - s * y
                        Vt[q, j] = s * x + c * y
            sweep += 1
    return np.asarray(G), Vt_arr, sweep


def pairwise_sqdist(X_in):
    """Exact ``sum_k (x_ik - x_jk)**2`` for all pairs, symmetric, zero diagonal."""
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef Py_ssize_t N = X.shape[0], n = X.shape[1], i, j, f
    out_arr = np.zeros((N, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double acc, d
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                acc = 0.0
                for f in range(n):
                    d = X[i, f] - X[j, f]
                    acc = acc + d * d
                out[i, j] = acc
                out[j, i] = acc
    return out_arr


cdef double _assign(double[:, ::1] X, double[:, ::1] C, long[::1] labels,
                    double[::1] dist) noexcept nogil:
    cdef Py_ssize_t N = X.shape[0], d = X.shape[1], k = C.shape[0], i, j, f
    cdef double best, acc, diff, total = 0.0
    cdef long arg
    for i in range(N):
        best = -1.0
        arg = 0
        for j in range(k):
            acc = 0.0
            for f in range(d):
                diff = X[i, f] - C[j, f]
                acc = acc + diff * diff
            if best < 0.0 or acc < best:
                best = acc
                arg = j
        labels[i] = arg
        dist[i] = best
        total = total + best
    return total


def lloyd(X_in, C_in, int max_iter, double tol):
    """Lloyd iterations from the given centroids.

    Empty clusters are re-seeded at the point farthest from its centroid.
    Returns ``(labels, centroids, wcss, n_iter, history)``; ``history``
    holds the WCSS after every assignment step.
    """
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    C_arr = np.array(C_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] C = C_arr
    cdef Py_ssize_t N = X.shape[0], d = X.shape[1], k = C.shape[0]
    labels_arr = np.zeros(N, dtype=np.int64)
    cdef long[::1] labels = labels_arr
    cdef double[::1] dist = np.zeros(N, dtype=np.float64)
    new_arr = np.zeros((k, d), dtype=np.float64)
    cdef double[:, ::1] newC = new_arr
    cdef long[::1] counts = np.zeros(k, dtype=np.int64)
    history = []
    cdef Py_ssize_t i, j, f
    cdef long far, lab
    cdef double wcss, shift, mv, diff, farv
    cdef int it = 0, empty
    wcss = _assign(X, C, labels, dist)
    history.append(wcss)
    while it < max_iter:
        with nogil:
            for j in range(k):
                counts[j] = 0
            for i in range(N):
                counts[labels[i]] += 1
            # re-seed empties at the farthest point of a cluster with >1 member
            empty = 1
            while empty:
                empty = 0
                for j in range(k):
                    if counts[j] == 0:
                        far = -1
                        farv = -1.0
                        for i in range(N):
                            if counts[labels[i]] > 1 and dist[i] > farv:
                                farv = dist[i]
                                far = i
                        if far < 0:
                            break
                        counts[labels[far]] -= 1
                        labels[far] = j
                        counts[j] = 1
                        dist[far] = 0.0
                        empty = 1
                        break
            for j in range(k):
                for f in range(d):
                    newC[j, f] = 0.0
            for i in range(N):
                lab = labels[i]
                for f in range(d):
                    newC[lab, f] += X[i, f]
            shift = 0.0
            for j in range(k):
                mv = 0.0
                for f in range(d):
                    if counts[j] > 0:
                        newC[j, f] = newC[j, f] / counts[j]
                    else:
                        newC[j, f] = C[j, f]
                    diff = newC[j, f] - C[j, f]
                    mv = mv + diff * diff
                    C[j, f] = newC[j, f]
                if mv > shift:
                    shift = mv
            wcss = _assign(X, C, labels, dist)
        it += 1
        history.append(wcss)
        if sqrt(shift) <= tol:
            break
    return labels_arr, C_arr, wcss, it, np.array(history)


def masked_dot(L_in, R_in, rows_in, cols_in):
    """out[i] = L[rows[i]] . R[cols[i]], the entries of L R^T on a sparse pattern."""
    cdef double[:, ::1] L = np.ascontiguousarray(L_in, dtype=np.float64)
    cdef double[:, ::1] R = np.ascontiguousarray(R_in, dtype=np.float64)
    cdef long[::1] rows = np.ascontiguousarray(rows_in, dtype=np.int64)
    cdef long[::1] cols = np.ascontiguousarray(cols_in, dtype=np.int64)
    cdef Py_ssize_t n = rows.shape[0], r = L.shape[1], i, f
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double acc
    if R.shape[1] != r:
        raise ValueError("factor widths differ")
    with nogil:
        for i in range(n):
            acc = 0.0
            for f in range(r):
                acc = acc + L[rows[i], f] * R[cols[i], f]
            out[i] = acc
    return out_arr

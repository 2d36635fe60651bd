"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and return layouts. The Jacobi routines here use the
round-robin (parallel) cyclic ordering so that each round is a handful of
vectorised operations on disjoint index pairs; the compiled versions use
cyclic-by-row ordering. Both sweep the same convergence test, so results
agree to rounding, not bitwise.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _round_robin(n):
    """Pairings covering every (p, q), p < q, once per n-1 (or n) rounds."""
    m = n if n % 2 == 0 else n + 1
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        P, Q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a >= n or b >= n:
                continue
            P.append(min(a, b))
            Q.append(max(a, b))
        if P:
            rounds.append((np.array(P), np.array(Q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _rotation(tau_num, tau_den):
    """Jacobi (c, s, t) annihilating a pair; identity where ``tau_den == 0``."""
    active = tau_den != 0.0
    tau = np.where(active, tau_num / np.where(active, tau_den, 1.0), 0.0)
    with np.errstate(over="ignore"):
        root = np.sqrt(1.0 + tau * tau)
    sign = np.where(tau >= 0.0, 1.0, -1.0)
    t = np.where(active, sign / (np.abs(tau) + root), 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c, t


def _offdiag_norm(A):
    return float(np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2)))


def jacobi_eigh(S, tol, max_sweeps):
    A = np.array(S, dtype=np.float64, order="C", copy=True)
    n = A.shape[0]
    Vt = np.eye(n)
    rounds = _round_robin(n)
    sweep = 0
    off = _offdiag_norm(A)
    while off > tol and sweep < max_sweeps:
        for P, Q in rounds:
            apq = A[P, Q]
            app = A[P, P]
            aqq = A[Q, Q]
            c, s, t = _rotation(aqq - app, 2.0 * apq)
            cc, sc = c[:, None], s[:, None]
            rp, rq = A[P], A[Q]
            A[P], A[Q] = cc * rp - sc * rq, sc * rp + cc * rq
            cp, cq = A[:, P], A[:, Q]
            A[:, P], A[:, Q] = cp * c - cq * s, cp * s + cq * c
            A[P, P] = app - t * apq
            A[Q, Q] = aqq + t * apq
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vp, vq = Vt[P], Vt[Q]
            Vt[P], Vt[Q] = cc * vp - sc * vq, sc * vp + cc * vq
        A = 0.5 * (A + A.T)
        sweep += 1
        off = _offdiag_norm(A)
    return np.diag(A).copy(), Vt, sweep, off


def jacobi_svd(G_in, tol, max_sweeps):
    G = np.array(G_in, dtype=np.float64, order="C", copy=True)
    k = G.shape[0]
    Vt = np.eye(k)
    rounds = _round_robin(k)
    sweep = 0
    rotated = True
    while rotated and sweep < max_sweeps:
        rotated = False
        for P, Q in rounds:
            gp, gq = G[P], G[Q]
            alpha = np.einsum("ij,ij->i", gp, gp)
            beta = np.einsum("ij,ij->i", gq, gq)
            gamma = np.einsum("ij,ij->i", gp, gq)
            live = (alpha > 0) & (beta > 0) & (
                np.abs(gamma) > tol * np.sqrt(alpha) * np.sqrt(beta))
            if not live.any():
                continue
            rotated = True
            c, s, _ = _rotation(beta - alpha, np.where(live, 2.0 * gamma, 0.0))
            cc, sc = c[:, None], s[:, None]
            G[P], G[Q] = cc * gp - sc * gq, sc * gp + cc * gq
            vp, vq = Vt[P], Vt[Q]
            Vt[P], Vt[Q] = cc * vp - sc * vq, sc * vp + cc * vq
        sweep += 1
    return G, Vt, sweep


def pairwise_sqdist(X_in):
    X = np.ascontiguousarray(X_in, dtype=np.float64)
    N = X.shape[0]
    out = np.zeros((N, N))
    for i in range(N - 1):
        diff = X[i + 1:] - X[i]
        row = np.einsum("ij,ij->i", diff, diff)
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out


def _assign(X, C):
    dist = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(dist, axis=1)
    best = dist[np.arange(X.shape[0]), labels]
    return labels.astype(np.int64), best, float(best.sum())


def lloyd(X_in, C_in, max_iter, tol):
    X = np.ascontiguousarray(X_in, dtype=np.float64)
    C = np.array(C_in, dtype=np.float64, order="C", copy=True)
    k, d = C.shape
    labels, dist, wcss = _assign(X, C)
    history = [wcss]
    it = 0
    while it < max_iter:
        counts = np.bincount(labels, minlength=k)
        while (counts == 0).any():
            j = int(np.flatnonzero(counts == 0)[0])
            movable = counts[labels] > 1
            if not movable.any():
                break
            far = int(np.argmax(np.where(movable, dist, -1.0)))
            counts[labels[far]] -= 1
            labels[far] = j
            counts[j] = 1
            dist[far] = 0.0
        sums = np.zeros((k, d))
        np.add.at(sums, labels, X)
        newC = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], C)
        shift = float(np.max(np.sum((newC - C) ** 2, axis=1)))
        C = newC
        labels, dist, wcss = _assign(X, C)
        it += 1
        history.append(wcss)
        if np.sqrt(shift) <= tol:
            break
    return labels, C, wcss, it, np.array(history)


def masked_dot(L, R, rows, cols):
    L = np.asarray(L, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if L.shape[1] != R.shape[1]:
        raise ValueError("factor widths differ")
    return np.einsum("ij,ij->i", L[rows], R[cols])

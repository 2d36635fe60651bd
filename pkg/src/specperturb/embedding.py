"""Spectral coordinates, k-means on their rows, and scoring against labels."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _backend
from .affinity import AffinityPack, DataMatrix, affinity, resolve_sigma
from .numkernel import SeededRng, _fix_signs, as_matrix, sym_eig

TOP_CLUSTER_TOL = 1e-9
KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-9
MAX_MATCH_CLASSES = 10


@dataclass(frozen=True)
class SpectralEmbedding:
    k: int
    eigenvalues: np.ndarray
    Vk: np.ndarray
    alpha: float
    drop_first: bool
    spectrum: np.ndarray

    @property
    def N(self) -> int:
        return self.Vk.shape[0]


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    restarts_used: int
    n_iter: int = 0
    history: Optional[np.ndarray] = None


def _canonical_top_block(w, V, D):
    """Fix the basis of a repeated top eigenvalue of a normalised affinity.

    D^{1/2} 1 is always an eigenvector of A for eigenvalue 1. When the top
    eigenvalue is repeated (a disconnected graph) any basis of its eigenspace
    is valid; we put the normalised D^{1/2} 1 first and complete it with a
    Householder reflection, so unperturbed and perturbed embeddings share the
    same leading vector.
    """
    c = int(np.sum(w >= w[0] - TOP_CLUSTER_TOL))
    if c < 2:
        return V
    B = V[:, :c]
    u = np.sqrt(D)
    a = B.T @ (u / np.linalg.norm(u))
    a /= np.linalg.norm(a)
    h = a.copy()
    h[0] += 1.0 if a[0] >= 0 else -1.0
    H = np.eye(c) - 2.0 * np.outer(h, h) / (h @ h)
    block = np.empty_like(B)
    block[:, 0] = B @ a
    block[:, 1:] = B @ H[:, 1:]
    block, _ = _fix_signs(block)
    V = V.copy()
    V[:, :c] = block
    return V


def eigenbasis(M):
    """Full eigen-decomposition (descending) of an affinity pack or a symmetric matrix.

    For an ``AffinityPack`` a repeated top eigenvalue gets the canonical basis
    of :func:`_canonical_top_block`.
    """
    if isinstance(M, AffinityPack):
        r = sym_eig(M.A)
        return np.asarray(r.eigenvalues), _canonical_top_block(r.eigenvalues, r.eigenvectors, M.D)
    r = sym_eig(M)
    return np.asarray(r.eigenvalues), np.asarray(r.eigenvectors)


def spectral_embed(pack, k: int, drop_first: bool = False) -> SpectralEmbedding:
    """Eigenvectors of A for eigenvalues 1..k (or 2..k+1 with ``drop_first``)."""
    w, V = eigenbasis(pack)
    N = w.size
    start = 1 if drop_first else 0
    if k < 1 or start + k >= N:
        raise ValueError(f"k={k} out of range for N={N} (need 1 <= k and "
                         f"{'k+2' if drop_first else 'k+1'} <= N)")
    sel = slice(start, start + k)
    alpha = float(w[start + k - 1] - w[start + k])
    Vk = np.ascontiguousarray(V[:, sel])
    return SpectralEmbedding(k=k, eigenvalues=w[sel].copy(), Vk=Vk, alpha=alpha,
                             drop_first=drop_first, spectrum=w)


def _plusplus(X, k, rng):
    N = X.shape[0]
    chosen = [int(rng.integers(N, 1)[0])]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total > 0:
            r = float(rng.uniform(1)[0]) * total
            j = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            j = min(j, N - 1)
        else:
            j = int(rng.integers(N, 1)[0])
        chosen.append(j)
        d2 = np.minimum(d2, np.sum((X - X[j]) ** 2, axis=1))
    return X[chosen]


def kmeans(points, k: int, rng: SeededRng, restarts: int = KMEANS_RESTARTS,
           max_iter: int = KMEANS_MAX_ITER, tol: float = KMEANS_TOL) -> ClusterAssignment:
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` by WCSS."""
    X = as_matrix(points, "points")
    N = X.shape[0]
    if not 1 <= k <= N:
        raise ValueError(f"k={k} must be between 1 and the number of points {N}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        seeds = _plusplus(X, k, rng)
        labels, C, wcss, n_iter, history = _backend.lloyd(X, seeds, max_iter, tol)
        if best is None or wcss < best.wcss:
            best = ClusterAssignment(labels=np.asarray(labels, dtype=np.int64), centroids=C,
                                     wcss=float(wcss), restarts_used=restarts,
                                     n_iter=int(n_iter), history=history)
    return best


def misclassification_rate(labels, reference) -> float:
    """Fraction of disagreements after the best relabelling of ``labels``.

    The optimum over all relabellings is found exactly by linear assignment
    on the confusion matrix.
    """
    a = np.asarray(labels)
    b = np.asarray(reference)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise ValueError("empty label vectors")
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    if max(ua.size, ub.size) > MAX_MATCH_CLASSES:
        raise ValueError(f"at most {MAX_MATCH_CLASSES} distinct labels supported, "
                         f"got {ua.size} and {ub.size}")
    q = max(ua.size, ub.size)
    confusion = np.zeros((q, q), dtype=np.int64)
    np.add.at(confusion, (ia, ib), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return 1.0 - confusion[rows, cols].sum() / a.size


def cluster_embedding(emb: SpectralEmbedding, n_clusters: int, rng: SeededRng,
                      restarts: int = KMEANS_RESTARTS, normalize_rows: bool = False):
    pts = emb.Vk
    if normalize_rows:
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        pts = pts / np.where(norms > 0, norms, 1.0)
    return kmeans(pts, n_clusters, rng, restarts=restarts)


def cluster_pipeline(X, sigma, k: int, drop_first: bool = False, rng: SeededRng | int = 0,
                     restarts: int = KMEANS_RESTARTS, n_clusters: Optional[int] = None,
                     normalize_rows: bool = False):
    """Kernel, normalise, embed, k-means; returns ``(embedding, assignment, rho)``.

    ``rho`` is ``None`` unless ``X`` is a labelled :class:`DataMatrix`.
    ``n_clusters`` defaults to ``k``.
    """
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    if not isinstance(rng, SeededRng):
        rng = SeededRng(rng)
    pack = affinity(X, resolve_sigma(X, sigma))
    emb = spectral_embed(pack, k, drop_first)
    assignment = cluster_embedding(emb, n_clusters or k, rng, restarts, normalize_rows)
    rho = None
    if X.labels is not None:
        rho = misclassification_rate(assignment.labels, X.labels)
    return emb, assignment, rho

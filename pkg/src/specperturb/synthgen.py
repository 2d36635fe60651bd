"""Seeded generators for block affinities, sparse point clouds and low-rank data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .affinity import DataMatrix
from .numkernel import SeededRng, gaussian_matrix


@dataclass(frozen=True)
class BlockAffinitySpec:
    block_sizes: Tuple[int, ...]
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError(f"block sizes must be positive, got {self.block_sizes}")
        if sum(sizes) < 2:
            raise ValueError("need at least 2 points in total")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def N(self) -> int:
        return sum(self.block_sizes)


def block_affinity(spec: BlockAffinitySpec):
    """All-ones diagonal blocks plus symmetrised uniform [0, eps] noise; returns ``(W, labels)``."""
    labels = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    W = (labels[:, None] == labels[None, :]).astype(np.float64)
    if spec.eps > 0:
        N = spec.N
        U = spec.eps * SeededRng(spec.seed).uniform(N * N).reshape(N, N)
        W += 0.5 * (U + U.T)
    return W, labels


def orthogonal_matrix(n: int, rng: SeededRng) -> np.ndarray:
    """Q factor of a Gaussian matrix with R's diagonal made positive (Haar distributed)."""
    Q, R = np.linalg.qr(gaussian_matrix(n, n, rng))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def _balanced_labels(N: int, k: int) -> np.ndarray:
    """Contiguous groups whose sizes differ by at most one."""
    return np.repeat(np.arange(k), [N // k + (i < N % k) for i in range(k)])


@dataclass(frozen=True)
class SparseCloudSpec:
    N: int
    n: int
    s: int
    k: int
    noise: float = 0.05
    basis_seed: int = 0
    point_seed: int = 1

    def __post_init__(self):
        if not 1 <= self.s <= self.n:
            raise ValueError(f"need 1 <= s <= n, got s={self.s}, n={self.n}")
        if not 1 <= self.k <= self.N:
            raise ValueError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if self.k * self.s > self.n:
            raise ValueError(f"k*s = {self.k * self.s} exceeds n = {self.n}; "
                             "supports cannot be disjoint")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")


def sparse_cloud(spec: SparseCloudSpec, return_basis: bool = False):
    """Clusters that are s-sparse in an orthonormal basis B; row i is B^T y_i.

    Cluster c uses coefficient support ``[c*s, (c+1)*s)`` so supports are
    disjoint. Centers are Gaussian coefficient vectors rescaled to norm
    sqrt(s), so every pair of centers is sqrt(2s) apart; points add
    ``noise`` times Gaussian coefficients on the same support.
    """
    B = orthogonal_matrix(spec.n, SeededRng(spec.basis_seed))
    rng = SeededRng(spec.point_seed)
    labels = _balanced_labels(spec.N, spec.k)
    Y = np.zeros((spec.N, spec.n))
    centers = rng.normal(spec.k * spec.s).reshape(spec.k, spec.s)
    centers *= np.sqrt(spec.s) / np.linalg.norm(centers, axis=1, keepdims=True)
    jitter = rng.normal(spec.N * spec.s).reshape(spec.N, spec.s)
    for c in range(spec.k):
        rows = labels == c
        Y[rows, c * spec.s:(c + 1) * spec.s] = centers[c] + spec.noise * jitter[rows]
    X = DataMatrix(Y @ B, labels=labels)  # row form of x_i = B^T y_i
    return (X, B) if return_basis else X


@dataclass(frozen=True)
class LowRankSpec:
    N: int
    n: int
    r: int
    k: int
    noise: float = 0.1
    seed: int = 0
    extra_rank: int = 0
    extra_scale: float = 0.6
    extra_decay: float = 0.95

    def __post_init__(self):
        if not 1 <= self.r <= min(self.N, self.n):
            raise ValueError(f"need 1 <= r <= min(N, n), got r={self.r}")
        if not 1 <= self.k <= self.r:
            raise ValueError(f"need 1 <= k <= r, got k={self.k}, r={self.r}")
        if self.extra_rank < 0 or self.r + self.extra_rank > min(self.N, self.n):
            raise ValueError(f"r + extra_rank must not exceed min(N, n)")
        if self.noise < 0 or self.extra_scale < 0 or not 0 < self.extra_decay <= 1:
            raise ValueError("noise, extra_scale must be >= 0 and extra_decay in (0, 1]")


def lowrank_images(spec: LowRankSpec) -> DataMatrix:
    """Rows = (cluster centroid + jitter) in an r-dimensional subspace, mapped into R^n.

    Centroids are the first k coordinate axes scaled by sqrt(n) so cluster
    separation does not shrink with dimension. ``extra_rank`` adds further
    orthogonal directions with Gaussian coefficients scaled by
    ``extra_scale * extra_decay**j``, raising the approximate rank.
    """
    rng = SeededRng(spec.seed)
    total = spec.r + spec.extra_rank
    basis = orthogonal_matrix(spec.n, rng)[:, :total]
    labels = _balanced_labels(spec.N, spec.k)
    centroids = np.zeros((spec.k, spec.r))
    centroids[:, :spec.k] = np.eye(spec.k)
    coords = centroids[labels] + spec.noise * rng.normal(spec.N * spec.r).reshape(spec.N, spec.r)
    X = coords @ basis[:, :spec.r].T
    if spec.extra_rank:
        scales = spec.extra_scale * spec.extra_decay ** np.arange(spec.extra_rank)
        extra = rng.normal(spec.N * spec.extra_rank).reshape(spec.N, spec.extra_rank) * scales
        X = X + extra @ basis[:, spec.r:].T
    return DataMatrix(np.sqrt(spec.n) * X, labels=labels)

"""Gaussian-kernel graphs and their normalised affinity matrices."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _backend
from .numkernel import as_matrix


@dataclass(frozen=True)
class DataMatrix:
    """N points in R^n, optionally labelled, optionally with a bandwidth."""

    X: np.ndarray
    labels: Optional[np.ndarray] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        if X.shape[0] < 2:
            raise ValueError(f"need at least 2 points, got {X.shape[0]}")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (X.shape[0],):
                raise ValueError(f"labels must have length {X.shape[0]}, got shape {labels.shape}")
            if labels.size and (labels.min() < 0 or not np.issubdtype(labels.dtype, np.integer)):
                raise ValueError("labels must be non-negative integers")
            object.__setattr__(self, "labels", labels.astype(np.int64))
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def with_X(self, X) -> "DataMatrix":
        """Same labels and sigma, new coordinates (compressed, completed, noisy)."""
        return replace(self, X=X)


@dataclass(frozen=True)
class AffinityPack:
    W: np.ndarray
    D: np.ndarray
    A: np.ndarray
    P: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.W.shape[0]


def _points(X):
    return X.X if isinstance(X, DataMatrix) else as_matrix(X, "X")


def pairwise_sqdist(X) -> np.ndarray:
    """Exact squared Euclidean distances between rows (no Gram-matrix shortcut)."""
    return _backend.pairwise_sqdist(_points(X))


def median_sigma(X) -> float:
    """Median of the N(N-1)/2 pairwise squared distances.

    Falls back to the mean of the non-zero distances when more than half the
    pairs coincide.
    """
    d2 = pairwise_sqdist(X)
    upper = d2[np.triu_indices(d2.shape[0], 1)]
    sigma = float(np.median(upper))
    if sigma > 0:
        return sigma
    positive = upper[upper > 0]
    if positive.size == 0:
        raise ValueError("all points coincide; no bandwidth can be chosen")
    return float(positive.mean())


def resolve_sigma(X, sigma=None) -> float:
    if sigma is None or sigma == "median":
        if isinstance(X, DataMatrix) and X.sigma is not None:
            return X.sigma
        return median_sigma(X)
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma


def kernel_from_sqdist(d2: np.ndarray, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    W = np.exp(-d2 / (2.0 * sigma))
    np.fill_diagonal(W, 1.0)
    return W


def gaussian_kernel(X, sigma) -> np.ndarray:
    """W_ij = exp(-||x_i - x_j||^2 / (2 sigma)), self-loops kept (W_ii = 1)."""
    if sigma is None or not float(sigma) > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return kernel_from_sqdist(pairwise_sqdist(X), float(sigma))


def normalize_affinity(W) -> AffinityPack:
    """A = D^-1/2 W D^-1/2 and P = D^-1 W with D the row sums of W."""
    W = np.array(as_matrix(W, "W"), copy=True)
    if W.shape[0] != W.shape[1]:
        raise ValueError(f"W must be square, got shape {W.shape}")
    if np.any(W < 0):
        raise ValueError("W has negative entries")
    if not np.array_equal(W, W.T):
        scale = float(np.max(np.abs(W)))
        if float(np.max(np.abs(W - W.T))) > 1e-12 * scale:
            raise ValueError("W is not symmetric")
        W = 0.5 * (W + W.T)
    D = W.sum(axis=1)
    isolated = np.flatnonzero(D <= 0)
    if isolated.size:
        raise ValueError(f"vertex {int(isolated[0])} is isolated (zero row sum); "
                         f"{isolated.size} isolated vertices in total")
    root = np.sqrt(D)
    A = W / np.outer(root, root)
    P = W / D[:, None]
    for arr in (W, D, A, P):
        arr.setflags(write=False)
    return AffinityPack(W=W, D=D, A=A, P=P)


def affinity(X, sigma) -> AffinityPack:
    return normalize_affinity(gaussian_kernel(X, sigma))


def perturbed_affinity(X_tilde, sigma) -> AffinityPack:
    """The same kernel-and-normalise pipeline applied to perturbed rows.

    ``sigma`` must be the bandwidth used for the unperturbed data so the two
    packs are comparable.
    """
    return affinity(X_tilde, sigma)

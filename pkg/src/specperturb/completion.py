"""Matrix completion by soft-impute (iterated singular value soft-thresholding)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import _backend
from .numkernel import SeededRng, as_matrix, spectral_norm, svd

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
SCHEDULE_STEPS = 10
SCHEDULE_FLOOR = 1e-4
DENSE_MAX_MIN_DIM = 64
OVERSAMPLE = 5


@dataclass(frozen=True)
class ObservationMask:
    observed: np.ndarray  # boolean N x n

    def __post_init__(self):
        obs = np.asarray(self.observed)
        if obs.ndim != 2 or obs.dtype != np.bool_:
            raise ValueError("mask must be a 2-D boolean array")
        if not obs.any():
            raise ValueError("mask has no observed entries")
        obs = obs.copy()
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)

    @classmethod
    def from_entries(cls, shape, rows, cols) -> "ObservationMask":
        N, n = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise ValueError("row and column index lists differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= N or cols.min() < 0 or cols.max() >= n):
            raise ValueError(f"entry index out of range for shape {shape}")
        obs = np.zeros((N, n), dtype=bool)
        obs[rows, cols] = True
        if int(obs.sum()) != rows.size:
            raise ValueError("duplicate entries in mask")
        return cls(obs)

    @property
    def shape(self):
        return self.observed.shape

    @property
    def count(self) -> int:
        return int(self.observed.sum())

    @property
    def p(self) -> float:
        return self.count / self.observed.size

    @property
    def entries(self) -> np.ndarray:
        """(row, col) pairs in row-major order."""
        return np.argwhere(self.observed)


@dataclass(frozen=True)
class PartialMatrix:
    mask: ObservationMask
    values: np.ndarray  # one per entry, row-major order

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.mask.count:
            raise ValueError(f"{v.size} values for {self.mask.count} observed entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("observed values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_dense(cls, M, mask: ObservationMask) -> "PartialMatrix":
        M = as_matrix(M, "M")
        if M.shape != mask.shape:
            raise ValueError(f"matrix shape {M.shape} does not match mask {mask.shape}")
        return cls(mask, M[mask.observed])

    @property
    def shape(self):
        return self.mask.shape

    def dense(self, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=np.float64)
        out[self.mask.observed] = self.values
        return out


@dataclass(frozen=True)
class CompletionResult:
    Xhat: np.ndarray
    iterations: int
    lambda_final: float
    observed_residual: float
    converged: bool
    residual_history: np.ndarray = field(repr=False, default=None)
    engine: str = "dense"


def sample_mask(N: int, n: int, p: float, rng: SeededRng) -> ObservationMask:
    """Each entry observed independently with probability p."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if N < 1 or n < 1 or p * N * n < 1:
        raise ValueError(f"p*N*n must be at least 1, got {p * N * n}")
    obs = (rng.uniform(N * n) < p).reshape(N, n)
    if not obs.any():
        raise ValueError("sampled mask is empty; increase p")
    return ObservationMask(obs)


def default_schedule(sigma1: float) -> np.ndarray:
    return np.geomspace(sigma1 / 2.0, SCHEDULE_FLOOR * sigma1, SCHEDULE_STEPS)


def _relative_change(diff_sq, old_sq, new_sq):
    if old_sq > 0:
        return math.sqrt(max(diff_sq, 0.0) / old_sq)
    return 0.0 if new_sq == 0 else math.inf


def _dense_engine(observed: PartialMatrix, schedule, tol, max_iter):
    mask = observed.mask.observed
    M = observed.dense()
    Z = np.zeros_like(M)
    total = 0
    history = []
    converged = False
    for lam in schedule:
        converged = False
        for _ in range(max_iter):
            r = svd(np.where(mask, M, Z))
            s = np.maximum(r.singular_values - lam, 0.0)
            Znew = (r.U * s) @ r.V.T
            change = _relative_change(float(np.sum((Znew - Z) ** 2)), float(np.sum(Z * Z)),
                                      float(np.sum(Znew * Znew)))
            Z = Znew
            total += 1
            if change <= tol:
                converged = True
                break
        history.append(float(np.linalg.norm((Z - M)[mask])))
    return Z, total, converged, history


class _Factored:
    """Z = U diag(s) W^T together with the sparse residual pattern of the mask."""

    def __init__(self, observed: PartialMatrix):
        ent = observed.mask.entries
        self.rows, self.cols = ent[:, 0], ent[:, 1]
        self.values = observed.values
        N, n = observed.shape
        self.R = sp.csr_matrix((self.values.copy(), (self.rows, self.cols)), shape=(N, n))
        self.R.sort_indices()
        # csr built from row-major triples keeps that order in .data
        self.U = np.zeros((N, 0))
        self.s = np.zeros(0)
        self.W = np.zeros((n, 0))

    def at_mask(self, U, s, W):
        return _backend.masked_dot(U * s, W, self.rows, self.cols)

    def set_residual(self):
        self.R.data[:] = self.values - self.at_mask(self.U, self.s, self.W)

    def matmul(self, B):
        """(P_Omega(M) + P_Omega-perp(Z)) @ B."""
        return self.U @ (self.s[:, None] * (self.W.T @ B)) + self.R @ B

    def rmatmul(self, Q):
        """(P_Omega(M) + P_Omega-perp(Z))^T @ Q."""
        return self.W @ (self.s[:, None] * (self.U.T @ Q)) + self.R.T @ Q


def _lowrank_engine(observed: PartialMatrix, schedule, tol, max_iter):
    F = _Factored(observed)
    N, n = observed.shape
    pad_rng = SeededRng(0)
    basis = None
    total = 0
    history = []
    converged = False
    for lam in schedule:
        converged = False
        for _ in range(max_iter):
            F.set_residual()
            if basis is None:
                Y = F.R.toarray()
                U0, s0, Vt0 = np.linalg.svd(Y, full_matrices=False)
                kept = int(np.sum(s0 > lam))
                b = min(kept + OVERSAMPLE, min(N, n))
                Un, sn, Wn = U0[:, :b], s0[:b], Vt0[:b].T
            else:
                while True:
                    Q, _ = np.linalg.qr(F.matmul(basis))
                    P, _ = np.linalg.qr(F.rmatmul(Q))
                    Q, _ = np.linalg.qr(F.matmul(P))
                    Bt = F.rmatmul(Q)  # n x b, equals (Q^T Y)^T
                    Wb, sn, Ubt = np.linalg.svd(Bt, full_matrices=False)
                    Un, Wn = Q @ Ubt.T, Wb
                    b = basis.shape[1]
                    if np.sum(sn > lam) < b or b >= min(N, n):
                        break
                    extra = min(b, min(N, n) - b)
                    basis = np.hstack([Wn, pad_rng.normal(n * extra).reshape(n, extra)])
            keep = sn > lam
            shrunk = sn[keep] - lam
            Uk, Wk = Un[:, keep], Wn[:, keep]
            cross = float(np.sum((F.s[:, None] * (F.U.T @ Uk) * shrunk[None, :]) * (F.W.T @ Wk)))
            old_sq = float(np.sum(F.s ** 2))
            new_sq = float(np.sum(shrunk ** 2))
            change = _relative_change(old_sq + new_sq - 2.0 * cross, old_sq, new_sq)
            F.U, F.s, F.W = Uk, shrunk, Wk
            b = min(max(int(keep.sum()) + OVERSAMPLE, 1), min(N, n))
            basis = Wn[:, :b] if Wn.shape[1] >= b else np.hstack(
                [Wn, pad_rng.normal(n * (b - Wn.shape[1])).reshape(n, -1)])
            total += 1
            if change <= tol:
                converged = True
                break
        history.append(float(np.linalg.norm(observed.values - F.at_mask(F.U, F.s, F.W))))
    Z = (F.U * F.s) @ F.W.T
    return Z, total, converged, history


def soft_impute(observed: PartialMatrix, lambda_schedule: Optional[Sequence[float]] = None,
                tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                engine: str = "auto") -> CompletionResult:
    """Fill in ``observed`` by soft-impute with warm starts along a decreasing lambda schedule.

    Each step replaces the unobserved entries by the current estimate and
    soft-thresholds the singular values by lambda. A lambda stage ends when
    the relative Frobenius change drops to ``tol`` or after ``max_iter``
    steps. ``converged`` refers to the final stage.

    ``engine="dense"`` runs full SVDs; ``"lowrank"`` keeps the iterate in
    factored form and tracks the top singular triplets by warm-started
    subspace iteration, which is what makes 1000 x 1000 problems practical.
    ``"auto"`` picks dense when the smaller dimension is at most 64.
    """
    if not isinstance(observed, PartialMatrix):
        raise ValueError("observed must be a PartialMatrix")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")
    N, n = observed.shape
    M = observed.dense()
    sigma1 = spectral_norm(M) if min(N, n) <= DENSE_MAX_MIN_DIM else float(
        np.linalg.norm(M, 2))
    if sigma1 == 0.0:
        return CompletionResult(Xhat=np.zeros((N, n)), iterations=0, lambda_final=0.0,
                                observed_residual=0.0, converged=True,
                                residual_history=np.zeros(1), engine="trivial")
    if lambda_schedule is None:
        schedule = default_schedule(sigma1)
    else:
        schedule = np.asarray(lambda_schedule, dtype=np.float64).ravel()
        if schedule.size == 0 or np.any(schedule <= 0) or np.any(np.diff(schedule) > 0):
            raise ValueError("lambda_schedule must be non-empty, positive and non-increasing")
    if engine == "auto":
        engine = "dense" if min(N, n) <= DENSE_MAX_MIN_DIM else "lowrank"
    if engine == "dense":
        Z, total, converged, history = _dense_engine(observed, schedule, tol, max_iter)
    elif engine == "lowrank":
        Z, total, converged, history = _lowrank_engine(observed, schedule, tol, max_iter)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    resid = float(np.linalg.norm(Z[observed.mask.observed] - observed.values))
    return CompletionResult(Xhat=Z, iterations=total, lambda_final=float(schedule[-1]),
                            observed_residual=resid, converged=converged,
                            residual_history=np.asarray(history), engine=engine)


def completion_error_bound(p: float, N: int, n: int, delta_noise: float) -> float:
    """4 sqrt((2 + p) min(N, n) / p) delta + 2 delta."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if delta_noise < 0:
        raise ValueError("delta_noise must be non-negative")
    return 4.0 * math.sqrt((2.0 + p) * min(N, n) / p) * delta_noise + 2.0 * delta_noise

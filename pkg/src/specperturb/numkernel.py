"""Dense linear algebra and seeded random generation.

The eigensolver and SVD run cyclic Jacobi (compiled when available) up to a
size threshold and hand larger problems to LAPACK through numpy. Both paths
return eigen/singular vectors under one sign convention: the entry of largest
magnitude in each vector is positive, ties going to the lowest index.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend

JACOBI_MAX_N = 256
SVD_JACOBI_MAX_N = 256
EIG_TOL = 1e-12
MAX_SWEEPS = 100
SYMMETRY_RTOL = 1e-12
RANK_RTOL = 1e-10

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array or raise ``ValueError``."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _fix_signs(V):
    """Flip columns so the largest-|entry| (lowest index on ties) is positive."""
    if V.size == 0:
        return V, np.ones(V.shape[1])
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs, signs


class SeededRng:
    """SplitMix64 stream with Box-Muller normals.

    The generator is counter based, so a block of ``n`` outputs is computed
    in one vectorised step and the stream is identical however it is chunked.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._state = self.seed & _MASK64

    @property
    def state(self) -> int:
        return self._state

    def next_uint64(self, size: int) -> np.ndarray:
        if size < 0:
            raise ValueError("size must be non-negative")
        steps = np.arange(1, size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + steps * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
        self._state = (self._state + size * int(_GOLDEN)) & _MASK64
        return z

    def uniform(self, size: int) -> np.ndarray:
        """Uniform deviates on [0, 1) with 53 random bits each."""
        return (self.next_uint64(size) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:size]

    def integers(self, high: int, size: int) -> np.ndarray:
        """Integers in [0, high)."""
        if high < 1:
            raise ValueError("high must be >= 1")
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def spawn(self) -> "SeededRng":
        return SeededRng(int(self.next_uint64(1)[0]))


def gaussian_matrix(m: int, n: int, rng: SeededRng) -> np.ndarray:
    """m x n matrix of i.i.d. standard normal entries."""
    if m < 1 or n < 1:
        raise ValueError(f"dimensions must be >= 1, got ({m}, {n})")
    return rng.normal(m * n).reshape(m, n)


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    method: str = "jacobi"
    sweeps: int = 0


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    method: str = "jacobi"

    def rank(self, rtol: float = RANK_RTOL) -> int:
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > rtol * s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def check_symmetric(S, name="matrix"):
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    scale = float(np.max(np.abs(S))) if S.size else 0.0
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"{name} is not symmetric: max |S - S^T| = {asym:.3e} "
            f"exceeds {SYMMETRY_RTOL:g} * max|S| = {SYMMETRY_RTOL * scale:.3e}")
    return S


def sym_eig(S, method: str = "auto") -> SymEigResult:
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending."""
    S = check_symmetric(S)
    n = S.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    sweeps = 0
    if method == "jacobi":
        tol = EIG_TOL * float(np.linalg.norm(S))
        w, Vt, sweeps, off = _backend.jacobi_eigh(S, tol, MAX_SWEEPS)
        if off > tol:
            warnings.warn(f"Jacobi stopped after {sweeps} sweeps with off-diagonal norm {off:.3e}",
                          RuntimeWarning, stacklevel=2)
        V = Vt.T
    elif method == "lapack":
        w, V = np.linalg.eigh(S)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    V, _ = _fix_signs(V[:, order])
    return SymEigResult(_frozen(w[order]), _frozen(V), method, int(sweeps))


def _complete_orthonormal(U, filled):
    """Replace the columns of ``U`` not in ``filled`` by an orthonormal completion."""
    m, k = U.shape
    basis = [U[:, j] for j in range(k) if filled[j]]
    out = U.copy()
    candidates = iter(np.eye(m))
    for j in range(k):
        if filled[j]:
            continue
        for e in candidates:
            v = e.copy()
            for _ in range(2):
                for b in basis:
                    v -= (b @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                v /= nv
                basis.append(v)
                out[:, j] = v
                break
    return out


def svd(M, method: str = "auto") -> SvdResult:
    """Thin SVD ``M = U diag(s) V^T``, singular values descending."""
    M = as_matrix(M)
    m, n = M.shape
    if m == 0 or n == 0:
        raise ValueError(f"empty matrix of shape {M.shape}")
    if m < n:
        r = svd(M.T, method)
        return SvdResult(r.V, r.singular_values, r.U, r.method)
    if method == "auto":
        method = "jacobi" if n <= SVD_JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        tol = max(m, 10) * np.finfo(float).eps
        G, Vt, _ = _backend.jacobi_svd(M.T, tol, MAX_SWEEPS)
        s = np.sqrt(np.einsum("ij,ij->i", G, G))
        order = np.argsort(-s, kind="stable")
        s, G, V = s[order], G[order], Vt[order].T
        filled = s > 0.0
        U = np.zeros((m, n))
        U[:, filled] = (G[filled] / s[filled, None]).T
        if not filled.all():
            U = _complete_orthonormal(U, filled)
    elif method == "lapack":
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        V = Vt.T
    else:
        raise ValueError(f"unknown method {method!r}")
    U, signs = _fix_signs(U)
    V = V * signs
    return SvdResult(_frozen(U), _frozen(s), _frozen(V), method)


def spectral_norm(M) -> float:
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(svd(M).singular_values[0])

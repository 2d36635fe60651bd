"""Comparing two k-dimensional subspaces given orthonormal bases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkernel import as_matrix, spectral_norm, svd

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class SubspaceComparison:
    k: int
    cos_gammas: np.ndarray
    angles: np.ndarray
    Q: np.ndarray
    sin_theta_fro: float
    proj_dist_fro: float
    embed_dist_2: float
    max_row_dist: float

    @property
    def max_angle(self) -> float:
        return float(self.angles[-1])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "cos_gammas": self.cos_gammas.tolist(),
            "angles": self.angles.tolist(),
            "max_angle": self.max_angle,
            "sin_theta_fro": self.sin_theta_fro,
            "proj_dist_fro": self.proj_dist_fro,
            "embed_dist_2": self.embed_dist_2,
            "max_row_dist": self.max_row_dist,
        }


def _check_pair(V, Vt):
    V = as_matrix(V, "V")
    Vt = as_matrix(Vt, "V_tilde")
    if V.shape != Vt.shape:
        raise ValueError(f"bases must have the same shape, got {V.shape} and {Vt.shape}")
    N, k = V.shape
    if k < 1 or k > N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    for name, B in (("V", V), ("V_tilde", Vt)):
        err = float(np.max(np.abs(B.T @ B - np.eye(k))))
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"{name} columns are not orthonormal (max |B^T B - I| = {err:.2e})")
    return V, Vt


def _angles(V, Vt):
    """Cosines (descending), angles (ascending) and the residual Vt - V V^T Vt.

    Angles come from arccos of the cosines, except where the cosine is above
    1/sqrt(2); there arccos loses accuracy and the arcsin of the matching
    singular value of the residual is used instead.
    """
    G = V.T @ Vt
    cos = np.clip(svd(G).singular_values, 0.0, 1.0)
    R = Vt - V @ G
    sin = np.clip(svd(R).singular_values[::-1], 0.0, 1.0)
    angles = np.where(cos * cos < 0.5, np.arccos(cos), np.arcsin(sin))
    return cos, np.maximum.accumulate(angles), R


def canonical_angles(V, V_tilde) -> np.ndarray:
    """Principal angles between span(V) and span(V_tilde), ascending."""
    V, Vt = _check_pair(V, V_tilde)
    return _angles(V, Vt)[1]


def _procrustes(V, Vt):
    r = svd(V.T @ Vt)
    Q = r.U @ r.V.T
    diff = Vt - V @ Q
    return Q, spectral_norm(diff), np.linalg.norm(diff, axis=1)


def procrustes_align(V, V_tilde):
    """Orthogonal Q minimising ||V_tilde - V Q||_F.

    Returns ``(Q, embed_dist_2, row_dists)`` where ``embed_dist_2`` is the
    spectral norm of ``V_tilde - V Q`` and ``row_dists`` its row norms.
    """
    V, Vt = _check_pair(V, V_tilde)
    return _procrustes(V, Vt)


def projection_distance(V, V_tilde) -> float:
    """||V V^T - Vt Vt^T||_F without forming the N x N projectors.

    Equals sqrt(2k - 2||V^T Vt||_F^2); evaluated as sqrt(2) times the norm of
    the residual Vt - V V^T Vt, which avoids cancellation for close subspaces.
    """
    V, Vt = _check_pair(V, V_tilde)
    return float(np.sqrt(2.0) * np.linalg.norm(Vt - V @ (V.T @ Vt)))


def compare(V, V_tilde) -> SubspaceComparison:
    V, Vt = _check_pair(V, V_tilde)
    cos, angles, R = _angles(V, Vt)
    sin_fro = float(np.linalg.norm(R))
    Q, d2, rows = _procrustes(V, Vt)
    return SubspaceComparison(k=V.shape[1], cos_gammas=cos, angles=angles, Q=Q,
                              sin_theta_fro=sin_fro, proj_dist_fro=float(np.sqrt(2.0) * sin_fro),
                              embed_dist_2=d2, max_row_dist=float(rows.max()))

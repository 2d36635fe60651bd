"""Perturbation inequalities evaluated on concrete instances.

Each checker returns :class:`BoundReport` objects holding both sides of an
inequality and whether it holds up to a 1e-9 relative slack. Spectral
checks accept either :class:`AffinityPack` objects or plain symmetric
matrices.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .affinity import AffinityPack, DataMatrix, affinity, pairwise_sqdist, resolve_sigma
from .completion import completion_error_bound
from .embedding import eigenbasis
from .numkernel import as_matrix, check_symmetric, spectral_norm
from .sensing import MeasurementOperator, empirical_rip_delta, measure
from .subspace import compare

SLACK_RTOL = 1e-9
GAP_FLOOR = 1e-8
STEWART_SLACK = 10.0
_EXP_CAP = 700.0


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    lhs: float
    rhs: float
    alpha: Optional[float]
    satisfied: bool
    parameters: dict = field(default_factory=dict)
    notes: str = ""

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "lhs": self.lhs, "rhs": self.rhs, "alpha": self.alpha,
                "satisfied": self.satisfied, "parameters": dict(self.parameters),
                "notes": self.notes}


def holds(lhs: float, rhs: float) -> bool:
    return bool(lhs <= rhs + SLACK_RTOL * max(1.0, abs(rhs)))


def _expm1_capped(x: float):
    if x > _EXP_CAP:
        return sys.float_info.max, True
    return math.expm1(x), False


def _matrix(M, name):
    if isinstance(M, AffinityPack):
        return M.A
    return check_symmetric(M, name)


def _pair(A, A_tilde):
    Am, Atm = _matrix(A, "A"), _matrix(A_tilde, "A_tilde")
    if Am.shape != Atm.shape:
        raise ValueError(f"A and A_tilde differ in shape: {Am.shape} vs {Atm.shape}")
    return Am, Atm


def check_stewart(A, A_tilde, slack_factor: float = STEWART_SLACK) -> BoundReport:
    """Second-eigenvector distance against first-order gap bound plus a quadratic slack term."""
    Am, Atm = _pair(A, A_tilde)
    if Am.shape[0] < 3:
        raise ValueError("need N >= 3 for a second eigengap")
    w, V = eigenbasis(A)
    _, Vt = eigenbasis(A_tilde)
    v2, vt2 = V[:, 1], Vt[:, 1]
    lhs = float(min(np.linalg.norm(vt2 - v2), np.linalg.norm(vt2 + v2)))
    e2 = spectral_norm(Atm - Am)
    gap = float(w[1] - w[2])
    params = {"gap": gap, "E_2": e2, "slack_factor": slack_factor}
    if gap <= GAP_FLOOR:
        return BoundReport("stewart", lhs, 0.0, gap, False, params,
                           "eigengap collapsed; bound not evaluated")
    rhs = e2 / gap + slack_factor * e2 ** 2
    return BoundReport("stewart", lhs, rhs, gap, holds(lhs, rhs), params,
                       "heuristic: the second-order constant is a chosen slack factor")


def _alphas(w, wt, k):
    N = w.size
    if not 1 <= k < N:
        raise ValueError(f"k={k} out of range for N={N}")
    alpha = float(min(w[k - 1] - w[k], w[k - 1]))
    alpha_tilde = float(min(abs(wt[k - 1] - w[k]), wt[k - 1]))
    return alpha, alpha_tilde


def _spectral_setup(A, A_tilde, k):
    Am, Atm = _pair(A, A_tilde)
    w, V = eigenbasis(A)
    wt, Vt = eigenbasis(A_tilde)
    alpha, alpha_tilde = _alphas(w, wt, k)
    E = Atm - Am
    params = {"k": k, "alpha_tilde": alpha_tilde, "separation": float(wt[k - 1] - w[k]),
              "E_fro": float(np.linalg.norm(E))}
    return Am, w, V[:, :k], wt, Vt[:, :k], alpha, E, params


def _collapsed(tags, alpha, params):
    note = f"alpha={alpha:.3e} <= {GAP_FLOOR:g}; unverifiable"
    return tuple(BoundReport(t, 0.0, 0.0, alpha, False, params, note) for t in tags)


def check_sin_theta(A, A_tilde, k: int):
    """Residual sin-theta bound and the projector-distance corollary.

    alpha = min(lambda_k - lambda_{k+1}, lambda_k) from A; the variant built
    from the perturbed k-th eigenvalue is recorded as ``alpha_tilde``.
    """
    Am, w, Vk, wt, Vtk, alpha, E, params = _spectral_setup(A, A_tilde, k)
    if alpha <= GAP_FLOOR:
        return _collapsed(("sin_theta", "projection"), alpha, params)
    cmp = compare(Vk, Vtk)
    resid = float(np.linalg.norm(Am @ Vtk - Vtk * wt[:k]))
    rhs1 = resid / alpha
    rhs2 = math.sqrt(2.0) * params["E_fro"] / alpha
    p1 = dict(params, residual_fro=resid, max_angle=cmp.max_angle)
    r1 = BoundReport("sin_theta", cmp.sin_theta_fro, rhs1, alpha,
                     holds(cmp.sin_theta_fro, rhs1), p1)
    r2 = BoundReport("projection", cmp.proj_dist_fro, rhs2, alpha,
                     holds(cmp.proj_dist_fro, rhs2), dict(params))
    return r1, r2


def check_embedding(A, A_tilde, k: int):
    """Procrustes-aligned embedding distance, whole matrix (2-norm) and worst row."""
    _, _, Vk, _, Vtk, alpha, E, params = _spectral_setup(A, A_tilde, k)
    if alpha <= GAP_FLOOR:
        return _collapsed(("procrustes_2norm", "row_coords"), alpha, params)
    cmp = compare(Vk, Vtk)
    rhs = (1.0 + math.sqrt(2.0)) * params["E_fro"] / alpha
    row_ok = cmp.max_row_dist <= cmp.embed_dist_2 * (1.0 + SLACK_RTOL) + SLACK_RTOL
    r1 = BoundReport("procrustes_2norm", cmp.embed_dist_2, rhs, alpha,
                     holds(cmp.embed_dist_2, rhs), dict(params))
    notes = "" if row_ok else "row distance exceeds matrix 2-norm distance"
    r2 = BoundReport("row_coords", cmp.max_row_dist, rhs, alpha,
                     holds(cmp.max_row_dist, rhs) and row_ok,
                     dict(params, row_le_matrix=bool(row_ok)), notes)
    return r1, r2


def _as_data(X):
    return X if isinstance(X, DataMatrix) else DataMatrix(X)


def check_cs_affinity(X, op: MeasurementOperator, sigma=None):
    """Entrywise and Frobenius affinity error after compression, from the measured RIP constant.

    Returns ``(cs_affinity, cs_frobenius)``. Both affinities use the
    bandwidth resolved on the uncompressed data.
    """
    X = _as_data(X)
    sigma = resolve_sigma(X, sigma)
    rip = empirical_rip_delta(X, op)
    A = affinity(X, sigma).A
    At = affinity(measure(X, op), sigma).A
    C = float(pairwise_sqdist(X).max()) / (2.0 * sigma)
    diff = np.abs(At - A)
    per_entry, capped = _expm1_capped(2.0 * rip.delta_emp * C)
    N = X.N
    params = {"delta_emp": rip.delta_emp, "C": C, "sigma": sigma, "m": op.m, "n": op.n,
              "seed": op.seed, "worst_pair": list(rip.worst_pair), "N": N}
    note = "rhs capped at float max" if capped else ""
    lhs1 = float(diff.max())
    lhs2 = float(np.linalg.norm(At - A))
    rhs2 = min(N * per_entry, sys.float_info.max)
    return (BoundReport("cs_affinity", lhs1, per_entry, None, holds(lhs1, per_entry), params, note),
            BoundReport("cs_frobenius", lhs2, rhs2, None, holds(lhs2, rhs2), dict(params), note))


def check_mc_affinity(X, Xhat, sigma=None, p: Optional[float] = None,
                      delta_noise: Optional[float] = None) -> BoundReport:
    """Entrywise affinity error after completion, driven by gamma = ||X - Xhat||_F.

    The exponent keeps the quadratic 2 gamma^2 / sigma term so the bound
    holds without a small-gamma assumption.
    """
    X = _as_data(X)
    Xh = as_matrix(Xhat.X if isinstance(Xhat, DataMatrix) else Xhat, "Xhat")
    if Xh.shape != X.X.shape:
        raise ValueError(f"X and Xhat differ in shape: {X.X.shape} vs {Xh.shape}")
    sigma = resolve_sigma(X, sigma)
    gamma = float(np.linalg.norm(X.X - Xh))
    C = 4.0 * math.sqrt(float(pairwise_sqdist(X).max())) / (2.0 * sigma)
    A = affinity(X, sigma).A
    Ah = affinity(Xh, sigma).A
    lhs = float(np.abs(Ah - A).max())
    rhs, capped = _expm1_capped(2.0 * gamma * C + 2.0 * gamma ** 2 / sigma)
    params = {"gamma_emp": gamma, "C": C, "sigma": sigma, "N": X.N, "n": X.n}
    notes = "rhs capped at float max" if capped else ""
    if p is not None and delta_noise is not None:
        g_th = completion_error_bound(p, X.N, X.n, delta_noise)
        rhs_th, _ = _expm1_capped(2.0 * g_th * C + 2.0 * g_th ** 2 / sigma)
        params.update(p=p, delta_noise=delta_noise, gamma_theoretical=g_th,
                      rhs_theoretical=rhs_th)
        if rhs_th > rhs:
            notes = (notes + "; " if notes else "") + (
                f"theoretical rhs exceeds empirical rhs by a factor {rhs_th / max(rhs, 1e-300):.3g}")
    return BoundReport("mc_affinity", lhs, rhs, None, holds(lhs, rhs), params, notes)

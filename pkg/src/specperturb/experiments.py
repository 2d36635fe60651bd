"""Seeded trial runners and parameter sweeps built from the library pieces.

Trial ``i`` of a run with base seed ``b`` always uses seed ``b + i``, and
results are collected in trial order, so the worker count never changes
the output.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from .affinity import DataMatrix, affinity, median_sigma, normalize_affinity
from .bounds import BoundReport, check_cs_affinity, check_embedding, check_mc_affinity, check_sin_theta
from .completion import PartialMatrix, sample_mask, soft_impute
from .embedding import (KMEANS_RESTARTS, cluster_embedding, eigenbasis, misclassification_rate,
                        spectral_embed)
from .numkernel import SeededRng
from .sensing import MeasurementOperator, measure
from .subspace import canonical_angles, compare
from .synthgen import (BlockAffinitySpec, LowRankSpec, SparseCloudSpec, block_affinity,
                       lowrank_images, sparse_cloud)


def worker_count() -> int:
    raw = os.environ.get("SPECPERTURB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"SPECPERTURB_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError("SPECPERTURB_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def run_trials(fn: Callable[[int], object], trials: int, base_seed: int) -> list:
    seeds = [base_seed + i for i in range(trials)]
    workers = min(worker_count(), max(trials, 1))
    if workers == 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def subseeds(seed: int, count: int) -> List[int]:
    """Independent 63-bit seeds derived from one trial seed."""
    return [int(x >> np.uint64(1)) for x in SeededRng(seed).next_uint64(count)]


@dataclass(frozen=True)
class SweepRow:
    value: float
    mean: float
    std: float
    trials: int


def summarize(value, samples) -> SweepRow:
    a = np.asarray(samples, dtype=np.float64)
    return SweepRow(float(value), float(a.mean()), float(a.std()), int(a.size))


def inversions(means: Sequence[float], increasing: bool = False, tol: float = 1e-12) -> int:
    """Number of adjacent steps that go the wrong way."""
    d = np.diff(np.asarray(means, dtype=np.float64))
    return int(np.sum(d < -tol) if increasing else np.sum(d > tol))


# block affinities -----------------------------------------------------------

def block_packs(sizes, eps: float, seed: int):
    W0, labels = block_affinity(BlockAffinitySpec(tuple(sizes), 0.0, seed))
    W1, _ = block_affinity(BlockAffinitySpec(tuple(sizes), eps, seed))
    return normalize_affinity(W0), normalize_affinity(W1), labels


def second_vector_angle(seed: int, sizes=(15, 15), eps: float = 0.1) -> float:
    """Angle between the second eigenvector spans of a block affinity before and after noise."""
    A, At, _ = block_packs(sizes, eps, seed)
    _, V = eigenbasis(A)
    _, Vt = eigenbasis(At)
    return float(canonical_angles(V[:, 1:2], Vt[:, 1:2])[-1])


def second_vector_vs_span(seed: int, sizes=(10, 10, 10), eps: float = 0.1):
    """``(min_sign ||v2~ - v2||, largest angle between span{v2,v3} spans)``."""
    A, At, _ = block_packs(sizes, eps, seed)
    _, V = eigenbasis(A)
    _, Vt = eigenbasis(At)
    v2, vt2 = V[:, 1], Vt[:, 1]
    dist = min(np.linalg.norm(vt2 - v2), np.linalg.norm(vt2 + v2))
    return float(dist), float(canonical_angles(V[:, 1:3], Vt[:, 1:3])[-1])


# compressed clustering ------------------------------------------------------

@dataclass(frozen=True)
class CloudSetup:
    N: int = 100
    n: int = 100
    s: int = 3
    k: int = 2
    noise: float = 0.05
    drop_first: bool = False
    restarts: int = KMEANS_RESTARTS

    def spec(self, seed: int) -> SparseCloudSpec:
        b, p = subseeds(seed, 2)
        return SparseCloudSpec(self.N, self.n, self.s, self.k, self.noise, b, p)


def _cluster_rho(data: DataMatrix, sigma: float, k: int, drop_first: bool, seed: int,
                 restarts: int) -> float:
    emb = spectral_embed(affinity(data, sigma), k, drop_first)
    assignment = cluster_embedding(emb, k, SeededRng(seed), restarts)
    return misclassification_rate(assignment.labels, data.labels)


def compressed_rho(setup: CloudSetup, m: int, seed: int) -> float:
    """Misclassification after clustering m Gaussian measurements of a sparse cloud."""
    X = sparse_cloud(setup.spec(seed))
    op = MeasurementOperator.from_seed(m, setup.n, subseeds(seed, 3)[2])
    Y = measure(X, op)
    return _cluster_rho(Y, median_sigma(Y), setup.k, setup.drop_first, seed, setup.restarts)


def sweep_measurements(ms: Sequence[int], trials: int, base_seed: int,
                       setup: CloudSetup = CloudSetup(k=3)) -> List[SweepRow]:
    rows = []
    for m in ms:
        rhos = run_trials(lambda s: compressed_rho(setup, m, s), trials, base_seed)
        rows.append(summarize(m, rhos))
    return rows


# completion + clustering ----------------------------------------------------

@dataclass(frozen=True)
class LowRankSetup:
    N: int = 1000
    n: int = 500
    r: int = 3
    k: int = 3
    noise: float = 0.1
    p: float = 0.1
    restarts: int = KMEANS_RESTARTS

    def spec(self, seed: int, extra_rank: int = 0) -> LowRankSpec:
        return LowRankSpec(self.N, self.n, self.r, self.k, self.noise, subseeds(seed, 1)[0],
                           extra_rank=extra_rank)


def complete_data(X: DataMatrix, p: float, seed: int, engine: str = "auto",
                  lambda_floor: float = 0.0, steps: int = 10):
    """Complete a random fraction p of X.

    A positive ``lambda_floor`` replaces the default schedule by ``steps``
    geometric values from sigma_1/2 down to lambda_floor * sigma_1.
    """
    mask = sample_mask(X.N, X.n, p, SeededRng(subseeds(seed, 2)[1]))
    observed = PartialMatrix.from_dense(X.X, mask)
    schedule = None
    if lambda_floor > 0:
        sigma1 = float(np.linalg.norm(observed.dense(), 2))
        schedule = np.geomspace(sigma1 / 2.0, lambda_floor * sigma1, steps)
    result = soft_impute(observed, schedule, engine=engine)
    return X.with_X(result.Xhat), result


def completion_rho(setup: LowRankSetup, seed: int, extra_rank: int = 0) -> float:
    """Misclassification after completing a fraction p of a low-rank data matrix.

    The bandwidth is the median on the completed data; the first k
    eigenvectors are clustered.
    """
    X = lowrank_images(setup.spec(seed, extra_rank))
    Xhat, _ = complete_data(X, setup.p, seed)
    return _cluster_rho(Xhat, median_sigma(Xhat), setup.k, False, seed, setup.restarts)


def sweep_rank(extra_ranks: Sequence[int], trials: int, base_seed: int,
               setup: LowRankSetup = LowRankSetup()) -> List[SweepRow]:
    return [summarize(setup.r + e, run_trials(lambda s: completion_rho(setup, s, e), trials,
                                              base_seed)) for e in extra_ranks]


def sweep_fraction(ps: Sequence[float], trials: int, base_seed: int,
                   setup: LowRankSetup = LowRankSetup()) -> List[SweepRow]:
    rows = []
    for p in ps:
        st = LowRankSetup(setup.N, setup.n, setup.r, setup.k, setup.noise, p, setup.restarts)
        rows.append(summarize(p, run_trials(lambda s: completion_rho(st, s), trials, base_seed)))
    return rows


# completion + compression, embedding error ----------------------------------

@dataclass(frozen=True)
class CombinedSetup:
    N: int = 1000
    n: int = 1000
    s: int = 100
    k: int = 3
    noise: float = 0.3
    p: float = 0.1
    # a lower floor lets the iterate's rank grow towards s and one completion
    # takes minutes instead of seconds
    lambda_floor: float = 0.05
    lambda_steps: int = 6


def embedding_error_curve(setup: CombinedSetup, ms: Sequence[int], seed: int) -> List[float]:
    """||V~_k - V_k Q||_2 for each m; one completion per seed, shared across m.

    V_k comes from the full data, V~_k from m measurements of the completed
    data, both with the bandwidth of the full data. Operators share one seed,
    so a smaller m uses the leading rows of a larger operator.
    """
    b, p, op_seed = subseeds(seed, 3)
    X = sparse_cloud(SparseCloudSpec(setup.N, setup.n, setup.s, setup.k, setup.noise, b, p))
    sigma = median_sigma(X)
    _, V = eigenbasis(affinity(X, sigma))
    Xhat, _ = complete_data(X, setup.p, seed, lambda_floor=setup.lambda_floor,
                            steps=setup.lambda_steps)
    out = []
    for m in ms:
        Y = measure(Xhat, MeasurementOperator.from_seed(m, setup.n, op_seed))
        _, Vt = eigenbasis(affinity(Y, sigma))
        out.append(compare(V[:, :setup.k], Vt[:, :setup.k]).embed_dist_2)
    return out


def sweep_embedding_error(ms: Sequence[int], trials: int, base_seed: int,
                          setup: CombinedSetup = CombinedSetup()) -> List[SweepRow]:
    curves = np.array(run_trials(lambda s: embedding_error_curve(setup, ms, s), trials,
                                 base_seed))
    return [summarize(m, curves[:, j]) for j, m in enumerate(ms)]


# randomized inequality instances ---------------------------------------------

SUITE_KINDS = ("blocks", "noisy", "compressed", "completed")


def _suite_instance(kind: str, seed: int) -> List[BoundReport]:
    rng = SeededRng(seed)
    if kind == "blocks":
        nb = 2 + int(rng.integers(4, 1)[0])
        sizes = tuple(int(x) for x in 5 + rng.integers(30, nb))
        eps = float(0.01 + 0.3 * rng.uniform(1)[0])
        A, At, _ = block_packs(sizes, eps, seed)
        k = nb
        return list(check_sin_theta(A, At, k)) + list(check_embedding(A, At, k))
    if kind == "noisy":
        N = 20 + int(rng.integers(120, 1)[0])
        k = 2 + int(rng.integers(3, 1)[0])
        X = sparse_cloud(SparseCloudSpec(N, 30, 3, k, 0.2, *subseeds(seed, 2)))
        sigma = median_sigma(X)
        scale = float(10 ** (-3 + 2 * rng.uniform(1)[0]))
        Xt = X.X + scale * rng.normal(X.N * X.n).reshape(X.N, X.n)
        A, At = affinity(X, sigma), affinity(Xt, sigma)
        return list(check_sin_theta(A, At, k)) + list(check_embedding(A, At, k))
    if kind == "compressed":
        N = 20 + int(rng.integers(120, 1)[0])
        k = 2 + int(rng.integers(2, 1)[0])
        X = sparse_cloud(SparseCloudSpec(N, 60, 4, k, 0.2, *subseeds(seed, 2)))
        m = int(8 + rng.integers(120, 1)[0])
        op = MeasurementOperator.from_seed(m, X.n, seed)
        sigma = median_sigma(X)
        reports = list(check_cs_affinity(X, op, sigma))
        A, At = affinity(X, sigma), affinity(measure(X, op), sigma)
        return reports + list(check_sin_theta(A, At, k)) + list(check_embedding(A, At, k))
    if kind == "completed":
        N = 30 + int(rng.integers(90, 1)[0])
        n = 12 + int(rng.integers(20, 1)[0])
        r = 2 + int(rng.integers(2, 1)[0])
        X = lowrank_images(LowRankSpec(N, n, r, r, 0.1, seed, extra_rank=1))
        p = float(0.4 + 0.5 * rng.uniform(1)[0])
        mask = sample_mask(N, n, p, rng)
        res = soft_impute(PartialMatrix.from_dense(X.X, mask), max_iter=200)
        sigma = median_sigma(X)
        reports = [check_mc_affinity(X, res.Xhat, sigma, p=mask.p,
                                     delta_noise=res.observed_residual)]
        A, At = affinity(X, sigma), affinity(res.Xhat, sigma)
        return reports + list(check_sin_theta(A, At, r)) + list(check_embedding(A, At, r))
    raise ValueError(f"unknown instance kind {kind!r}")


def theorem_suite(instances: int = 500, base_seed: int = 0):
    """Run ``instances`` randomized checks cycling through :data:`SUITE_KINDS`.

    Returns a list of ``(kind, seed, reports)``. Reports whose eigengap
    collapsed are kept; callers filter on ``alpha``.
    """
    def one(seed):
        kind = SUITE_KINDS[(seed - base_seed) % len(SUITE_KINDS)]
        return kind, seed, _suite_instance(kind, seed)

    return run_trials(one, instances, base_seed)

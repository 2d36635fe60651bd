import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specperturb.affinity import normalize_affinity
from specperturb.embedding import cluster_pipeline
from specperturb.numkernel import SeededRng, sym_eig
from specperturb.synthgen import (BlockAffinitySpec, LowRankSpec, SparseCloudSpec, block_affinity,
                                  lowrank_images, orthogonal_matrix, sparse_cloud)


def test_exact_blocks():
    W, labels = block_affinity(BlockAffinitySpec((2, 1), eps=0.0))
    assert np.array_equal(W, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert labels.tolist() == [0, 0, 1]
    w = sym_eig(normalize_affinity(W).A).eigenvalues
    assert np.allclose(w, [1, 1, 0], atol=1e-14)


def test_singleton_blocks_give_identity():
    W, _ = block_affinity(BlockAffinitySpec((1, 1, 1), eps=0.0))
    A = normalize_affinity(W).A
    assert np.array_equal(A, np.eye(3))
    assert np.allclose(sym_eig(A).eigenvalues, 1.0)


def test_block_noise_is_bounded_and_seeded():
    spec = BlockAffinitySpec((4, 4), eps=0.2, seed=3)
    W, labels = block_affinity(spec)
    base = (labels[:, None] == labels[None, :]).astype(float)
    E = W - base
    assert np.array_equal(W, W.T)
    assert E.min() >= 0.0 and E.max() <= 0.2
    assert np.array_equal(W, block_affinity(spec)[0])
    assert not np.array_equal(W, block_affinity(BlockAffinitySpec((4, 4), 0.2, 4))[0])


def test_block_spec_validation():
    for sizes, eps in (((), 0.1), ((0, 2), 0.1), ((1,), 0.1), ((2, 2), -0.1)):
        with pytest.raises(ValueError):
            BlockAffinitySpec(sizes, eps)


def test_orthogonal_matrix():
    Q = orthogonal_matrix(7, SeededRng(2))
    assert np.allclose(Q.T @ Q, np.eye(7), atol=1e-12)
    assert np.array_equal(Q, orthogonal_matrix(7, SeededRng(2)))


def test_noiseless_cloud_has_identical_cluster_rows():
    X = sparse_cloud(SparseCloudSpec(N=20, n=12, s=3, k=2, noise=0.0))
    for c in range(2):
        rows = X.X[X.labels == c]
        assert np.allclose(rows, rows[0], atol=1e-14)
    _, _, rho = cluster_pipeline(X, None, 2)
    assert rho == 0.0


def test_cloud_is_sparse_in_basis():
    spec = SparseCloudSpec(N=30, n=20, s=4, k=3, noise=0.3)
    X, B = sparse_cloud(spec, return_basis=True)
    Y = X.X @ B.T
    assert np.all(np.sum(np.abs(Y) > 1e-12, axis=1) <= 4)
    for i, c in enumerate(X.labels):
        outside = np.delete(Y[i], np.arange(c * 4, (c + 1) * 4))
        assert np.all(np.abs(outside) <= 1e-12)


def test_cloud_centers_are_equidistant():
    X, B = sparse_cloud(SparseCloudSpec(N=6, n=9, s=3, k=3, noise=0.0), return_basis=True)
    centers = X.X[[0, 2, 4]]
    d = [np.linalg.norm(centers[i] - centers[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    assert np.allclose(d, np.sqrt(6))


def test_cloud_spec_validation():
    with pytest.raises(ValueError, match="disjoint"):
        SparseCloudSpec(N=10, n=5, s=3, k=2)
    with pytest.raises(ValueError):
        SparseCloudSpec(N=10, n=5, s=0, k=1)
    with pytest.raises(ValueError):
        SparseCloudSpec(N=2, n=5, s=1, k=3)


def test_lowrank_noiseless_rows():
    X = lowrank_images(LowRankSpec(N=12, n=8, r=3, k=3, noise=0.0))
    assert len(np.unique(np.round(X.X, 12), axis=0)) == 3
    assert np.linalg.matrix_rank(X.X) == 3


def test_lowrank_rank_is_exact():
    X = lowrank_images(LowRankSpec(N=50, n=30, r=4, k=2, noise=0.3, seed=5))
    s = np.linalg.svd(X.X, compute_uv=False)
    assert int(np.sum(s > 1e-10 * s[0])) == 4


def test_rank_inflation_adds_directions():
    spec = LowRankSpec(N=50, n=30, r=3, k=3, seed=1, extra_rank=4)
    s = np.linalg.svd(lowrank_images(spec).X, compute_uv=False)
    assert int(np.sum(s > 1e-10 * s[0])) == 7


def test_lowrank_spec_validation():
    for kwargs in (dict(r=0), dict(r=9), dict(k=4), dict(extra_rank=6), dict(extra_decay=0.0)):
        args = dict(N=10, n=8, r=3, k=3)
        args.update(kwargs)
        with pytest.raises(ValueError):
            LowRankSpec(**args)


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 30), n=st.integers(2, 20), data=st.data(), seed=st.integers(0, 2**32))
def test_property_generators_are_deterministic(N, n, data, seed):
    s = data.draw(st.integers(1, n))
    k = data.draw(st.integers(1, min(N, n // s)))
    spec = SparseCloudSpec(N=N, n=n, s=s, k=k, noise=0.1, basis_seed=seed, point_seed=seed + 1)
    assert np.array_equal(sparse_cloud(spec).X, sparse_cloud(spec).X)
    r = data.draw(st.integers(1, min(N, n)))
    lr = LowRankSpec(N=N, n=n, r=r, k=data.draw(st.integers(1, r)), seed=seed)
    a = lowrank_images(lr)
    assert np.array_equal(a.X, lowrank_images(lr).X)
    assert np.linalg.matrix_rank(a.X) <= r

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specperturb.affinity import DataMatrix, affinity, normalize_affinity
from specperturb.embedding import (cluster_pipeline, kmeans, misclassification_rate,
                                   spectral_embed)
from specperturb.numkernel import SeededRng, gaussian_matrix
from specperturb.synthgen import BlockAffinitySpec, block_affinity


def brute_force_rho(labels, reference):
    """Oracle: try every relabelling of ``labels``."""
    labels, reference = np.asarray(labels), np.asarray(reference)
    alphabet = sorted(set(labels) | set(reference))
    best = 1.0
    for perm in itertools.permutations(alphabet):
        mapping = dict(zip(alphabet, perm))
        mapped = np.array([mapping[v] for v in labels])
        best = min(best, float(np.mean(mapped != reference)))
    return best


def test_identity_embedding_is_orthonormal():
    emb = spectral_embed(normalize_affinity(np.eye(3) + 0.0), 2)
    assert np.allclose(emb.eigenvalues, [1.0, 1.0])
    assert np.allclose(emb.Vk.T @ emb.Vk, np.eye(2), atol=1e-10)


def test_two_point_embedding():
    emb = spectral_embed(normalize_affinity(np.ones((2, 2))), 1)
    assert emb.eigenvalues[0] == pytest.approx(1.0)
    assert np.allclose(emb.Vk[:, 0], [2 ** -0.5, 2 ** -0.5])
    assert emb.alpha == pytest.approx(1.0)


def test_block_diagonal_has_one_unit_eigenvalue_per_block():
    W, _ = block_affinity(BlockAffinitySpec((4, 5, 6), eps=0.0))
    emb = spectral_embed(normalize_affinity(W), 3)
    assert np.allclose(emb.spectrum[:3], 1.0, atol=1e-12)
    assert np.all(emb.spectrum[3:] < 1.0 - 1e-6)


def test_block_diagonal_rows_are_constant_per_block():
    W, labels = block_affinity(BlockAffinitySpec((4, 5, 6), eps=0.0))
    emb = spectral_embed(normalize_affinity(W), 3)
    for c in range(3):
        rows = emb.Vk[labels == c]
        assert np.max(np.abs(rows - rows[0])) <= 1e-8


def test_drop_first_shifts_selection():
    X = gaussian_matrix(12, 3, SeededRng(2))
    p = affinity(X, 1.0)
    full = spectral_embed(p, 3)
    shifted = spectral_embed(p, 2, drop_first=True)
    assert np.allclose(full.Vk[:, 1:], shifted.Vk)
    w = full.spectrum
    assert shifted.alpha == pytest.approx(w[2] - w[3])


def test_spectral_embed_rejects_bad_k():
    p = normalize_affinity(np.eye(3))
    for k, drop in ((0, False), (3, False), (2, True)):
        with pytest.raises(ValueError):
            spectral_embed(p, k, drop)


def test_kmeans_separated_points():
    pts = np.array([[0.0], [0.1], [10.0], [10.1]])
    a = kmeans(pts, 2, SeededRng(0))
    assert a.labels[0] == a.labels[1] != a.labels[2] == a.labels[3]


def test_kmeans_single_cluster():
    pts = gaussian_matrix(20, 3, SeededRng(1))
    a = kmeans(pts, 1, SeededRng(0))
    assert np.allclose(a.centroids[0], pts.mean(axis=0))
    assert a.wcss == pytest.approx(pts.var(axis=0).sum() * 20, rel=1e-12)


def test_kmeans_one_point_per_cluster():
    pts = gaussian_matrix(6, 2, SeededRng(3))
    a = kmeans(pts, 6, SeededRng(0))
    assert sorted(a.labels) == list(range(6))
    assert a.wcss == pytest.approx(0.0, abs=1e-20)


def test_kmeans_rejects_bad_arguments():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 1)), 4, SeededRng(0))
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 1)), 1, SeededRng(0), restarts=0)


def test_kmeans_handles_duplicate_points():
    pts = np.array([[0.0], [0.0], [0.0], [5.0]])
    a = kmeans(pts, 3, SeededRng(0))
    assert set(a.labels) <= {0, 1, 2}
    assert a.wcss == pytest.approx(0.0, abs=1e-20)


def test_misclassification_examples():
    assert misclassification_rate([0, 1, 1, 0], [0, 1, 1, 0]) == 0.0
    assert misclassification_rate([1, 0, 0, 1], [0, 1, 1, 0]) == 0.0
    assert misclassification_rate([0, 0, 1, 0], [0, 0, 1, 1]) == 0.25


def test_misclassification_rejects_bad_input():
    with pytest.raises(ValueError):
        misclassification_rate([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        misclassification_rate(list(range(11)), list(range(11)))


def test_pipeline_separates_blobs():
    rng = SeededRng(5)
    X = np.vstack([gaussian_matrix(20, 2, rng) * 0.1, gaussian_matrix(20, 2, rng) * 0.1 + 5.0])
    labels = np.repeat([0, 1], 20)
    # oracle: the blobs are split by the plane x0 + x1 = 5
    assert np.all((X.sum(axis=1) > 5.0) == labels.astype(bool))
    emb, assignment, rho = cluster_pipeline(DataMatrix(X, labels), None, 2)
    assert rho == 0.0
    assert emb.Vk.shape == (40, 2)


def test_pipeline_three_far_points():
    X = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]])
    _, assignment, rho = cluster_pipeline(X, 1.0, 2, n_clusters=3)
    assert sorted(assignment.labels) == [0, 1, 2]
    assert rho is None


def test_pipeline_is_deterministic():
    X = gaussian_matrix(30, 4, SeededRng(7))
    a = cluster_pipeline(X, None, 3, rng=4)
    b = cluster_pipeline(X, None, 3, rng=4)
    assert np.array_equal(a[0].Vk, b[0].Vk)
    assert np.array_equal(a[1].labels, b[1].labels)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 40), k=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_property_kmeans_invariants(N, k, seed):
    k = min(k, N)
    pts = gaussian_matrix(N, 2, SeededRng(seed))
    a = kmeans(pts, k, SeededRng(seed + 1), restarts=3)
    assert a.labels.min() >= 0 and a.labels.max() < k
    wcss = np.sum((pts - a.centroids[a.labels]) ** 2)
    assert a.wcss == pytest.approx(wcss, abs=1e-10)
    h = np.asarray(a.history)
    assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))


@settings(max_examples=60, deadline=None)
@given(labels=st.lists(st.integers(0, 3), min_size=1, max_size=12), data=st.data())
def test_property_rho_matches_brute_force(labels, data):
    ref = data.draw(st.lists(st.integers(0, 3), min_size=len(labels), max_size=len(labels)))
    rho = misclassification_rate(labels, ref)
    assert rho == pytest.approx(brute_force_rho(labels, ref), abs=1e-12)
    perm = data.draw(st.permutations([0, 1, 2, 3]))
    relabelled = [perm[v] for v in ref]
    assert misclassification_rate(labels, relabelled) == pytest.approx(rho, abs=1e-12)
    assert misclassification_rate(ref, labels) == pytest.approx(rho, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(2, 5), size=st.integers(1, 30), seed=st.integers(0, 2**32))
def test_property_balanced_rho_band(k, size, seed):
    ref = np.repeat(np.arange(k), size)
    labels = SeededRng(seed).integers(k, ref.size)
    assert 0.0 <= misclassification_rate(labels, ref) <= (k - 1) / k + 1e-12


@settings(max_examples=30, deadline=None)
@given(N=st.integers(4, 30), seed=st.integers(0, 2**32))
def test_property_embedding_invariants(N, seed):
    p = affinity(gaussian_matrix(N, 3, SeededRng(seed)), 2.0)
    k = min(3, N - 1)
    emb = spectral_embed(p, k)
    assert np.allclose(emb.Vk.T @ emb.Vk, np.eye(k), atol=1e-10)
    assert np.all(np.diff(emb.eigenvalues) <= 0)
    assert emb.alpha == emb.spectrum[k - 1] - emb.spectrum[k]

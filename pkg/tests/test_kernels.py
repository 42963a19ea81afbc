import numpy as np
import pytest

from chartbeam import backends, kernels
from conftest import random_channels


@pytest.fixture
def csr_graph(rng):
    n = 40
    square = np.zeros((n, n))
    adj = np.zeros((n, n), bool)
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        adj[a, b] = adj[b, a] = True
        square[a, b] = square[b, a] = rng.uniform(0.5, 3.0)
    for _ in range(40):
        i, j = rng.integers(0, n, 2)
        if i != j and not adj[i, j]:
            adj[i, j] = adj[j, i] = True
            square[i, j] = square[j, i] = rng.uniform(0.5, 3.0)
    indptr = np.zeros(n + 1, np.int64)
    indptr[1:] = np.cumsum(adj.sum(1))
    rows, cols = np.nonzero(adj)
    return indptr, cols.astype(np.int64), square[rows, cols], n


def test_backend_env_selection(monkeypatch):
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numpy")
    assert not backends.use_numba()
    monkeypatch.setenv("CHARTBEAM_BACKEND", "auto")
    assert backends.use_numba() == backends.NUMBA_AVAILABLE
    monkeypatch.setenv("CHARTBEAM_BACKEND", "bogus")
    with pytest.raises(ValueError):
        backends.use_numba()


def test_pairwise_backends_agree(rng, monkeypatch):
    h = random_channels(rng, 60, 128)
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numpy")
    via_numpy = kernels.pairwise_pi_distances(h)
    if not backends.NUMBA_AVAILABLE:
        pytest.skip("numba unavailable")
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numba")
    via_numba = kernels.pairwise_pi_distances(h)
    np.testing.assert_allclose(via_numba, via_numpy, atol=1e-12)


def test_dijkstra_backends_agree(csr_graph, monkeypatch):
    indptr, indices, weights, n = csr_graph
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numpy")
    via_python = kernels.dijkstra_all_pairs(indptr, indices, weights, n)
    if not backends.NUMBA_AVAILABLE:
        pytest.skip("numba unavailable")
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numba")
    via_numba = kernels.dijkstra_all_pairs(indptr, indices, weights, n)
    np.testing.assert_allclose(via_numba, via_python, rtol=1e-12)


def test_dijkstra_unreachable_is_inf(monkeypatch):
    monkeypatch.setenv("CHARTBEAM_BACKEND", "numpy")
    indptr = np.array([0, 1, 2, 2], np.int64)
    indices = np.array([1, 0], np.int64)
    weights = np.array([1.0, 1.0])
    d = kernels.dijkstra_all_pairs(indptr, indices, weights, 3)
    assert d[0, 1] == 1.0 and np.isinf(d[0, 2]) and d[2, 2] == 0.0

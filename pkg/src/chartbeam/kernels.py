"""Hot numeric kernels: condensed pairwise distances and all-pairs Dijkstra.

Each kernel has a numba ``@njit`` implementation and a numpy/python
fallback; :mod:`chartbeam.backends` picks the active one at call time.
Inputs are plain arrays so both paths stay trivially swappable.
"""

import heapq

import numpy as np

from .backends import NUMBA_AVAILABLE, use_numba

if NUMBA_AVAILABLE:
    from numba import njit, prange
else:  # pragma: no cover - exercised only without numba
    njit = None
    prange = range


# ---------------------------------------------------------------------------
# pairwise phase-insensitive distances (condensed upper triangle)
# ---------------------------------------------------------------------------

def _pairwise_numpy(hn):
    """Blocked BLAS route: |G|^2 of the normalized Gram matrix."""
    n = hn.shape[0]
    out = np.empty(n * (n - 1) // 2)
    block = 256
    for i0 in range(0, n - 1, block):
        i1 = min(i0 + block, n - 1)
        gram = hn[i0:i1] @ hn[i0 + 1:].conj().T
        for i in range(i0, i1):
            start = i * n - i * (i + 1) // 2 - i - 1
            row = gram[i - i0, i - i0:]
            a2 = row.real * row.real + row.imag * row.imag
            out[start + i + 1:start + n] = np.sqrt(
                np.clip(2.0 - 2.0 * a2, 0.0, None)
            )
    return out


if NUMBA_AVAILABLE:

    @njit(parallel=True, cache=True)
    def _pairwise_numba(hn):
        n = hn.shape[0]
        length = hn.shape[1]
        out = np.empty(n * (n - 1) // 2)
        for i in prange(n - 1):
            start = i * n - i * (i + 1) // 2 - i - 1
            for j in range(i + 1, n):
                acc = 0.0 + 0.0j
                for l in range(length):
                    acc += np.conj(hn[i, l]) * hn[j, l]
                a2 = acc.real * acc.real + acc.imag * acc.imag
                v = 2.0 - 2.0 * a2
                out[start + j] = np.sqrt(v) if v > 0.0 else 0.0
        return out


def pairwise_pi_distances(hn):
    """Condensed pairwise distances of row-normalized complex vectors.

    ``hn`` must have unit-norm rows; entry (i, j) of the implied square
    matrix is sqrt(max(0, 2 - 2*|<hn_i, hn_j>|^2)). Under ``auto`` the
    BLAS route wins (gemm-bound), so it is the default here.
    """
    hn = np.ascontiguousarray(hn, dtype=np.complex128)
    if use_numba(auto_default=False):
        return _pairwise_numba(hn)
    return _pairwise_numpy(hn)


# ---------------------------------------------------------------------------
# all-pairs shortest paths over a CSR graph
# ---------------------------------------------------------------------------

def _dijkstra_all_python(indptr, indices, weights, n):
    out = np.full((n, n), np.inf)
    for src in range(n):
        dist = out[src]
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
    return out


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _dijkstra_source(indptr, indices, weights, src, dist, heap_d, heap_n):
        n = dist.shape[0]
        for i in range(n):
            dist[i] = np.inf
        dist[src] = 0.0
        heap_d[0] = 0.0
        heap_n[0] = src
        size = 1
        while size > 0:
            d = heap_d[0]
            u = heap_n[0]
            size -= 1
            # pop: move last to root, sift down
            heap_d[0] = heap_d[size]
            heap_n[0] = heap_n[size]
            pos = 0
            while True:
                child = 2 * pos + 1
                if child >= size:
                    break
                if child + 1 < size and heap_d[child + 1] < heap_d[child]:
                    child += 1
                if heap_d[child] < heap_d[pos]:
                    heap_d[pos], heap_d[child] = heap_d[child], heap_d[pos]
                    heap_n[pos], heap_n[child] = heap_n[child], heap_n[pos]
                    pos = child
                else:
                    break
            if d > dist[u]:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    # push: append, sift up
                    heap_d[size] = nd
                    heap_n[size] = v
                    pos = size
                    size += 1
                    while pos > 0:
                        parent = (pos - 1) // 2
                        if heap_d[pos] < heap_d[parent]:
                            heap_d[pos], heap_d[parent] = heap_d[parent], heap_d[pos]
                            heap_n[pos], heap_n[parent] = heap_n[parent], heap_n[pos]
                            pos = parent
                        else:
                            break

    @njit(parallel=True, cache=True)
    def _dijkstra_all_numba(indptr, indices, weights, n):
        out = np.empty((n, n))
        cap = indices.shape[0] + 1
        for src in prange(n):
            dist = np.empty(n)
            heap_d = np.empty(cap)
            heap_n = np.empty(cap, dtype=np.int64)
            _dijkstra_source(indptr, indices, weights, src, dist, heap_d, heap_n)
            out[src, :] = dist
        return out


def dijkstra_all_pairs(indptr, indices, weights, n):
    """Shortest-path length matrix (n, n) of a CSR graph, inf if unreachable."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if use_numba():
        return _dijkstra_all_numba(indptr, indices, weights, n)
    return _dijkstra_all_python(indptr, indices, weights, n)

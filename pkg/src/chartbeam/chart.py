"""Channel charting: phase-insensitive distances, Isomap, out-of-sample embedding.

The chart pipeline is pairwise_distances -> knn_graph -> geodesic_distances
-> classical_mds. A built :class:`Chart` embeds new channels through kernel
regression over its stored anchor channels.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceFailureError,
    DisconnectedGraphError,
    ZeroChannelError,
)
from .kernels import dijkstra_all_pairs, pairwise_pi_distances

logger = logging.getLogger(__name__)

ZERO_NORM_FLOOR = 1e-30


def _channel_matrix(channels):
    """Stack ChannelVector objects or raw arrays into an (N, L) complex matrix."""
    if isinstance(channels, np.ndarray) and channels.ndim == 2:
        return np.ascontiguousarray(channels, dtype=np.complex128)
    rows = [np.asarray(getattr(c, "values", c), dtype=np.complex128) for c in channels]
    return np.ascontiguousarray(rows)


def pi_distance(h1, h2):
    """Phase- and scale-insensitive distance between two channel vectors.

    d = sqrt(max(0, 2 - 2*|<h1/||h1||, h2/||h2||>|^2)), range [0, sqrt(2)].
    """
    a = np.asarray(getattr(h1, "values", h1), dtype=np.complex128).ravel()
    b = np.asarray(getattr(h2, "values", h2), dtype=np.complex128).ravel()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM_FLOOR or nb < ZERO_NORM_FLOOR:
        raise ZeroChannelError()
    c = np.vdot(a, b) / (na * nb)
    mag2 = c.real * c.real + c.imag * c.imag
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * mag2)))


@dataclass
class DistanceMatrix:
    """Symmetric nonnegative distances stored condensed (upper triangle)."""

    values: np.ndarray  # length n*(n-1)//2
    n: int

    def __post_init__(self):
        expected = self.n * (self.n - 1) // 2
        if self.values.shape != (expected,):
            raise ValueError(
                f"condensed length {self.values.shape} does not match n={self.n}"
            )

    def square(self):
        """Expand to a dense (n, n) matrix with zero diagonal."""
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        out[iu] = self.values
        out[(iu[1], iu[0])] = self.values
        return out

    @classmethod
    def from_square(cls, m):
        m = np.asarray(m, dtype=np.float64)
        n = m.shape[0]
        return cls(m[np.triu_indices(n, 1)].copy(), n)


def pairwise_distances(channels):
    """Condensed matrix of pi_distance over all channel pairs."""
    h = _channel_matrix(channels)
    if h.shape[0] < 2:
        raise ValueError("need at least 2 channels")
    norms = np.linalg.norm(h, axis=1)
    bad = np.nonzero(norms < ZERO_NORM_FLOOR)[0]
    if bad.size:
        raise ZeroChannelError(index=int(bad[0]))
    hn = h / norms[:, None]
    return DistanceMatrix(pairwise_pi_distances(hn), h.shape[0])


@dataclass
class NeighborGraph:
    """Undirected weighted k-NN graph in CSR form."""

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    n: int
    k: int

    def degree(self, i):
        return int(self.indptr[i + 1] - self.indptr[i])


def knn_graph(dm, k):
    """Symmetrized (edge union) k-nearest-neighbor graph of a DistanceMatrix.

    Ties are broken toward the lower node index so the graph is
    bit-reproducible under permutation-stable inputs.
    """
    n = dm.n
    if not 1 <= k < n:
        raise ValueError(f"k={k} outside [1, {n - 1}]")
    square = dm.square()
    np.fill_diagonal(square, np.inf)
    adj = np.zeros((n, n), dtype=bool)
    order_cols = np.arange(n)
    for i in range(n):
        order = np.lexsort((order_cols, square[i]))
        adj[i, order[:k]] = True
    adj |= adj.T
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(adj.sum(axis=1))
    indices = np.nonzero(adj)[1].astype(np.int64)
    rows = np.nonzero(adj)[0]
    weights = square[(rows, indices)].astype(np.float64)
    return NeighborGraph(indptr, indices, weights, n, k)


def _component_sizes(graph):
    seen = np.zeros(graph.n, dtype=bool)
    sizes = []
    for start in range(graph.n):
        if seen[start]:
            continue
        size = 0
        queue = deque([start])
        seen[start] = True
        while queue:
            u = queue.popleft()
            size += 1
            for e in range(graph.indptr[u], graph.indptr[u + 1]):
                v = graph.indices[e]
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        sizes.append(size)
    return sizes


def geodesic_distances(graph):
    """All-pairs shortest-path lengths over the neighbor graph."""
    sizes = _component_sizes(graph)
    if len(sizes) > 1:
        raise DisconnectedGraphError(sizes)
    full = dijkstra_all_pairs(graph.indptr, graph.indices, graph.weights, graph.n)
    return DistanceMatrix(full[np.triu_indices(graph.n, 1)].copy(), graph.n)


# ---------------------------------------------------------------------------
# classical MDS via shifted subspace iteration
# ---------------------------------------------------------------------------

_SOLVER_SEED = 7  # fixed start vectors keep the embedding deterministic


def _power_estimate(matvec, n, iters, seed):
    """Largest-magnitude eigenvalue estimate by plain power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam = float(v @ matvec(v))
    return lam


def _top_eigenpairs(b, want, tol=1e-8, max_iter=500):
    """Top-`want` algebraic eigenpairs of the symmetric matrix b.

    Subspace iteration on a block of want+2 vectors with locking of
    converged pairs. A nonnegative spectral shift (estimated from two
    power iterations) maps the algebraically largest eigenvalues onto the
    dominant ones; the shifted operator is applied twice per sweep, which
    squares the convergence ratio at the same matvec cost per sweep.
    Residuals are measured relative to the spectral scale of b.
    """
    n = b.shape[0]
    block = min(want + 2, n)
    lam_top = _power_estimate(lambda v: b @ v, n, 30, _SOLVER_SEED)
    lam_bottom = _power_estimate(lambda v: b @ v - lam_top * v, n, 30, _SOLVER_SEED + 1)
    lam_min = lam_bottom + lam_top
    # any s > (|lam_min| - lam_block)/2 puts the wanted eigenvalues on top
    # in magnitude; 0.7*|lam_min| keeps headroom without flattening gaps
    shift = 0.7 * max(0.0, -lam_min) + 1e-6 * abs(lam_top)
    scale = max(abs(lam_top), abs(lam_min), 1e-30)

    rng = np.random.default_rng(_SOLVER_SEED)
    x = rng.standard_normal((n, block))
    x, _ = np.linalg.qr(x)
    locked_v = np.zeros((n, 0))
    locked_w = []
    last_res = np.inf
    for iteration in range(1, max_iter + 1):
        y = b @ x + shift * x
        y = b @ y + shift * y
        if locked_v.shape[1]:
            y -= locked_v @ (locked_v.T @ y)
        x, _ = np.linalg.qr(y)
        bx = b @ x
        t = x.T @ bx
        t = 0.5 * (t + t.T)
        ritz, rot = np.linalg.eigh(t)
        order = np.argsort(ritz)[::-1]
        ritz = ritz[order]
        rot = rot[:, order]
        x = x @ rot
        bx = bx @ rot
        scale = max(scale, abs(ritz[0]))
        # lock leading pairs as they converge
        progressed = True
        while progressed and len(locked_w) < want and x.shape[1]:
            lam = ritz[0]
            resid = np.linalg.norm(bx[:, 0] - lam * x[:, 0])
            last_res = resid / scale
            if last_res < tol:
                locked_v = np.hstack([locked_v, x[:, :1]])
                locked_w.append(float(lam))
                x = x[:, 1:]
                bx = bx[:, 1:]
                ritz = ritz[1:]
            else:
                progressed = False
        if len(locked_w) >= want:
            stats = {"iterations": iteration, "residual": float(last_res),
                     "shift": float(shift)}
            return np.array(locked_w), locked_v[:, :want], stats
    raise ConvergenceFailureError(last_res, max_iter)


def classical_mds(dm, dim):
    """Embed a distance matrix into `dim` dimensions (classical MDS).

    Returns a (dim, n) array whose columns are centered. Negative
    eigenvalues of the double-centered Gram matrix are clamped to zero
    with a warning (non-Euclidean input).
    """
    z, _ = classical_mds_with_stats(dm, dim)
    return z


def classical_mds_with_stats(dm, dim):
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n = dm.n
    s2 = dm.square() ** 2
    row_mean = s2.mean(axis=1, keepdims=True)
    grand = s2.mean()
    b = -0.5 * (s2 - row_mean - row_mean.T + grand)
    b = 0.5 * (b + b.T)
    if not np.any(b):
        return np.zeros((dim, n)), {"iterations": 0, "residual": 0.0, "shift": 0.0}
    eigvals, eigvecs, stats = _top_eigenpairs(b, dim)
    if np.any(eigvals < 0):
        logger.warning(
            "clamping %d negative MDS eigenvalues to zero (non-Euclidean input)",
            int(np.sum(eigvals < 0)),
        )
        eigvals = np.clip(eigvals, 0.0, None)
    z = np.sqrt(eigvals)[:, None] * eigvecs.T
    z -= z.mean(axis=1, keepdims=True)
    return z, stats


# ---------------------------------------------------------------------------
# the chart itself
# ---------------------------------------------------------------------------

@dataclass
class Chart:
    """Latent locations plus the anchor channels used to embed new ones."""

    latents: np.ndarray  # (dim, n) float64, columns centered
    anchors: np.ndarray  # (n, L) complex128 training channels
    sigma: float
    k: int
    solver_stats: dict = field(default_factory=dict)
    _anchors_unit: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self):
        return self.latents.shape[0]

    @property
    def n(self):
        return self.latents.shape[1]

    def anchors_unit(self):
        if self._anchors_unit is None:
            norms = np.linalg.norm(self.anchors, axis=1, keepdims=True)
            self._anchors_unit = self.anchors / norms
        return self._anchors_unit


def isomap(channels, k, dim):
    """Full charting pipeline over training channels.

    Composition of pairwise_distances, knn_graph, geodesic_distances and
    classical_mds; the kernel bandwidth sigma is the mean distance to the
    k-th nearest neighbor of the input distances.
    """
    h = _channel_matrix(channels)
    dm = pairwise_distances(h)
    square = dm.square()
    np.fill_diagonal(square, np.inf)
    kth = np.sort(square, axis=1)[:, k - 1]
    sigma = float(kth.mean())
    graph = knn_graph(dm, k)
    geo = geodesic_distances(graph)
    z, stats = classical_mds_with_stats(geo, dim)
    return Chart(latents=z, anchors=h, sigma=sigma, k=k, solver_stats=stats)


def _anchor_distances(chart, h):
    """pi_distance from rows of h (M, L) to every anchor: (M, n)."""
    h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms < ZERO_NORM_FLOOR):
        raise ZeroChannelError(index=int(np.argmin(norms)))
    hn = h / norms[:, None]
    gram = hn @ chart.anchors_unit().conj().T
    mag2 = gram.real**2 + gram.imag**2
    return np.sqrt(np.clip(2.0 - 2.0 * mag2, 0.0, None))


def oos_embed_batch(chart, h):
    """Embed channels (M, L) into the chart via kernel regression.

    Weights are the normalized Gaussian similarities of the
    phase-insensitive distances to the anchors. Rows whose similarities
    all underflow fall back to the nearest anchor's latent location (a
    warning is logged; the fallback is part of the contract).
    """
    d = _anchor_distances(chart, h)
    sigma = max(chart.sigma, 1e-300)
    with np.errstate(divide="ignore", under="ignore"):
        s = np.exp(-(d**2) / (2.0 * sigma**2))
    totals = s.sum(axis=1)
    out = np.empty((d.shape[0], chart.dim))
    dead = totals <= 0.0
    if np.any(dead):
        logger.warning(
            "similarities underflowed for %d channels; using nearest anchor",
            int(dead.sum()),
        )
    for i in range(d.shape[0]):
        if dead[i]:
            out[i] = chart.latents[:, int(np.argmin(d[i]))]
        else:
            out[i] = chart.latents @ (s[i] / totals[i])
    return out


def oos_embed(chart, h):
    """Embed a single channel vector; see oos_embed_batch."""
    arr = np.asarray(getattr(h, "values", h), dtype=np.complex128).ravel()
    return oos_embed_batch(chart, arr[None, :])[0]


# ---------------------------------------------------------------------------
# persistence: latents + a reference to the anchors, never a copy of them
# ---------------------------------------------------------------------------

def save_chart(chart, out_dir, dataset_hash, band, anchor_indices):
    """Write a chart directory: JSON manifest + raw little-endian blobs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    z = np.ascontiguousarray(chart.latents, dtype="<f8")
    z.tofile(out_dir / "latents.f64")
    idx = np.ascontiguousarray(anchor_indices, dtype="<i8")
    idx.tofile(out_dir / "anchor_indices.i64")
    manifest = {
        "kind": "chart",
        "n": chart.n,
        "dim": chart.dim,
        "k": chart.k,
        "sigma": chart.sigma,
        "solver": chart.solver_stats,
        "dataset_hash": dataset_hash,
        "band": band,
        "endianness": "little",
        "files": {"latents": "latents.f64", "anchor_indices": "anchor_indices.i64"},
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def load_chart(chart_dir, dataset):
    """Load a chart directory, rebinding anchors from the given dataset."""
    with open(chart_dir / "manifest.json") as f:
        manifest = json.load(f)
    if manifest.get("kind") != "chart":
        raise ValueError(f"{chart_dir} is not a chart directory")
    if manifest["dataset_hash"] != dataset.content_hash():
        raise ValueError("chart was built from a different dataset")
    n, dim = manifest["n"], manifest["dim"]
    z = np.fromfile(chart_dir / manifest["files"]["latents"], dtype="<f8")
    z = z.reshape(dim, n)
    idx = np.fromfile(chart_dir / manifest["files"]["anchor_indices"], dtype="<i8")
    band = manifest["band"]
    anchors = dataset.channels(band, idx)
    chart = Chart(
        latents=z,
        anchors=anchors,
        sigma=float(manifest["sigma"]),
        k=int(manifest["k"]),
        solver_stats=manifest.get("solver", {}),
    )
    return chart, idx, band

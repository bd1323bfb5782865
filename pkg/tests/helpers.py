"""Shared fixtures: random graphs, planted band-limited signals, synthetic
ratings, and the dense Laplacian oracle the tests check against."""

import numpy as np
import scipy.sparse.csgraph as csgraph

import graphterp as gt
from graphterp.bandlimited import count_in_band, min_unknown_eigenvalue


def dense_normalized_laplacian(n, edges):
    """Independent oracle: build W, D densely and normalize explicitly."""
    w = np.zeros((n, n))
    for i, j, wt in edges:
        w[i, j] = wt
        w[j, i] = wt
    d = w.sum(axis=1)
    dinv = np.zeros(n)
    dinv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    lap = np.diag((d > 0).astype(float)) - (dinv[:, None] * w) * dinv[None, :]
    return lap


def er_graph(n, p, rng, unit_weights=True, connected=True):
    """Erdos-Renyi style graph; redraws until connected when asked."""
    while True:
        mask = np.triu(rng.random((n, n)) < p, k=1)
        ii, jj = np.nonzero(mask)
        weights = np.ones(len(ii)) if unit_weights else rng.uniform(0.2, 2.0, len(ii))
        g = gt.build_graph(n, list(zip(ii.tolist(), jj.tolist(), weights.tolist())))
        if not connected:
            return g
        ncomp, _ = csgraph.connected_components(g.adjacency, directed=False)
        if ncomp == 1 and g.degrees.min() > 0:
            return g


def random_sample_set(n, frac, rng):
    m = max(1, int(np.ceil(frac * n)))
    m = min(m, n - 1)  # keep the unknown set nonempty
    return np.sort(rng.permutation(n)[:m])


def planted_instance(n, p, sample_frac, rng, unit_weights=True):
    """Connected graph + sample set + a signal planted inside the provably
    recoverable band. Returns (graph, lap, basis, samples, omega, f)."""
    g = er_graph(n, p, rng, unit_weights=unit_weights)
    lap = gt.normalized_laplacian(g)
    basis = gt.eigendecompose(lap)
    known = random_sample_set(n, sample_frac, rng)
    mask = np.ones(n, dtype=bool)
    mask[known] = False
    unknown = np.flatnonzero(mask)
    omega = float(np.sqrt(min_unknown_eigenvalue(lap, unknown)))
    k = count_in_band(basis.lambdas, omega)
    assert k >= 1, "connected graph with nonempty S must give a usable band"
    coeffs = rng.standard_normal(k)
    f = basis.U[:, :k] @ coeffs
    samples = gt.SampleSet(n=n, known=known, known_values=f[known])
    return g, lap, basis, samples, omega, f


def synthetic_ratings(num_users, num_items, density, seed, scale=(1.0, 5.0)):
    """Low-rank-plus-noise ratings quantized onto the scale."""
    rng = np.random.default_rng(seed)
    uf = rng.normal(size=(num_users, 3))
    vf = rng.normal(size=(num_items, 3))
    raw = uf @ vf.T
    raw = raw / raw.std()
    rmin, rmax = scale
    mid = 0.5 * (rmin + rmax)
    grid = np.clip(np.round(mid + 1.3 * raw + 0.35 * rng.normal(size=raw.shape)), rmin, rmax)
    mask = rng.random((num_users, num_items)) < density
    # every user and item keeps at least one rating
    for u in range(num_users):
        if not mask[u].any():
            mask[u, rng.integers(num_items)] = True
    for m in range(num_items):
        if not mask[:, m].any():
            mask[rng.integers(num_users), m] = True
    users, items = np.nonzero(mask)
    return gt.RatingMatrix(
        num_users=num_users,
        num_items=num_items,
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        ratings=grid[users, items].astype(np.float64),
        scale=scale,
        user_ids=tuple(str(u + 1) for u in range(num_users)),
        item_ids=tuple(str(m + 1) for m in range(num_items)),
    )


def write_movielens_file(path, rating_matrix):
    """Serialize a RatingMatrix in the tab-separated movielens layout."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, m, r in zip(
            rating_matrix.users, rating_matrix.items, rating_matrix.ratings
        ):
            uid = rating_matrix.user_ids[u] if rating_matrix.user_ids else u + 1
            mid = rating_matrix.item_ids[m] if rating_matrix.item_ids else m + 1
            fh.write(f"{uid}\t{mid}\t{int(r)}\t0\n")

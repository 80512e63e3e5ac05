"""K-means over SAX embeddings, with SSE/silhouette model selection.

Points are collapsed to (unique embedding, multiplicity) pairs before
clustering. Because SAX embeddings take few distinct values, this makes
full-dataset fits and exact silhouette computation cheap; the collapsed
weighted problem is mathematically identical to the raw one (same SSE,
same centroids, k-means++ samples values with the same probabilities).
Collapsing also sorts the unique rows, so results are invariant to the
input order of the points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    max_iters: int = 300
    tol: float = 1e-6
    n_init: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass(frozen=True)
class ClusterModel:
    """Fitted K-means model on embedding vectors.

    ``sse_paths`` holds the per-iteration SSE of every restart (the
    winning restart is ``best_restart``); diagnostics only, not part of
    the serialized form.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    sizes: np.ndarray
    config: ClusterConfig
    sse_paths: tuple = field(default=(), repr=False)
    best_restart: int = 0

    def __post_init__(self):
        k = self.config.k
        if self.centroids.shape[0] != k or len(self.sizes) != k:
            raise ValueError("centroid/size count does not match k")
        if len(self.assignments) and (
            self.assignments.min() < 0 or self.assignments.max() >= k
        ):
            raise ValueError("assignment out of range")
        if np.any(self.sizes <= 0):
            raise ValueError("every cluster must be non-empty")


@dataclass(frozen=True)
class KSelectionReport:
    rows: tuple  # (k, sse, silhouette) ascending in k
    chosen_k: int


def _embedding_matrix(words) -> np.ndarray:
    if isinstance(words, np.ndarray):
        x = np.asarray(words, dtype=float)
        if x.ndim != 2:
            raise ValueError("embedding array must be 2-D")
        return x
    return np.array([w.embedding for w in words], dtype=float)


def _sqdist(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_points, n_centroids)."""
    d2 = (
        (x * x).sum(axis=1)[:, None]
        + (centroids * centroids).sum(axis=1)[None, :]
        - 2.0 * (x @ centroids.T)
    )
    return np.maximum(d2, 0.0)


def _kmeanspp_init(uniq, weights, k, rng) -> np.ndarray:
    """Seeded k-means++ on weighted unique points."""
    n = len(uniq)
    total = weights.sum()
    first = rng.choice(n, p=weights / total)
    centroids = [uniq[first]]
    d2 = _sqdist(uniq, uniq[first][None, :])[:, 0]
    for _ in range(1, k):
        mass = weights * d2
        s = mass.sum()
        if s <= 0.0:
            # all remaining points coincide with chosen centroids
            probs = weights / total
        else:
            probs = mass / s
        idx = rng.choice(n, p=probs)
        centroids.append(uniq[idx])
        d2 = np.minimum(d2, _sqdist(uniq, uniq[idx][None, :])[:, 0])
    return np.array(centroids)


def _weighted_centroids(uniq, weights, assign, k) -> tuple[np.ndarray, np.ndarray]:
    # bincount keeps the accumulation order fixed, so sums are
    # reproducible regardless of BLAS threading
    w_per = np.bincount(assign, weights=weights, minlength=k)
    centroids = np.empty((k, uniq.shape[1]))
    for d in range(uniq.shape[1]):
        centroids[:, d] = np.bincount(assign, weights=weights * uniq[:, d], minlength=k)
    nonzero = w_per > 0
    centroids[nonzero] /= w_per[nonzero, None]
    return centroids, w_per


def _lloyd(uniq, weights, centroids, cfg: ClusterConfig):
    """Weighted Lloyd iterations; returns (centroids, assign, sse, sse_path).

    Runs until the assignment is a fixed point of the current centroids,
    so the returned pair satisfies both halves of the model contract:
    assignments are nearest-centroid and centroids are exact means.
    ``tol`` acts as a safety valve for slow tail convergence.
    """
    k = cfg.k
    idx = np.arange(len(uniq))
    sse_path = []
    assign = None
    stop_next = False
    for _ in range(cfg.max_iters):
        d2 = _sqdist(uniq, centroids)
        new_assign = d2.argmin(axis=1)  # argmin takes the lowest index on ties
        cost = d2[idx, new_assign]
        stable = assign is not None and np.array_equal(new_assign, assign)
        assign = new_assign
        sse_path.append(float(weights @ cost))
        if stable or stop_next:
            break

        new_centroids, w_per = _weighted_centroids(uniq, weights, assign, k)
        guard = 0
        while np.any(w_per == 0):
            if guard >= k:
                raise ValueError("could not repair empty cluster (degenerate data)")
            # reseed each empty cluster with the point currently farthest
            # from its assigned centroid; placing a centroid on a data
            # point never raises any point's cost, so Lloyd stays monotone
            spent = cost.copy()
            for j in np.flatnonzero(w_per == 0):
                far = int(spent.argmax())
                new_centroids[j] = uniq[far]
                spent[far] = -1.0
                guard += 1
            d2 = _sqdist(uniq, new_centroids)
            assign = d2.argmin(axis=1)
            cost = d2[idx, assign]
            new_centroids, w_per = _weighted_centroids(uniq, weights, assign, k)

        shift = np.abs(new_centroids - centroids).max()
        centroids = new_centroids
        if shift < cfg.tol:
            stop_next = True
    return centroids, assign, sse_path[-1], tuple(sse_path)


def kmeans_fit(words, cfg: ClusterConfig) -> ClusterModel:
    """Best-SSE model over ``cfg.n_init`` seeded k-means++ restarts."""
    x = _embedding_matrix(words)
    if len(x) < cfg.k:
        raise ValueError(f"need at least k={cfg.k} points, got {len(x)}")
    uniq, inverse, counts = np.unique(
        x, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    if len(uniq) < cfg.k:
        raise ValueError(
            f"k={cfg.k} exceeds the {len(uniq)} distinct embedding vectors"
        )
    weights = counts.astype(float)

    best = None
    paths = []
    for restart in range(cfg.n_init):
        rng = np.random.default_rng([cfg.seed, restart])
        init = _kmeanspp_init(uniq, weights, cfg.k, rng)
        centroids, assign_u, sse, path = _lloyd(uniq, weights, init, cfg)
        paths.append(path)
        if best is None or sse < best[2]:
            best = (centroids, assign_u, sse, restart)

    centroids, assign_u, sse, best_restart = best
    assignments = assign_u[inverse]
    sizes = np.bincount(assignments, minlength=cfg.k)
    return ClusterModel(
        centroids=centroids,
        assignments=assignments,
        sse=sse,
        sizes=sizes,
        config=cfg,
        sse_paths=tuple(paths),
        best_restart=best_restart,
    )


def assign(model: ClusterModel, word) -> int:
    """Index of the nearest centroid (ties go to the lowest index)."""
    e = word if isinstance(word, np.ndarray) else word.embedding
    e = np.asarray(e, dtype=float)
    if e.shape != (model.centroids.shape[1],):
        raise ValueError(
            f"embedding length {e.shape} does not match centroids "
            f"({model.centroids.shape[1]})"
        )
    return int(_sqdist(e[None, :], model.centroids)[0].argmin())


def assign_many(model: ClusterModel, words) -> np.ndarray:
    x = _embedding_matrix(words)
    if x.shape[1] != model.centroids.shape[1]:
        raise ValueError("embedding length does not match centroids")
    return _sqdist(x, model.centroids).argmin(axis=1)


def silhouette(words, assignments) -> float:
    """Mean silhouette score over points, Euclidean distance on embeddings.

    Points in singleton clusters score 0, as do points with zero mean
    distance both within and across clusters. Computed exactly on
    (unique embedding, label) groups, chunked so no full n-by-n distance
    matrix is ever materialized.
    """
    x = _embedding_matrix(words)
    labels = np.asarray(assignments)
    if len(labels) != len(x):
        raise ValueError("assignments length does not match words")
    label_values, label_idx = np.unique(labels, return_inverse=True)
    n_clusters = len(label_values)
    if n_clusters < 2:
        raise ValueError("silhouette requires at least 2 clusters")

    uniq, inverse = np.unique(x, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    # multiplicity of each (unique point, cluster) pair
    member_counts = np.zeros((len(uniq), n_clusters))
    np.add.at(member_counts, (inverse, label_idx), 1.0)
    cluster_sizes = member_counts.sum(axis=0)

    total = 0.0
    chunk = max(1, int(4e6) // max(1, len(uniq)))
    for start in range(0, len(uniq), chunk):
        stop = min(start + chunk, len(uniq))
        d = np.sqrt(_sqdist(uniq[start:stop], uniq))
        dist_sums = d @ member_counts  # (rows, n_clusters)
        mean_dist = dist_sums / cluster_sizes[None, :]
        # score every (unique point, own cluster) pair in the chunk
        rows, own = np.nonzero(member_counts[start:stop] > 0)
        size_own = cluster_sizes[own]
        a = dist_sums[rows, own] / np.maximum(size_own - 1, 1)
        masked = mean_dist[rows].copy()
        masked[np.arange(len(rows)), own] = np.inf
        b = masked.min(axis=1)
        denom = np.maximum(a, b)
        score = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        score = np.where(size_own <= 1, 0.0, score)  # singletons score 0
        total += float(member_counts[start + rows, own] @ score)
    return total / len(x)


def select_k(words, k_range, cfg_template: ClusterConfig) -> KSelectionReport:
    """Fit every K in the inclusive range and pick one.

    The elbow is the smallest K* past which every relative SSE drop is
    below 10%; the chosen K maximizes silhouette among K >= K*, with
    ties going to the smaller K. Per-K seeds are derived as seed + K so
    the sweep parallelizes without changing results.
    """
    k_values = list(k_range) if not isinstance(k_range, tuple) else list(
        range(k_range[0], k_range[1] + 1)
    )
    if not k_values:
        raise ValueError("empty k range")
    if sorted(k_values) != k_values or len(set(k_values)) != len(k_values):
        raise ValueError("k range must be strictly ascending")
    x = _embedding_matrix(words)
    if k_values[0] < 2 or k_values[-1] > len(x) - 1:
        raise ValueError(f"k range must lie within [2, {len(x) - 1}]")

    rows = []
    for k in k_values:
        cfg = replace(cfg_template, k=k, seed=cfg_template.seed + k)
        model = kmeans_fit(x, cfg)
        score = silhouette(x, model.assignments)
        rows.append((k, model.sse, score))

    sse = {k: s for k, s, _ in rows}
    sil = {k: s for k, _, s in rows}
    drops = {}
    for k, k_next in zip(k_values, k_values[1:]):
        drops[k] = 0.0 if sse[k] == 0 else (sse[k] - sse[k_next]) / sse[k]

    elbow = k_values[-1]
    for k in k_values:
        if all(drops[j] < 0.10 for j in k_values[:-1] if j >= k):
            elbow = k
            break
    candidates = [k for k in k_values if k >= elbow]
    chosen = max(candidates, key=lambda k: (sil[k], -k))
    return KSelectionReport(rows=tuple(rows), chosen_k=chosen)


K_REPORT_HEADER = ["k", "sse", "silhouette"]


def report_to_csv_rows(report: KSelectionReport) -> list[list[str]]:
    return [[str(k), repr(float(s)), repr(float(sil))] for k, s, sil in report.rows]


def model_to_json(model: ClusterModel) -> str:
    payload = {
        "k": model.config.k,
        "centroids": [list(map(float, c)) for c in model.centroids],
        "sizes": [int(s) for s in model.sizes],
        "sse": model.sse,
        "config": {
            "k": model.config.k,
            "max_iters": model.config.max_iters,
            "tol": model.config.tol,
            "n_init": model.config.n_init,
            "seed": model.config.seed,
        },
        "seed": model.config.seed,
    }
    return json.dumps(payload, indent=2) + "\n"


def model_from_json(text: str) -> ClusterModel:
    payload = json.loads(text)
    cfg = ClusterConfig(**payload["config"])
    centroids = np.array(payload["centroids"], dtype=float)
    sizes = np.array(payload["sizes"], dtype=np.int64)
    # assignments are not serialized; reconstructed models carry an
    # empty assignment vector and are used for out-of-sample assignment
    return ClusterModel(
        centroids=centroids,
        assignments=np.zeros(0, dtype=np.int64),
        sse=float(payload["sse"]),
        sizes=sizes,
        config=cfg,
    )

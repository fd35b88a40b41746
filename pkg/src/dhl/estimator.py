"""Estimator-style wrapper: ``fit`` builds the index, ``predict`` answers queries."""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .graph import Graph, UpdateBatch
from .labelling import HierarchicalIndex, query_many
from .maintenance import MaintenanceReport, apply_batch


def check_graph(X) -> Graph:
    """Accept a :class:`Graph` or an ``(m, 3)`` array of 0-based ``u v w`` rows."""
    if isinstance(X, Graph):
        return X
    rows = check_array(X, dtype=np.int64, ensure_min_samples=1)
    if rows.shape[1] != 3:
        raise ValueError(f"edge array must have 3 columns, got {rows.shape[1]}")
    return Graph.from_edges(int(rows[:, :2].max()) + 1, rows)


def check_pairs(X, n: int) -> np.ndarray:
    pairs = check_array(X, dtype=np.int64, ensure_min_samples=0)
    if pairs.shape[1] != 2:
        raise ValueError(f"pair array must have 2 columns, got {pairs.shape[1]}")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise IndexError(f"vertex ids must lie in [0, {n})")
    return pairs


class DynamicDistanceIndex(BaseEstimator):
    """Exact distance oracle for a weighted undirected graph with mutable weights.

    Parameters
    ----------
    beta : float
        Balance parameter of the separator tree, in (0, 0.5].
    leaf_size : int
        Subgraphs with at most this many vertices are not split further.
    seed : int
        Seed for the separator search.
    mode : {"sequential", "parallel"}
        Label maintenance strategy used by :meth:`update`.
    workers : int
        Thread count for parallel maintenance.
    """

    def __init__(self, beta: float = 0.2, leaf_size: int = 16, seed: int = 0, mode: str = "sequential",
                 workers: int = 2):
        self.beta = beta
        self.leaf_size = leaf_size
        self.seed = seed
        self.mode = mode
        self.workers = workers

    def fit(self, X, y=None):
        graph = check_graph(X)
        self.index_ = HierarchicalIndex.build(graph.copy(), beta=self.beta, leaf_size=self.leaf_size,
                                              seed=self.seed)
        self.n_vertices_ = graph.n
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "index_")
        pairs = check_pairs(X, self.n_vertices_)
        return query_many(self.index_, pairs[:, 0], pairs[:, 1])

    def update(self, batch) -> MaintenanceReport:
        """Apply ``(u, v, new_weight)`` updates and repair the index in place."""
        check_is_fitted(self, "index_")
        if not isinstance(batch, UpdateBatch):
            batch = UpdateBatch(batch)
        return apply_batch(self.index_, batch, mode=self.mode, workers=self.workers)

    @property
    def graph_(self) -> Optional[Graph]:
        check_is_fitted(self, "index_")
        return self.index_.graph

"""Clustering of the ego second-neighborhood graph."""
from dataclasses import dataclass

import numpy as np

from egp import kernels
from egp.rng import stream


@dataclass(frozen=True, eq=False)
class Clustering:
    cluster_of: np.ndarray  # ego position -> dense cluster id

    @property
    def n_clusters(self):
        return int(self.cluster_of.max()) + 1 if self.cluster_of.size else 0

    @property
    def sizes(self):
        return np.bincount(self.cluster_of, minlength=self.n_clusters)


def label_propagation(sg, rng_seed, max_iters=20):
    """Asynchronous label propagation over an :class:`EgoSubgraph`.

    Every ego starts with its own label. Each sweep visits egos in a fresh
    seeded random order and moves each one to the most frequent label among
    its neighbors, breaking ties toward the smallest label. Stops at a sweep
    with no change or after ``max_iters`` sweeps.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    labels = np.arange(sg.size, dtype=np.int64)
    rng = stream(rng_seed, "lpa")
    for _ in range(max_iters):
        order = rng.permutation(sg.size).astype(np.int64)
        if kernels.lpa_sweep(sg.indptr, sg.indices, labels, order) == 0:
            break
    _, dense = np.unique(labels, return_inverse=True)
    return Clustering(dense.astype(np.int64))

"""Hot graph kernels, each with a numba path and a pure-numpy path.

Every kernel writes each output slot from exactly one loop iteration and sums
neighbors in adjacency order, so results do not depend on the thread count
and the two backends agree bit for bit.
"""
import numpy as np

from egp._accel import HAS_NUMBA, njit, prange, serial_only


def _row_positions(indptr, rows):
    # flat positions into `indices` for the concatenated neighbor lists of `rows`
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), lens
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return np.arange(total, dtype=np.int64) + offsets, lens


def neighbor_sums_numpy(indptr, indices, weights, rows):
    """out[r] = sum of weights[k] over k in N(rows[r]), in adjacency order."""
    pos, lens = _row_positions(indptr, rows)
    owner = np.repeat(np.arange(rows.size, dtype=np.int64), lens)
    return np.bincount(owner, weights=weights[indices[pos]], minlength=rows.size).astype(np.float64)


def _neighbor_sums_loop(indptr, indices, weights, rows):
    out = np.zeros(rows.size, dtype=np.float64)
    for r in prange(rows.size):
        i = rows[r]
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += weights[indices[p]]
        out[r] = acc
    return out


def second_neighbor_pairs_numpy(indptr, indices, egos):
    """Ego-index pairs (a, b), a < b, that are non-adjacent with a common neighbor."""
    n = indptr.size - 1
    ego_index = np.full(n, -1, dtype=np.int64)
    ego_index[egos] = np.arange(egos.size)
    src, dst = [], []
    for a_idx, a in enumerate(egos):
        nbrs = indices[indptr[a]:indptr[a + 1]]
        if nbrs.size == 0:
            continue
        pos, _ = _row_positions(indptr, nbrs)
        two_hop = np.unique(indices[pos])
        two_hop = two_hop[ego_index[two_hop] > a_idx]
        two_hop = two_hop[~np.isin(two_hop, nbrs, assume_unique=True)]
        if two_hop.size:
            src.append(np.full(two_hop.size, a_idx, dtype=np.int64))
            dst.append(ego_index[two_hop])
    if not src:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(src), np.concatenate(dst)


@njit(cache=True, nogil=True)
def _second_neighbor_pairs_nb(indptr, indices, egos):
    n = indptr.size - 1
    ego_index = np.full(n, -1, dtype=np.int64)
    for e in range(egos.size):
        ego_index[egos[e]] = e
    adj_stamp = np.full(n, -1, dtype=np.int64)
    seen_stamp = np.full(n, -1, dtype=np.int64)
    hits = np.zeros(n, dtype=np.int64)
    src = np.empty(16, dtype=np.int64)
    dst = np.empty(16, dtype=np.int64)
    count = 0
    for a_idx in range(egos.size):
        a = egos[a_idx]
        for p in range(indptr[a], indptr[a + 1]):
            adj_stamp[indices[p]] = a_idx
        nhit = 0
        for p in range(indptr[a], indptr[a + 1]):
            k = indices[p]
            for q in range(indptr[k], indptr[k + 1]):
                b = indices[q]
                if ego_index[b] > a_idx and adj_stamp[b] != a_idx and seen_stamp[b] != a_idx:
                    seen_stamp[b] = a_idx
                    hits[nhit] = ego_index[b]
                    nhit += 1
        if nhit == 0:
            continue
        found = np.sort(hits[:nhit])
        while count + nhit > src.size:
            src = np.concatenate((src, np.empty(src.size, dtype=np.int64)))
            dst = np.concatenate((dst, np.empty(dst.size, dtype=np.int64)))
        for t in range(nhit):
            src[count] = a_idx
            dst[count] = found[t]
            count += 1
    return src[:count], dst[:count]


def _lpa_sweep(indptr, indices, labels, order):
    """One asynchronous sweep; returns how many nodes changed label."""
    changed = 0
    buf = np.empty(indptr[-1] if indptr.size else 0, dtype=np.int64)
    for t in range(order.size):
        v = order[t]
        lo = indptr[v]
        hi = indptr[v + 1]
        if hi == lo:
            continue
        k = hi - lo
        for p in range(k):
            buf[p] = labels[indices[lo + p]]
        cand = np.sort(buf[:k])
        best = cand[0]
        best_count = 0
        run = 1
        for p in range(1, k + 1):
            if p < k and cand[p] == cand[p - 1]:
                run += 1
                continue
            # strict > keeps the smallest label among equal pluralities
            if run > best_count:
                best_count = run
                best = cand[p - 1]
            run = 1
        if best != labels[v]:
            labels[v] = best
            changed += 1
    return changed


if HAS_NUMBA:
    _neighbor_sums_par = njit(parallel=True, cache=True, nogil=True)(_neighbor_sums_loop)
    _neighbor_sums_ser = njit(cache=True, nogil=True)(_neighbor_sums_loop)
    _lpa_sweep_nb = njit(cache=True, nogil=True)(_lpa_sweep)


def neighbor_sums(indptr, indices, weights, rows):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if not HAS_NUMBA:
        return neighbor_sums_numpy(indptr, indices, weights, rows)
    kernel = _neighbor_sums_ser if serial_only() else _neighbor_sums_par
    return kernel(indptr, indices, weights, rows)


def second_neighbor_pairs(indptr, indices, egos):
    egos = np.ascontiguousarray(egos, dtype=np.int64)
    if not HAS_NUMBA:
        return second_neighbor_pairs_numpy(indptr, indices, egos)
    return _second_neighbor_pairs_nb(indptr, indices, egos)


def lpa_sweep(indptr, indices, labels, order):
    """Mutates ``labels`` in place."""
    if not HAS_NUMBA:
        return _lpa_sweep(indptr, indices, labels, order)
    return _lpa_sweep_nb(indptr, indices, labels, order)

"""
Cell-linked-list neighbor search and the per-pair penalty accumulator.

The neighbor table is stored flat (CSR style): directed pairs (i, j) sorted by
i then j (by i only for non-deterministic builds), with both orientations
present. Every unordered pair also has one canonical slot (lower id first),
ordered by key, that the penalty accumulator is keyed on.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from errors import NonFiniteStateError
from kernel import kernel_grad_mag

logger = logging.getLogger(__name__)


@dataclass
class NeighborTable:
    n: int
    dim: int
    cutoff: float
    i: np.ndarray            # (P,) owner of each directed pair
    j: np.ndarray            # (P,) neighbor id
    offsets: np.ndarray      # (n+1,) CSR offsets into i/j
    r: np.ndarray            # (P, d) r_i - r_j
    dist: np.ndarray         # (P,) |r_ij|
    e: np.ndarray            # (P, d) unit vector from j to i
    dWdr: np.ndarray         # (P,) cached kernel derivative
    pair_i: np.ndarray       # (Q,) canonical pairs, pair_i < pair_j
    pair_j: np.ndarray
    pair_index: np.ndarray   # (P,) canonical slot of each directed pair
    pair_sign: np.ndarray    # (P,) +1 when i < j, -1 otherwise
    canonical: np.ndarray    # (Q,) directed entry holding each canonical pair

    def __len__(self):
        return len(self.i)

    @property
    def pair_count(self):
        return len(self.pair_i)

    def neighbors_of(self, k):
        """ids of the neighbors of particle k, ascending when built deterministically"""
        return self.j[self.offsets[k]:self.offsets[k + 1]]

    def counts(self):
        return np.diff(self.offsets)

    def pair_keys(self):
        return self.pair_i * self.n + self.pair_j

    def pairs(self):
        """set of unordered pairs (i, j), i < j"""
        return set(zip(self.pair_i.tolist(), self.pair_j.tolist()))

    def refresh(self, positions, kernel=None):
        """
        recompute the cached pair geometry from the current positions, keeping the topology
        input -- positions = (n, d) array, kernel = KernelSpec used for dW/dr (optional)
        """
        self.r = positions[self.i] - positions[self.j]
        self.dist = np.sqrt(np.einsum('pa,pa->p', self.r, self.r))
        safe = np.where(self.dist > 0.0, self.dist, 1.0)
        self.e = np.where((self.dist > 0.0)[:, None], self.r / safe[:, None], 0.0)
        if kernel is not None:
            self.dWdr = kernel_grad_mag(self.dist, kernel)
        return self

    def gather(self, values):
        """
        sum per-pair values onto their owner particle i, in fixed pair order
        :param values: array of shape (P, ...)
        :return: array of shape (n, ...)
        """
        values = np.asarray(values, dtype=float)
        flat = values.reshape(len(values), -1)
        out = np.empty((self.n, flat.shape[1]))
        for c in range(flat.shape[1]):
            out[:, c] = np.bincount(self.i, weights=flat[:, c], minlength=self.n)
        return out.reshape((self.n,) + values.shape[1:])


def _candidates(offset, shifted, dims, sorted_cells, order):
    # all (i, j) with j in the cell displaced by `offset` from i's cell
    target = np.ravel_multi_index((shifted + np.asarray(offset)).T, dims)
    start = np.searchsorted(sorted_cells, target, side='left')
    end = np.searchsorted(sorted_cells, target, side='right')
    counts = end - start
    total = int(counts.sum())
    owners = np.repeat(np.arange(len(shifted)), counts)
    within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    others = order[np.repeat(start, counts) + within]
    return owners, others


def build(positions, cutoff, domain_bounds=None, kernel=None, workers=1, deterministic=True):
    """
    cell-linked-list neighbor search
    :param positions: (n, d) array of finite positions
    :param cutoff: support radius, cell size
    :param domain_bounds: optional (lower, upper) corners; the grid origin is the lower corner
    :param kernel: KernelSpec used to cache dW/dr
    :param workers: threads scanning the 3^d cell offsets
    :param deterministic: canonical per-list order (sorted by neighbor id) regardless of threads
    :return: NeighborTable with j in N(i) iff j != i and |r_ij| < cutoff
    """
    positions = np.asarray(positions, dtype=float)
    if not cutoff > 0:
        raise ValueError('cutoff must be positive, got %r' % (cutoff,))
    n, dim = positions.shape
    bad = ~np.isfinite(positions).all(axis=1)
    if bad.any():
        particle = int(np.flatnonzero(bad)[0])
        raise NonFiniteStateError('non-finite position of particle %d' % particle, particle=particle)

    if n == 0:
        lower = np.zeros(dim)
    else:
        lower = positions.min(axis=0)
    if domain_bounds is not None:
        lower = np.minimum(lower, np.asarray(domain_bounds[0], dtype=float))
    cells = np.floor((positions - lower) / cutoff).astype(np.int64)
    # one layer of empty padding cells so every offset stays on the grid
    shifted = cells + 1
    dims = tuple((cells.max(axis=0) + 3) if n else np.full(dim, 3))
    cell_id = np.ravel_multi_index(shifted.T, dims) if n else np.zeros(0, dtype=np.int64)
    order = np.argsort(cell_id, kind='stable')
    sorted_cells = cell_id[order]

    offsets = list(itertools.product((-1, 0, 1), repeat=dim))
    scan = lambda off: _candidates(off, shifted, dims, sorted_cells, order)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            if deterministic:
                parts = list(pool.map(scan, offsets))
            else:
                futures = [pool.submit(scan, off) for off in offsets]
                parts = [f.result() for f in as_completed(futures)]
    else:
        parts = [scan(off) for off in offsets]

    cutoff2 = cutoff * cutoff
    owners, others = [], []
    for a, b in parts:
        keep = a != b
        a, b = a[keep], b[keep]
        d = positions[a] - positions[b]
        inside = np.einsum('pa,pa->p', d, d) < cutoff2
        owners.append(a[inside])
        others.append(b[inside])
    i = np.concatenate(owners) if owners else np.zeros(0, dtype=np.int64)
    j = np.concatenate(others) if others else np.zeros(0, dtype=np.int64)
    if deterministic:
        sort = np.lexsort((j, i))
    else:
        # per-particle neighbor order then depends on the merge order
        sort = np.argsort(i, kind="quicksort")
    i, j = i[sort].astype(np.int64), j[sort].astype(np.int64)

    offsets_csr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(i, minlength=n), out=offsets_csr[1:])

    canonical = np.flatnonzero(i < j)
    # canonical slots ascend by key in both modes; searchsorted, read and carry_over rely on it
    canonical = canonical[np.argsort(i[canonical] * n + j[canonical], kind='stable')]
    pair_i, pair_j = i[canonical], j[canonical]
    keys = pair_i * n + pair_j
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    pair_index = np.searchsorted(keys, lo * n + hi)
    pair_sign = np.where(i < j, 1.0, -1.0)

    table = NeighborTable(
        n=n, dim=dim, cutoff=cutoff, i=i, j=j, offsets=offsets_csr,
        r=np.zeros((len(i), dim)), dist=np.zeros(len(i)), e=np.zeros((len(i), dim)),
        dWdr=np.zeros(len(i)), pair_i=pair_i, pair_j=pair_j, pair_index=pair_index,
        pair_sign=pair_sign, canonical=canonical)
    table.refresh(positions, kernel)
    logger.debug('neighbor table: %d particles, %d pairs', n, len(pair_i))
    return table


@dataclass
class PairAccumulator:
    """
    time-integrated penalty force per unordered pair, stored once with the
    lower id first; reading the pair as (j, i) flips the sign
    """
    n: int
    keys: np.ndarray     # (Q,) sorted canonical keys i*n + j
    values: np.ndarray   # (Q, d)

    @classmethod
    def zeros(cls, table):
        return cls(n=table.n, keys=table.pair_keys(), values=np.zeros((table.pair_count, table.dim)))

    def oriented(self, table):
        """per directed pair of `table`: F_ij for i < j, -F_ji otherwise"""
        return self.values[table.pair_index] * table.pair_sign[:, None]

    def read(self, i, j):
        lo, hi = min(i, j), max(i, j)
        k = np.searchsorted(self.keys, lo * self.n + hi)
        if k >= len(self.keys) or self.keys[k] != lo * self.n + hi:
            return np.zeros(self.values.shape[1])
        sign = 1.0 if i < j else -1.0
        return sign * self.values[k]


def carry_over(old, new_table):
    """
    move the accumulated penalty onto a rebuilt neighbor table
    input -- old = PairAccumulator of the previous configuration, new_table = NeighborTable
    Returns:
    return -- accumulator keyed on new_table's pairs: persisting pairs keep their value,
              new pairs start at zero, departed pairs are dropped
    """
    fresh = PairAccumulator.zeros(new_table)
    if old is None or len(old.keys) == 0 or old.n != new_table.n:
        return fresh
    _, old_idx, new_idx = np.intersect1d(old.keys, fresh.keys, assume_unique=True, return_indices=True)
    fresh.values[new_idx] = old.values[old_idx]
    return fresh
